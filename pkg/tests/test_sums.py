import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollo3 import sums
from apollo3.spin import ShiftedForm, shifted_form

ROOT = (-1, 2, 2, 3)
TOL = 1e-9


@given(st.integers(1, 120), st.integers(-500, 500))
def test_ramanujan_closed_form(q, n):
    assert abs(sums.ramanujan_c(q, n) - sums.ramanujan_brute(q, n)) < TOL


def test_ramanujan_special_values():
    assert sums.ramanujan_c(12, 0) == 4  # Euler phi
    assert sums.ramanujan_c(7, 1) == -1  # Moebius
    with pytest.raises(ValueError):
        sums.ramanujan_c(0, 1)


@given(st.integers(1, 40).map(lambda k: 2 * k + 1), st.integers(1, 200))
def test_gauss_closed_form(q, r):
    if math.gcd(r, q) != 1:
        with pytest.raises(sums.NotCoprime):
            sums.gauss_quadratic(q, r)
        return
    assert abs(sums.gauss_quadratic(q, r) - sums.gauss_quadratic_brute(q, r)) < TOL


def test_gauss_rejects_even_modulus():
    with pytest.raises(sums.EvenModulus):
        sums.gauss_quadratic(8, 1)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 17])
def test_kloosterman_weil_bound_at_primes(p):
    for m in range(1, p):
        assert abs(sums.kloosterman(m, 1, p)) <= 2 * math.sqrt(p) + TOL


@pytest.mark.parametrize("q", [13, 15, 21])
def test_kloosterman_parity(q):
    # x -> -x gives S = chi(-1) * conj(S): real for even chi, imaginary for odd chi
    chi = sums.DirichletCharacter(q, "jacobi")
    s = sums.kloosterman(2, 3, q, chi)
    if chi(-1) == 1:
        assert abs(s.imag) < TOL
    else:
        assert abs(s.real) < TOL


def test_kloosterman_sweep_kinds():
    rows = sums.kloosterman_sweep((7, 15), ((1, 1),))
    assert {r["chi"] for r in rows} == {"trivial", "jacobi"}
    with pytest.raises(sums.EvenModulus):
        sums.DirichletCharacter(8, "jacobi")


def test_sf_closed_form_matches_brute_force():
    worst = max(abs(sums.sf_sum_closed(*t) - sums.sf_sum_brute(*t))
                for t in sums.random_sf_tuples(200, seed=3))
    assert worst < TOL


def test_sf_closed_form_hypotheses():
    f = shifted_form(ROOT)
    with pytest.raises(sums.EvenModulus):
        sums.sf_sum_closed(8, 1, 0, 0, f)
    with pytest.raises(sums.NotCoprime):
        sums.sf_sum_closed(9, 3, 0, 0, f)
    g = ShiftedForm(3, 1, 3, 1)
    with pytest.raises(sums.NotInvertible):
        sums.sf_sum_closed(9, 1, 0, 0, g)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_local_factor_closed_form_is_exact(p):
    for n in range(p):
        assert sums.local_factor(p, n).value == sums.local_factor(p, n, brute=True).value
        assert isinstance(sums.local_factor(p, n).value, Fraction)


def test_two_adic_factor():
    vals = [sums.two_adic_factor(n) for n in range(8)]
    assert vals == [0, 0, 8, 0, 8, 0, 0, 8]
    for slot in sums.two_adic_slots(2, ROOT).values():
        assert slot in (0, 8)


def test_higher_levels_vanish():
    for q in (9, 16):
        for n in range(q):
            assert sums.local_density(ROOT, q, n) == 0


def test_singular_series_positive_exactly_on_admissible():
    ns = np.arange(1, 2000)
    s = sums.singular_series_array(ns)
    adm = np.isin(ns % 8, [2, 4, 7])
    assert (s[adm] > 0).all() and (s[~adm] == 0).all()
    assert float(sums.singular_series(31)) == pytest.approx(s[30], rel=1e-12)
    with pytest.raises(ValueError):
        sums.singular_series(31, Q0=5)


def test_singular_series_bounded_on_admissible():
    ns = np.arange(1, 200001)
    ns = ns[np.isin(ns % 8, [2, 4, 7])]
    s = sums.singular_series_array(ns, Q0=200)
    assert 4 < s.min() and s.max() < 14


def test_ideal_divisor_counts():
    assert sums.ideal_divisor_count(1) == 1
    assert sums.ideal_divisor_count(2) == 3    # ramified
    assert sums.ideal_divisor_count(3) == 4    # split: (1 + sqrt-2)(1 - sqrt-2)
    assert sums.ideal_divisor_count(5) == 2    # inert
    assert sums.divisors(12) == [1, 2, 3, 4, 6, 12]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000))
def test_representations_within_divisor_bound(z):
    f = shifted_form(ROOT)
    m = sums.claim3_monitor(f, z)
    assert m["pairs"] <= m["bound"]
    for x, y in sums.representation_pairs(f, z):
        assert f.unshifted(x, y) == z


def test_form_congruence_count_brute():
    f = shifted_form(ROOT)
    W, d = 30, 7
    direct = sum(1 for m in range(1, W + 1) for n in range(1, W + 1) if f.unshifted(m, n) % d == 0)
    assert sums.form_congruence_count(f, d, W) == direct
    flipped = sum(1 for m in range(1, W + 1) for n in range(1, W + 1) if f.unshifted(m, -n) % d == 0)
    assert sums.form_congruence_count(f, d, W, sign=-1) == flipped


def test_representation_count_hits_known_curvature():
    cnt = sums.representation_count(200)
    assert cnt[31] > 0
    assert all(n % 8 in (2, 4, 7) for n in cnt if n > 0)


def test_verify_sums_report():
    report = sums.verify_sums(ROOT, sf_count=50, ramanujan_max=60, gauss_max=31)
    assert all(r["pass"] for r in report)
