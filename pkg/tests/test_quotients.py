import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollo3 import quotients as qt
from apollo3.residues import BudgetExceeded
from apollo3.spin import M


def test_generating_set():
    S = qt.generating_set()
    assert len(S) == 14
    for _, g in S:
        assert g.det() == (1, 0)


@settings(max_examples=50)
@given(st.integers(2, 40), st.integers(0, 10**6))
def test_row_product_matches_exact_product(q, seed):
    rng = np.random.default_rng(seed)
    i, j = rng.integers(1, 8, size=2)
    g, h = M[int(i)], M[int(j)]
    lhs = qt.mat_mul_rows(qt.mobius_row(g, q), qt.mobius_row(h, q), q)[0]
    assert np.array_equal(lhs, qt.mobius_row(g @ h, q))
    assert np.array_equal(qt.det_rows(qt.mobius_row(g, q)[None], q)[0], [1 % q, 0])
    inv = qt.inverse_rows(qt.mobius_row(g, q)[None], q)
    assert np.array_equal(inv[0], qt.mobius_row(g.inv(), q))


def test_ring_element():
    x = qt.RingElement(1, 1, 5)
    assert x * x == qt.RingElement(4, 2, 5)  # (1 + s)^2 = 1 + 2s - 2
    assert x + x == qt.RingElement(2, 2, 5)


def test_encode_round_trip():
    rows = np.random.default_rng(0).integers(0, 17, size=(100, 8))
    assert np.array_equal(qt.decode(qt.encode(rows, 17), 17), rows)


@pytest.mark.parametrize("q,order", [(2, 1), (3, 192), (4, 8), (5, 15600), (8, 256)])
def test_closure_orders(q, order):
    G = qt.quotient_closure(q)
    assert len(G) == order
    assert qt.check_inverse_closed(G)


def test_full_at_five():
    G = qt.quotient_closure(5)
    assert np.array_equal(G.keys, qt.sl2_enumeration(5))
    assert qt.sl2_order(5) == 15600


@pytest.mark.parametrize("q", [3, 5, 7, 9, 11, 13, 8, 16, 15])
def test_sl2_order_formula_small(q):
    if q in (3, 5):
        assert len(qt.sl2_enumeration(q)) == qt.sl2_order(q)
    assert qt.sl2_order(q) > 0


def test_crt_and_reduction():
    assert len(qt.quotient_closure(24)) == len(qt.quotient_closure(8)) * len(qt.quotient_closure(3))
    assert qt.check_reduction(24, 8) and qt.check_reduction(24, 3)
    with pytest.raises(ValueError):
        qt.check_reduction(24, 5)


def test_budget_refusals():
    with pytest.raises(BudgetExceeded):
        qt.quotient_closure(35)
    with pytest.raises(BudgetExceeded):
        qt.quotient_closure(5, budget=1000)
    with pytest.raises(ValueError):
        qt.quotient_closure(1)
    with pytest.raises(BudgetExceeded):
        qt.sl2_enumeration(11, budget=10**6)


def test_cayley_graph_is_regular_and_symmetric():
    G = qt.quotient_closure(8)
    C = qt.cayley_graph(G)
    assert C.degree == 14
    A = C.markov()
    assert np.allclose(A.sum(axis=1), 1)
    assert abs(A - A.T).max() < 1e-15  # generating set is inverse-closed
    buf = io.StringIO()
    C.export(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == len(G) and len(lines[0].split()) == 15


@pytest.mark.parametrize("q,gap", [(5, 0.2781), (8, 0.2857)])
def test_spectral_gap(q, gap):
    s = qt.spectral_gap(q)
    assert s.gap == pytest.approx(gap, abs=1e-4)
    assert s.lambda1 < 1 - 1e-6


def test_stabilizer_subgroups_mod_five():
    for which in ("C3", "C1", "C3'"):
        H = qt.quotient_closure(5, which=which)
        assert len(H) == 120
        G = qt.quotient_closure(5)
        assert G.contains(H.rows).all()
    with pytest.raises(ValueError):
        qt.subgroup_generators("C2")


def test_combination_bound_report():
    r = qt.varju_report(5)
    assert r["pass"]
    assert r["k"] >= 1
    assert r["predicted"] <= r["measured"]
