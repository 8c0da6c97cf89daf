import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apollo3 import orbits, quadratic_core as qc
from apollo3.residues import is_admissible

ROOT = (-1, 2, 2, 3)


def test_known_small_curvatures():
    s = orbits.curvature_set(ROOT, 60)
    assert s.values()[:8] == [-1, 2, 4, 7, 10, 12, 15, 18]
    assert -1 in s and 2 in s and 3 not in s and 61 not in s


def test_three_oracles_agree_at_500():
    fast = set(orbits.curvature_set(ROOT, 500).values())
    assert fast == orbits.curvature_set_exact(ROOT, 500)
    assert fast == orbits.curvatures_by_gap_bound(ROOT, 500)
    assert fast == orbits.unpruned_curvatures(ROOT, 8, 500)
    assert len(fast) == 181


@pytest.mark.parametrize("threads", [2, 4])
def test_thread_count_does_not_change_result(threads):
    a = orbits.curvature_set(ROOT, 20000)
    b = orbits.curvature_set(ROOT, 20000, threads=threads)
    assert np.array_equal(a.member, b.member)
    assert np.array_equal(a.counts, b.counts)


def test_circle_counts():
    assert orbits.count_circles(ROOT, 1000) == 2102
    # exact traversal counts each created circle once
    s = orbits.curvature_set(ROOT, 300)
    n = sum(1 for c in ROOT[:3] + tuple(2 * ROOT[3] - k for k in ROOT[:3]) if 0 < c <= 300)
    for quad, lab in orbits.enumerate_quadruples(ROOT, 300):
        if lab is not None:
            n += sum(1 for c in orbits._new_circles(quad, lab) if 0 < c <= 300)
    assert n == s.circle_count()


def test_binary_round_trip():
    s = orbits.curvature_set(ROOT, 1000)
    data = s.to_bytes()
    assert data[:8] == b"APL3SET1"
    t = orbits.CurvatureSet.from_bytes(data)
    assert t.values() == s.values()
    with pytest.raises(ValueError):
        orbits.CurvatureSet.from_bytes(b"XXXXXXXX" + data[8:])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3000))
def test_members_are_admissible(n):
    s = orbits.curvature_set(ROOT, 3000)
    if n in s:
        assert is_admissible(ROOT, n)


def test_density_report():
    rows = orbits.density_report(ROOT, 10000)
    assert [r["class"] for r in rows] == list(range(8))
    assert {r["class"] for r in rows if r["count_represented"]} == {2, 4, 7}
    assert all(0 <= r["fraction"] <= 1 for r in rows)
    assert all(r["count_admissible"] == 1250 for r in rows if r["admissible"])


def test_growth_exponent_checks_input():
    with pytest.raises(orbits.InsufficientPointsError):
        orbits.estimate_growth_exponent(ROOT, [10, 100, 1000])
    with pytest.raises(ValueError):
        orbits.estimate_growth_exponent(ROOT, [100, 10, 1000, 2000])
    g = orbits.estimate_growth_exponent(ROOT, [1000, 2000, 4000, 8000])
    assert 1 < g.delta_hat < 2
    assert g.points[0] == (1000, 2102)


def test_other_root():
    root = (2, 2, 7, 3)
    assert qc.eval_Q(root) == 0
    s = set(orbits.curvature_set(root, 400).values())
    assert s == orbits.unpruned_curvatures(root, 9, 400)
