"""Enumeration of the curvature set of a packing up to a bound.

The traversal walks reduced words in the eight gap reflections.  Each step
reflects in one gap of the current six-circle configuration; the three
circles opposite the gap are replaced by three new circles that lie inside
the gap.  Everything created further down that branch lives inside smaller
gaps, so its curvature is at least the smallest new curvature.  A branch is
therefore cut as soon as all three new circles exceed the bound.

Every circle of the packing is created exactly once this way (plus the six
root circles), which gives circle counts for free.
"""
from __future__ import annotations

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import quadratic_core as qc
from .quadratic_core import LABELS, Quadruple

log = logging.getLogger(__name__)

MAGIC = b"APL3SET1"
_INT64_GUARD = 2**58  # entries of the S matrices are <= 20 in absolute value


class InsufficientPointsError(ValueError):
    pass


@dataclass
class CurvatureSet:
    """Curvatures <= N as a boolean membership array plus non-positive extras.

    ``counts[n]`` is the number of distinct circles of curvature ``n``.
    """

    bound: int
    member: np.ndarray
    nonpositive: tuple[int, ...] = ()
    counts: np.ndarray | None = field(default=None, repr=False)

    def __contains__(self, n: int) -> bool:
        if n <= 0:
            return n in self.nonpositive
        return n <= self.bound and bool(self.member[n])

    def positive(self) -> np.ndarray:
        return np.nonzero(self.member)[0]

    def values(self) -> list[int]:
        return sorted(self.nonpositive) + self.positive().tolist()

    def __len__(self) -> int:
        return int(self.member.sum()) + len(self.nonpositive)

    def circle_count(self) -> int:
        """Number of circles of curvature in [1, bound], with multiplicity."""
        if self.counts is None:
            raise ValueError("this set was built without circle counts")
        return int(self.counts.sum())

    def to_bytes(self) -> bytes:
        """Binary dump: magic, u64 bound, u64 #nonpositive, i64 values, packed bits of 1..N."""
        bits = np.packbits(self.member[1:].astype(np.uint8), bitorder="little")
        head = MAGIC + struct.pack("<QQ", self.bound, len(self.nonpositive))
        negs = struct.pack(f"<{len(self.nonpositive)}q", *sorted(self.nonpositive))
        return head + negs + bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CurvatureSet":
        if data[:8] != MAGIC:
            raise ValueError("not an APL3SET1 dump")
        bound, nneg = struct.unpack_from("<QQ", data, 8)
        off = 24
        negs = struct.unpack_from(f"<{nneg}q", data, off)
        off += 8 * nneg
        bits = np.frombuffer(data[off:], dtype=np.uint8)
        member = np.zeros(bound + 1, dtype=bool)
        member[1:] = np.unpackbits(bits, bitorder="little")[:bound].astype(bool)
        return cls(bound, member, tuple(negs))


@dataclass
class GrowthStats:
    points: list[tuple[int, int]]
    delta_hat: float
    intercept: float
    residual: float


def _new_circles(child: Sequence[int], label: str) -> tuple[int, int, int]:
    """Curvatures of the three circles created by reflecting in gap ``label``."""
    w = child[3]
    return tuple(
        child[i] if p else 2 * w - child[i] for i, p in enumerate(qc.primed_mask(label))
    )


def enumerate_quadruples(root: Sequence[int], N: int) -> Iterator[tuple[Quadruple, str | None]]:
    """Depth-first walk over the pruned tree, yielding (quadruple, last label).

    Exact integer arithmetic; slow but simple.  The root is yielded with
    label ``None``.
    """
    root = Quadruple(*root)
    if qc.eval_Q(root) != 0:
        raise ValueError(f"{root} is not on the cone Q=0")
    yield root, None
    stack: list[tuple[Quadruple, str | None]] = [(root, None)]
    while stack:
        v, last = stack.pop()
        for lab in LABELS:
            if lab == last:
                continue
            child = qc.reflect(v, lab)
            if child == v:  # stabilizer of a double-root quadruple
                continue
            if min(_new_circles(child, lab)) > N:
                continue
            yield child, lab
            stack.append((child, lab))


def enumerate_unpruned(root: Sequence[int], depth: int) -> Iterator[Quadruple]:
    """Every quadruple reachable by a reduced word of length <= depth."""
    root = Quadruple(*root)
    layer = [(root, None)]
    yield root
    for _ in range(depth):
        nxt = []
        for v, last in layer:
            for lab in LABELS:
                if lab != last:
                    c = qc.reflect(v, lab)
                    nxt.append((c, lab))
                    yield c
        layer = nxt


def unpruned_curvatures(root: Sequence[int], depth: int, N: int, chunk: int = 256) -> set[int]:
    """Coordinates 1..3 (<= N) over all reduced words of length <= depth, from root and partner.

    No pruning at all; the tree is walked level by level from a split depth
    in chunks so memory stays bounded.
    """
    S = qc.s_array()
    root = Quadruple(*root)
    out: set[int] = set()

    def grow(front, last, levels):
        for _ in range(levels):
            v = front[:, :3].ravel()
            out.update(np.unique(v[v <= N]).tolist())
            nq, nl = [], []
            for h in range(8):
                sel = last != h
                nq.append(front[sel] @ S[h].T)
                nl.append(np.full(int(sel.sum()), h, dtype=np.int8))
            front, last = np.concatenate(nq), np.concatenate(nl)
        return front, last

    for start in (root, qc.partner(root)):
        front = np.array([start], dtype=np.int64)
        last = np.array([-1], dtype=np.int8)
        split = min(depth, 4)
        front, last = grow(front, last, split)
        for i in range(0, len(front), chunk):
            f, l = grow(front[i:i + chunk], last[i:i + chunk], depth - split)
            v = f[:, :3].ravel()
            out.update(np.unique(v[v <= N]).tolist())
    return out


def _descendant_bound(a: int, b: int, c: int) -> float:
    """Curvature of the circle inscribed in the gap bounded by tangent circles a, b, c."""
    return a + b + c + 2 * math.sqrt(max(a * b + b * c + c * a, 0))


def curvatures_by_gap_bound(root: Sequence[int], N: int) -> set[int]:
    """Independent oracle: refuse to enter a gap whose inscribed circle exceeds N.

    Any circle drawn inside a curvilinear triangle is no larger than the
    circle inscribed in it, so this cut only uses classical Descartes
    geometry, not the new-circle rule of the main enumerator.
    """
    root = Quadruple(*root)
    out = {k for k in root.six() if k <= N}
    stack: list[tuple[Quadruple, str | None]] = [(root, None)]
    while stack:
        v, last = stack.pop()
        six = v.six()
        for lab in LABELS:
            if lab == last:
                continue
            mask = qc.primed_mask(lab)
            gap = [six[i + 3] if p else six[i] for i, p in enumerate(mask)]
            if _descendant_bound(*gap) > N + 1e-9:
                continue
            child = qc.reflect(v, lab)
            if child == v:
                continue
            out.update(k for k in _new_circles(child, lab) if k <= N)
            stack.append((child, lab))
    return out


def _expand(frontier: np.ndarray, last: np.ndarray, N: int, hits: np.ndarray,
            S: np.ndarray, primed: np.ndarray, nonpos: set[int]) -> tuple[int, int]:
    """Breadth-first expansion of a frontier until exhausted; accumulates into hits."""
    nodes = 0
    maxdepth = 0
    while len(frontier):
        if np.abs(frontier).max() > _INT64_GUARD:
            raise OverflowError("quadruple entries left the int64 fast path")
        nq, nl = [], []
        for h in range(8):
            sel = last != h
            p = frontier[sel]
            if not len(p):
                continue
            c = p @ S[h].T
            new = np.where(primed[h], c[:, :3], 2 * c[:, 3:4] - c[:, :3])
            keep = (new.min(axis=1) <= N) & ~(c == p).all(axis=1)
            c, new = c[keep], new[keep]
            small = new[new <= N]
            pos = small[small > 0]
            if len(pos):
                hits += np.bincount(pos, minlength=N + 1)
            if (small <= 0).any():
                nonpos.update(int(x) for x in small[small <= 0])
            nq.append(c)
            nl.append(np.full(len(c), h, dtype=np.int8))
        frontier = np.concatenate(nq) if nq else frontier[:0]
        last = np.concatenate(nl) if nl else last[:0]
        nodes += len(frontier)
        maxdepth += 1
    return nodes, maxdepth


def _orbit_counts(root: Quadruple, N: int, threads: int = 1) -> tuple[np.ndarray, set[int]]:
    S = qc.s_array()
    primed = qc.primed_array()
    hits = np.zeros(N + 1, dtype=np.int64)
    nonpos: set[int] = set()
    for k in root.six():
        if k <= 0:
            nonpos.add(k)
        elif k <= N:
            hits[k] += 1

    # Expand a few levels serially, then shard the frontier across workers.
    frontier = np.array([root], dtype=np.int64)
    last = np.array([-1], dtype=np.int8)
    for _ in range(3):
        if not len(frontier):
            break
        nq, nl = [], []
        for h in range(8):
            sel = last != h
            p = frontier[sel]
            c = p @ S[h].T
            new = np.where(primed[h], c[:, :3], 2 * c[:, 3:4] - c[:, :3])
            keep = (new.min(axis=1) <= N) & ~(c == p).all(axis=1)
            c, new = c[keep], new[keep]
            for x in new[new <= N].tolist():
                if x > 0:
                    hits[x] += 1
                else:
                    nonpos.add(x)
            nq.append(c)
            nl.append(np.full(len(c), h, dtype=np.int8))
        frontier = np.concatenate(nq)
        last = np.concatenate(nl)

    threads = max(1, int(threads))
    shards = np.array_split(np.arange(len(frontier)), threads)
    parts = [(frontier[ix], last[ix]) for ix in shards]

    def work(part):
        local = np.zeros(N + 1, dtype=np.int64)
        lneg: set[int] = set()
        _expand(part[0], part[1], N, local, S, primed, lneg)
        return local, lneg

    if threads == 1:
        results = [work(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, parts))
    for local, lneg in results:
        hits += local
        nonpos |= lneg
    return hits, nonpos


def curvature_set(root: Sequence[int], N: int, threads: int = 1) -> CurvatureSet:
    """All curvatures <= N of the packing generated by ``root``.

    Equivalent to the first three coordinates over the orbits of the root
    and of its partner; here every circle is recorded at the step that
    creates it.
    """
    root = Quadruple(*root)
    if qc.eval_Q(root) != 0:
        raise ValueError(f"{root} is not on the cone Q=0")
    hits, nonpos = _orbit_counts(root, N, threads)
    member = hits > 0
    member[0] = False
    return CurvatureSet(N, member, tuple(sorted(nonpos)), hits)


def curvature_set_exact(root: Sequence[int], N: int) -> set[int]:
    """Slow exact-int reference: coordinates 1..3 over both orbits."""
    root = Quadruple(*root)
    out = set()
    for start in (root, qc.partner(root)):
        for v, _ in enumerate_quadruples(start, N):
            out.update(k for k in v.curvatures if k <= N)
    return out


def count_circles(root: Sequence[int], N: int) -> int:
    return curvature_set(root, N).circle_count()


def estimate_growth_exponent(root: Sequence[int], N_list: Sequence[int]) -> GrowthStats:
    """Least-squares slope of log(#circles with curvature <= N) against log N."""
    N_list = list(N_list)
    if len(N_list) < 4:
        raise InsufficientPointsError("need at least four bounds")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be increasing")
    # one traversal at the largest bound serves every smaller one
    hits = curvature_set(root, N_list[-1]).counts
    cum = np.cumsum(hits)
    pts = [(n, int(cum[n])) for n in N_list]
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    (slope, icpt), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return GrowthStats(pts, float(slope), float(icpt), resid)


def admissible_count(classes: set[int], c: int, lo: int, hi: int) -> int:
    """#{lo < n <= hi : n = c mod 8} if c is admissible, else 0."""
    if c not in classes:
        return 0
    return (hi - c) // 8 - (lo - c) // 8


def density_report(root: Sequence[int], N: int, cset: CurvatureSet | None = None,
                   classes: set[int] | None = None) -> list[dict]:
    """Per class mod 8: admissibility and how many admissible n <= N are curvatures."""
    from .residues import curvature_residues

    if classes is None:
        classes = curvature_residues(root, 8)
    if cset is None:
        cset = curvature_set(root, N)
    pos = cset.positive()
    rep = np.bincount(pos % 8, minlength=8)
    rows = []
    for c in range(8):
        adm = admissible_count(classes, c, 0, N)
        r = int(rep[c])
        rows.append({
            "class": c,
            "admissible": c in classes,
            "count_admissible": adm,
            "count_represented": r,
            "fraction": r / adm if adm else 0.0,
        })
    return rows


def represented_fraction(cset: CurvatureSet, classes: set[int], lo: int, hi: int) -> float:
    """Share of admissible n in (lo, hi] that occur as curvatures."""
    adm = sum(admissible_count(classes, c, lo, hi) for c in range(8))
    vals = cset.positive()
    vals = vals[(vals > lo) & (vals <= hi)]
    return len(vals) / adm if adm else 0.0
