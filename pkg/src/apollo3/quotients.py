"""Finite quotients of Gamma over Z[sqrt(-2)]/(q), Cayley graphs and spectral gaps.

A 2x2 matrix over the ring is a row of eight residues
(a0, a1, b0, b1, c0, c1, d0, d1) meaning a = a0 + a1*sqrt(-2) and so on.
Rows are packed into int64 keys in base q, so q <= 234.
"""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh
from scipy.sparse.linalg import eigsh
from sympy import factorint

from .residues import BudgetExceeded
from .spin import M, MobiusMatrix

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7
DENSE_MAX = 5000
MAX_MODULUS = 234  # q**8 must fit in int64


# -- ring arithmetic on arrays ---------------------------------------------------

@dataclass(frozen=True)
class RingElement:
    """a + b*sqrt(-2) mod q."""

    a: int
    b: int
    q: int

    def __mul__(self, o: "RingElement") -> "RingElement":
        return RingElement((self.a * o.a - 2 * self.b * o.b) % self.q, (self.a * o.b + self.b * o.a) % self.q, self.q)

    def __add__(self, o: "RingElement") -> "RingElement":
        return RingElement((self.a + o.a) % self.q, (self.b + o.b) % self.q, self.q)


def _rmul(x0, x1, y0, y1, q):
    return (x0 * y0 - 2 * x1 * y1) % q, (x0 * y1 + x1 * y0) % q


def mat_mul_rows(X: np.ndarray, Y: np.ndarray, q: int) -> np.ndarray:
    """Row-wise product of matrices stored as (n, 8) arrays; Y may be a single row."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    a0, a1, b0, b1, c0, c1, d0, d1 = X.T
    e0, e1, f0, f1, g0, g1, h0, h1 = Y.T
    out = np.empty((max(len(X), len(Y)), 8), dtype=np.int64)

    def acc(p, r):
        return (p[0] + r[0]) % q, (p[1] + r[1]) % q

    out[:, 0], out[:, 1] = acc(_rmul(a0, a1, e0, e1, q), _rmul(b0, b1, g0, g1, q))
    out[:, 2], out[:, 3] = acc(_rmul(a0, a1, f0, f1, q), _rmul(b0, b1, h0, h1, q))
    out[:, 4], out[:, 5] = acc(_rmul(c0, c1, e0, e1, q), _rmul(d0, d1, g0, g1, q))
    out[:, 6], out[:, 7] = acc(_rmul(c0, c1, f0, f1, q), _rmul(d0, d1, h0, h1, q))
    return out


def inverse_rows(X: np.ndarray, q: int) -> np.ndarray:
    """Inverse of determinant-one matrices: [[d, -b], [-c, a]]."""
    X = np.atleast_2d(X)
    return np.column_stack([X[:, 6], X[:, 7], -X[:, 2], -X[:, 3], -X[:, 4], -X[:, 5], X[:, 0], X[:, 1]]) % q


def det_rows(X: np.ndarray, q: int) -> np.ndarray:
    X = np.atleast_2d(X)
    ad = _rmul(X[:, 0], X[:, 1], X[:, 6], X[:, 7], q)
    bc = _rmul(X[:, 2], X[:, 3], X[:, 4], X[:, 5], q)
    return np.column_stack([(ad[0] - bc[0]) % q, (ad[1] - bc[1]) % q])


def encode(X: np.ndarray, q: int) -> np.ndarray:
    X = np.atleast_2d(X).astype(np.int64)
    k = np.zeros(len(X), dtype=np.int64)
    for j in range(8):
        k = k * q + X[:, j]
    return k


def decode(keys: np.ndarray, q: int) -> np.ndarray:
    out = np.empty((len(keys), 8), dtype=np.int64)
    k = np.array(keys, dtype=np.int64)
    for j in range(7, -1, -1):
        out[:, j] = k % q
        k = k // q
    return out


def mobius_row(g: MobiusMatrix, q: int) -> np.ndarray:
    return np.array([x % q for z in g.entries() for x in z], dtype=np.int64)


IDENT_ROW = np.array([1, 0, 0, 0, 0, 0, 1, 0], dtype=np.int64)


def generating_set() -> list[tuple[str, MobiusMatrix]]:
    """S = {M1, ..., M6, M7^-1 M3} together with inverses, 14 elements."""
    base = [(f"M{i}", M[i]) for i in range(1, 7)] + [("M7^-1 M3", M[7].inv() @ M[3])]
    return base + [(n + "^-1", g.inv()) for n, g in base]


# -- closures ---------------------------------------------------------------------

@dataclass
class QuotientGroup:
    q: int
    keys: np.ndarray  # sorted

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def rows(self) -> np.ndarray:
        return decode(self.keys, self.q)

    def index(self, keys: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.keys, keys)
        idx = np.minimum(idx, len(self.keys) - 1)
        if not np.array_equal(self.keys[idx], keys):
            raise KeyError("element outside the group")
        return idx

    def contains(self, rows: np.ndarray) -> np.ndarray:
        k = encode(rows, self.q)
        idx = np.minimum(np.searchsorted(self.keys, k), len(self.keys) - 1)
        return self.keys[idx] == k


def _closure(gens: np.ndarray, q: int, budget: int) -> np.ndarray:
    seen = np.unique(encode(IDENT_ROW, q))
    front = seen
    while len(front):
        rows = decode(front, q)
        kids = np.unique(np.concatenate([encode(mat_mul_rows(rows, g, q), q) for g in gens]))
        kids = kids[~np.isin(kids, seen, assume_unique=True)]
        seen = np.union1d(seen, kids)
        if len(seen) > budget:
            raise BudgetExceeded(f"closure mod {q} passed {budget} elements")
        front = kids
    return seen


@lru_cache(maxsize=32)
def _closure_cached(q: int, budget: int, which: str) -> QuotientGroup:
    gens = np.array([mobius_row(g, q) for g in subgroup_generators(which)])
    return QuotientGroup(q, _closure(gens, q, budget))


def subgroup_generators(which: str = "gamma") -> list[MobiusMatrix]:
    if which == "gamma":
        return [g for _, g in generating_set()]
    if which == "C3":
        return [M[1], M[3], M[5]]
    if which == "C1":
        return [M[2], M[3], M[6]]
    if which == "C3'":
        m7i = M[7].inv()
        return [m7i @ M[3], m7i @ M[5], m7i @ M[6]]
    raise ValueError(which)


def quotient_closure(q: int, budget: int = DEFAULT_BUDGET, which: str = "gamma") -> QuotientGroup:
    """Image of Gamma (or a circle stabilizer) in SL(2, Z[sqrt(-2)]/(q)) by BFS.

    For composite q the prime-power parts are closed first; if their product
    already exceeds the budget the full closure is refused up front.
    """
    if q < 2 or q > MAX_MODULUS:
        raise ValueError(f"modulus must lie in [2, {MAX_MODULUS}]")
    fac = factorint(q)
    if len(fac) > 1:
        est = math.prod(len(quotient_closure(p**k, budget, which)) for p, k in fac.items())
        if est > budget:
            raise BudgetExceeded(f"closure mod {q} would have {est} elements (budget {budget})")
    return _closure_cached(q, budget, which)


def ring_elements(q: int) -> np.ndarray:
    r = np.arange(q)
    a, b = np.meshgrid(r, r, indexing="ij")
    a, b = a.ravel(), b.ravel()
    return np.column_stack([a, b])


def sl2_enumeration(q: int, budget: int = 10**8) -> np.ndarray:
    """Sorted keys of every determinant-one matrix over Z[sqrt(-2)]/(q), by direct scan."""
    R = ring_elements(q)
    n = len(R)
    if n**4 > budget:
        raise BudgetExceeded(f"direct scan of {n}^4 matrices exceeds {budget}")
    keys = []
    ia, ib = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    for ic in range(n):
        for idd in range(n):
            c = R[ic]
            d = R[idd]
            rows = np.column_stack([R[ia], R[ib], np.broadcast_to(c, (len(ia), 2)), np.broadcast_to(d, (len(ia), 2))])
            dt = det_rows(rows, q)
            ok = (dt[:, 0] == 1 % q) & (dt[:, 1] == 0)
            keys.append(encode(rows[ok], q))
    return np.sort(np.concatenate(keys))


def sl2_order(q: int) -> int:
    """|SL(2, Z[sqrt(-2)]/(q))| from the factorization of q."""
    out = 1
    for p, k in factorint(q).items():
        if p == 2:  # ramified, residue field F2, |R/2^k| = 4^k
            out *= 4 ** (3 * k - 1) * 3
        elif pow(-2 % p, (p - 1) // 2, p) == 1:  # split: two copies of SL2(Z/p^k)
            out *= (p ** (3 * k - 2) * (p * p - 1)) ** 2
        else:  # inert, residue field of size p^2
            out *= p ** (6 * k - 4) * (p**4 - 1)
    return out


def verify_quotient_lemma(full_moduli=(5, 7), crt_pairs=((2, 3), (4, 3), (8, 3), (4, 5)),
                          two_powers=(8, 16, 32), three_powers=(3, 9), budget: int = DEFAULT_BUDGET) -> list[dict]:
    """Finite checks of the structure of Gamma mod q."""
    out = []
    for q in full_moduli:
        G = quotient_closure(q, budget)
        try:
            direct = sl2_enumeration(q)
            ok = np.array_equal(G.keys, direct)
            out.append({"lemma": "Gamma/Gamma(q) = SL2", "parameters": {"q": q, "closure": len(G),
                        "sl2": len(direct)}, "pass": bool(ok)})
        except BudgetExceeded:
            ok = len(G) == sl2_order(q)
            out.append({"lemma": "Gamma/Gamma(q) = SL2", "parameters": {"q": q, "closure": len(G),
                        "sl2_order": sl2_order(q), "method": "order formula"}, "pass": bool(ok)})
    for a, b in crt_pairs:
        n = len(quotient_closure(a * b, budget))
        na, nb = len(quotient_closure(a, budget)), len(quotient_closure(b, budget))
        out.append({"lemma": "CRT", "parameters": {"q": a * b, "sizes": [na, nb], "closure": n},
                    "pass": n == na * nb})
    for p, seq in ((2, two_powers), (3, three_powers)):
        sizes = [len(quotient_closure(q, budget)) for q in seq]
        ratios = [sizes[i + 1] // sizes[i] for i in range(len(sizes) - 1)]
        exact = all(sizes[i + 1] % sizes[i] == 0 for i in range(len(sizes) - 1))
        kernel = (4 if p == 2 else p * p) ** 3  # |M2 trace-zero kernel| = |R/p|^3
        out.append({"lemma": "full kernel between consecutive levels", "parameters": {
            "p": p, "moduli": list(seq), "sizes": sizes, "ratios": ratios, "kernel": kernel},
            "pass": exact and all(r == kernel for r in ratios)})
    return out


# -- Cayley graphs and spectra ----------------------------------------------------

@dataclass
class CayleyGraph:
    group: QuotientGroup
    neighbors: np.ndarray  # (|G|, |S|) vertex indices of g*s

    @property
    def degree(self) -> int:
        return self.neighbors.shape[1]

    def markov(self) -> sp.csr_matrix:
        n, k = self.neighbors.shape
        rows = np.repeat(np.arange(n), k)
        A = sp.csr_matrix((np.full(n * k, 1.0 / k), (rows, self.neighbors.ravel())), shape=(n, n))
        return A

    def export(self, fh: io.TextIOBase) -> None:
        keys = self.group.keys
        for i, k in enumerate(keys):
            fh.write(" ".join(str(int(x)) for x in [k, *keys[self.neighbors[i]]]) + "\n")


def cayley_graph(G: QuotientGroup, gens: Sequence[MobiusMatrix] | None = None) -> CayleyGraph:
    if gens is None:
        gens = [g for _, g in generating_set()]
    rows = G.rows
    cols = [G.index(encode(mat_mul_rows(rows, mobius_row(g, G.q), G.q), G.q)) for g in gens]
    return CayleyGraph(G, np.column_stack(cols))


def _top_two(A: sp.csr_matrix) -> np.ndarray:
    n = A.shape[0]
    if n <= DENSE_MAX:
        return eigvalsh(A.toarray())[::-1][:2] if n > 1 else np.array([1.0, -np.inf])
    vals = eigsh(A, k=2, which="LA", tol=1e-10, return_eigenvectors=False)
    return np.sort(vals)[::-1]


@dataclass
class SpectralResult:
    q: int
    order: int
    degree: int
    lambda1: float
    gap: float


def spectral_gap(q: int, budget: int = DEFAULT_BUDGET) -> SpectralResult:
    """1 - second largest eigenvalue of the Markov operator of Cayley(Gamma mod q, S)."""
    G = quotient_closure(q, budget)
    C = cayley_graph(G)
    top = _top_two(C.markov())
    return SpectralResult(q, len(G), C.degree, float(top[1]), float(1 - top[1]))


def subgroup_gap(G: QuotientGroup, S_rows: np.ndarray) -> tuple[float, float]:
    """(|S cap H| / |S|, gap of Cayley(H, S cap H)) for a subgroup H."""
    inside = G.contains(S_rows)
    share = inside.sum() / len(S_rows)
    if not inside.any():
        return 0.0, 0.0
    q = G.q
    rows = G.rows
    cols = [G.index(encode(mat_mul_rows(rows, s, q), q)) for s in S_rows[inside]]
    nb = np.column_stack(cols)
    n, k = nb.shape
    A = sp.csr_matrix((np.full(n * k, 1.0 / k), (np.repeat(np.arange(n), k), nb.ravel())), shape=(n, n))
    if n == 1:
        return float(share), 1.0
    top = _top_two(A)
    return float(share), max(0.0, float(1 - top[1]))


def product_cover_length(G: QuotientGroup, parts: Sequence[QuotientGroup], max_k: int = 12) -> int:
    """Smallest k with G = H_1 H_2 ... H_k, cycling through ``parts``."""
    q = G.q
    cur = parts[0].keys
    k = 1
    while len(cur) < len(G):
        if k >= max_k:
            raise RuntimeError("no product decomposition found")
        H = parts[k % len(parts)].rows
        X = decode(cur, q)
        prods = [encode(mat_mul_rows(X, h, q), q) for h in H]
        cur = np.unique(np.concatenate(prods))
        k += 1
    return k


def varju_combination_bound(subgroup_gaps: Iterable[tuple[float, float]], k: int) -> float:
    """min over i of share_i * gap_i / (2 k^2)."""
    return min(s * g / (2 * k * k) for s, g in subgroup_gaps)


def varju_report(q: int, budget: int = DEFAULT_BUDGET) -> dict:
    G = quotient_closure(q, budget)
    S_rows = np.array([mobius_row(g, q) for _, g in generating_set()])
    parts = [quotient_closure(q, budget, w) for w in ("C3", "C1", "C3'")]
    gaps = [subgroup_gap(H, S_rows) for H in parts]
    k = product_cover_length(G, parts)
    pred = varju_combination_bound(gaps, k)
    meas = spectral_gap(q, budget).gap
    return {"q": q, "k": k, "subgroups": [{"order": len(H), "share": s, "gap": g} for H, (s, g) in zip(parts, gaps)],
            "predicted": pred, "measured": meas, "pass": meas >= pred - 1e-9}


def check_inverse_closed(G: QuotientGroup, samples: int = 1000, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(G), size=min(samples, len(G)), replace=False)
    return bool(G.contains(inverse_rows(G.rows[idx], G.q)).all())


def check_reduction(q: int, qq: int, budget: int = DEFAULT_BUDGET) -> bool:
    """The reduction map closure(q) -> closure(qq) is onto, for qq | q."""
    if q % qq:
        raise ValueError("qq must divide q")
    img = np.unique(encode(quotient_closure(q, budget).rows % qq, qq))
    return bool(np.array_equal(img, quotient_closure(qq, budget).keys))
