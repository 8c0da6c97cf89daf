"""Residue orbits V_q, local solution sets C_{p^m} and admissibility.

Vectors mod q are encoded as integers ((k1*q + k2)*q + k3)*q + w so that
orbit closures can run as vectorized breadth-first searches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from sympy import factorint

from . import quadratic_core as qc
from .quadratic_core import Quadruple

DENSE_LIMIT = 2**28  # q^4 above this uses sorted key arrays instead of a bitmap


class BudgetExceeded(RuntimeError):
    pass


def _encode(a: np.ndarray, q: int) -> np.ndarray:
    a = a.astype(np.int64)
    return ((a[:, 0] * q + a[:, 1]) * q + a[:, 2]) * q + a[:, 3]


def _decode(keys: np.ndarray, q: int) -> np.ndarray:
    out = np.empty((len(keys), 4), dtype=np.int64)
    k = keys.copy()
    for j in (3, 2, 1, 0):
        out[:, j] = k % q
        k //= q
    return out


def _Q(a: np.ndarray) -> np.ndarray:
    k1, k2, k3, w = a.T
    return w * w - 2 * w * (k1 + k2 + k3) + k1 * k1 + k2 * k2 + k3 * k3


def _close(seeds: np.ndarray, q: int, gens: np.ndarray) -> np.ndarray:
    """Sorted keys of the closure of ``seeds`` under ``gens`` mod q."""
    front = np.unique(_encode(np.mod(seeds, q), q))
    gens = np.mod(gens, q)
    if q**4 <= DENSE_LIMIT:
        seen = np.zeros(q**4, dtype=bool)
        seen[front] = True
        while len(front):
            vecs = _decode(front, q)
            kids = np.concatenate([_encode((vecs @ g.T) % q, q) for g in gens])
            kids = np.unique(kids[~seen[kids]])
            seen[kids] = True
            front = kids
        return np.nonzero(seen)[0]
    seen = front
    while len(front):
        vecs = _decode(front, q)
        kids = np.unique(np.concatenate([_encode((vecs @ g.T) % q, q) for g in gens]))
        kids = kids[~np.isin(kids, seen, assume_unique=True)]
        seen = np.union1d(seen, kids)
        front = kids
    return seen


@dataclass(frozen=True)
class ResidueOrbit:
    q: int
    keys: np.ndarray  # sorted encoded members

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def vectors(self) -> np.ndarray:
        return _decode(self.keys, self.q)

    @property
    def members(self) -> set[tuple[int, ...]]:
        return {tuple(v) for v in self.vectors.tolist()}

    def __contains__(self, v) -> bool:
        k = int(_encode(np.array([v]) % self.q, self.q)[0])
        i = np.searchsorted(self.keys, k)
        return i < len(self.keys) and self.keys[i] == k

    def reclose(self) -> "ResidueOrbit":
        return ResidueOrbit(self.q, _close(self.vectors, self.q, qc.s_array()))


@dataclass(frozen=True)
class LocalSolutionSet:
    p: int
    m: int
    keys: np.ndarray

    @property
    def q(self) -> int:
        return self.p**self.m

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def members(self) -> set[tuple[int, ...]]:
        return {tuple(v) for v in _decode(self.keys, self.q).tolist()}

    def __contains__(self, v) -> bool:
        k = int(_encode(np.array([v]) % self.q, self.q)[0])
        i = np.searchsorted(self.keys, k)
        return i < len(self.keys) and self.keys[i] == k


@lru_cache(maxsize=64)
def _orbit_cached(root: tuple, q: int) -> ResidueOrbit:
    return ResidueOrbit(q, _close(np.array([root]), q, qc.s_array()))


def residue_orbit(root: Sequence[int], q: int) -> ResidueOrbit:
    """Closure of root mod q under the eight reflections."""
    if q < 2:
        raise ValueError("modulus must be at least 2")
    return _orbit_cached(tuple(int(x) % q for x in root), q)


def curvature_residues(root: Sequence[int], q: int) -> set[int]:
    """Residues mod q of curvatures: coordinates 1..3 over the orbits of root and partner."""
    root = Quadruple(*root)
    out: set[int] = set()
    for start in (root, qc.partner(root)):
        out.update(np.unique(residue_orbit(start, q).vectors[:, :3]).tolist())
    return out


def is_admissible(root: Sequence[int], n: int) -> bool:
    return n % 8 in curvature_residues(root, 8)


def admissibility_diagnostic(root: Sequence[int], q: int) -> list[int]:
    """Residues n mod lcm(q, 8) where the mod-q and mod-8 criteria disagree.

    Passing mod q must follow from passing mod 8 if 8 is the only obstruction;
    an empty list means no discrepancy was found at this modulus.
    """
    L = math.lcm(q, 8)
    rq = curvature_residues(root, q)
    r8 = curvature_residues(root, 8)
    return [n for n in range(L) if (n % q in rq) != (n % 8 in r8) and n % 8 in r8]


def local_solution_set(root: Sequence[int] | None, p: int, m: int,
                       budget: int = 2**32) -> LocalSolutionSet:
    """Primitive solutions of Q = 0 mod p^m by exhaustive scan.

    For p = 2 a vector must also lift to a solution mod 2^(m+1).  Since
    Q(v + 2^m t) = Q(v) mod 2^(m+1), that is the same as Q(v) = 0 mod 2^(m+1).
    ``root`` is accepted for symmetry with the orbit functions; when given,
    it is checked to lie in the set.
    """
    q = p**m
    if q**4 > budget:
        raise BudgetExceeded(f"scan of (Z/{q})^4 exceeds budget {budget}")
    mod = 2 * q if p == 2 else q
    r = np.arange(q, dtype=np.int64)
    k2, k3, w = np.meshgrid(r, r, r, indexing="ij")
    k2, k3, w = k2.ravel(), k3.ravel(), w.ravel()
    base = w * w - 2 * w * (k2 + k3) + k2 * k2 + k3 * k3
    prim23 = (k2 % p != 0) | (k3 % p != 0) | (w % p != 0)
    keys = []
    for k1 in range(q):
        qv = base - 2 * w * k1 + k1 * k1
        ok = (qv % mod == 0)
        if k1 % p == 0:
            ok &= prim23
        idx = np.nonzero(ok)[0]
        keys.append(((k1 * q + k2[idx]) * q + k3[idx]) * q + w[idx])
    out = LocalSolutionSet(p, m, np.sort(np.concatenate(keys)))
    if root is not None and tuple(root) not in out:
        raise ValueError(f"{tuple(root)} is not a local solution mod {q}")
    return out


def lift_preimage(orbit: ResidueOrbit, p: int) -> np.ndarray:
    """Keys of the vectors mod p*q that reduce into ``orbit`` and solve Q mod p*q (2pq for p=2)."""
    q = orbit.q
    Q2 = p * q
    mod = 2 * Q2 if p == 2 else Q2
    base = orbit.vectors
    offs = np.array(np.meshgrid(*[np.arange(p)] * 4, indexing="ij")).reshape(4, -1).T * q
    cand = (base[:, None, :] + offs[None, :, :]).reshape(-1, 4)
    cand = cand[_Q(cand) % mod == 0]
    return np.sort(_encode(cand, Q2))


def _item(lemma: str, params: dict, ok: bool, witness=None) -> dict:
    d = {"lemma": lemma, "parameters": params, "pass": bool(ok)}
    if not ok and witness is not None:
        d["witness"] = witness
    return d


def _diff_witness(a: np.ndarray, b: np.ndarray, q: int):
    x = np.setdiff1d(a, b)
    y = np.setdiff1d(b, a)
    w = {}
    if len(x):
        w["only_left"] = _decode(x[:1], q)[0].tolist()
    if len(y):
        w["only_right"] = _decode(y[:1], q)[0].tolist()
    return w


def verify_local_lemmas(root: Sequence[int] = (-1, 2, 2, 3), budget: int = 2**32,
                        primes=(5, 7, 11, 13), three_powers=(1, 2, 3),
                        two_powers=(3, 4), crt=(15, 24, 40, 72)) -> list[dict]:
    """Finite checks of the local structure of the orbit; one item per check."""
    root = tuple(root)
    report = []
    for p in primes:
        V = residue_orbit(root, p)
        C = local_solution_set(None, p, 1, budget)
        same = np.array_equal(V.keys, C.keys)
        report.append(_item("V_p = C_p", {"p": p, "V": len(V), "C": len(C)}, same,
                            None if same else _diff_witness(V.keys, C.keys, p)))
    for m in three_powers:
        V = residue_orbit(root, 3**m)
        C = local_solution_set(None, 3, m, budget)
        same = np.array_equal(V.keys, C.keys)
        report.append(_item("V_3^m = C_3^m", {"m": m, "V": len(V), "C": len(C)}, same,
                            None if same else _diff_witness(V.keys, C.keys, 3**m)))
    for m in two_powers:
        V = residue_orbit(root, 2**m)
        V2 = residue_orbit(root, 2 ** (m + 1))
        pre = lift_preimage(V, 2)
        same = np.array_equal(pre, V2.keys)
        report.append(_item("preimage of V_2^m = V_2^(m+1)",
                            {"m": m, "preimage": len(pre), "V": len(V2)}, same,
                            None if same else _diff_witness(pre, V2.keys, 2 ** (m + 1))))
    for q in crt:
        fac = factorint(q)
        parts = {f"{p}^{e}": len(residue_orbit(root, p**e)) for p, e in fac.items()}
        n = len(residue_orbit(root, q))
        prod = math.prod(parts.values())
        report.append(_item("|V_q| = product of prime-power parts",
                            {"q": q, "V": n, "parts": parts}, n == prod,
                            {"V": n, "product": prod}))
    return report


# -- explicit lifting at p = 2 -------------------------------------------------

def _mat_pow(a, e: int):
    out = qc.identity()
    for _ in range(e):
        out = qc.mat_mul(out, a)
    return out


def _mod_mat(a, q: int):
    return tuple(tuple(x % q for x in row) for row in a)


def displayed_lifting(m: int) -> dict[str, tuple]:
    """Closed-form W(m), X(m), Y(m) as stated for the lifting argument."""
    h = 2 ** (m - 1)
    W = ((1, 0, 0, h), (h, 1 + h, h, h), (0, 0, 1, 0), (0, h, 0, 1 + h))
    X = ((1, 0, 0, 0), (0, 1, 0, 0), (h, h, 1 + h, h), (0, 0, h, 1 + h))
    out = {"W": W, "X": X}
    if m >= 4:
        g = 2 ** (m - 2)
        out["Y"] = ((1 - g, -g, g, -g), (-g, 1 - g, g, -g), (g, -g, 1 + g, -g), (-g, -g, g, 1 + g))
    return out


def word_lifting(m: int) -> dict[str, tuple]:
    """W, X, Y as powers of products of two reflections."""
    S = qc.S_MATRICES
    out = {
        "W": _mat_pow(qc.mat_mul(S["1'23"], S["1'2'3"]), 2 ** (m - 3)),
        "X": _mat_pow(qc.mat_mul(S["12'3"], S["12'3'"]), 2 ** (m - 3)),
    }
    if m >= 4:
        out["Y"] = _mat_pow(qc.mat_mul(S["123'"], S["1'2'3"]), 2 ** (m - 4))
    return out


@dataclass
class LiftingMatrices:
    m: int
    words: dict
    closed: dict
    mismatches: dict  # name -> list of (row, col, word entry, closed entry) mod 2^m

    def agree(self, name: str) -> bool:
        return not self.mismatches[name]

    def increments(self, root: Sequence[int], source: str = "words") -> dict[str, tuple]:
        """(M r - r) / 2^(m-1) mod 2 for every product of a subset of {W, X, Y}."""
        mats = self.words if source == "words" else self.closed
        q = 2**self.m
        h = q // 2
        out = {}
        names = [n for n in ("W", "X", "Y") if n in mats]
        for mask in range(2 ** len(names)):
            M = qc.identity()
            tag = ""
            for i, n in enumerate(names):
                if mask >> i & 1:
                    M = qc.mat_mul(M, mats[n])
                    tag += n
            d = [(a - b) % q for a, b in zip(qc.mat_vec(M, root), root)]
            if any(x % h for x in d):
                out[tag or "I"] = None  # not a pure 2^(m-1) shift
            else:
                out[tag or "I"] = tuple(x // h for x in d)
        return out


def lifting_matrices(m: int) -> LiftingMatrices:
    if m < 3:
        raise ValueError("lifting matrices need m >= 3")
    q = 2**m
    words = word_lifting(m)
    closed = displayed_lifting(m)
    mism = {}
    for name in words:
        a, b = _mod_mat(words[name], q), _mod_mat(closed[name], q)
        mism[name] = [(i, j, a[i][j], b[i][j]) for i in range(4) for j in range(4) if a[i][j] != b[i][j]]
    return LiftingMatrices(m, words, closed, mism)
