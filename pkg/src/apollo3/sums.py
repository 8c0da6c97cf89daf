"""Ramanujan, Gauss and Kloosterman sums, the complete sum S_f, and local densities.

Densities and local factors are exact ``Fraction`` values.  Complex sums use
binary64 with math.fsum-style accumulation and are compared at 1e-9.
"""
from __future__ import annotations

import cmath
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint, primerange
from sympy.functions.combinatorial.numbers import jacobi_symbol

from . import quadratic_core as qc
from .residues import residue_orbit
from .spin import ShiftedForm, form_value, shifted_form

TWO_PI = 2 * math.pi


class EvenModulus(ValueError):
    pass


class NotCoprime(ValueError):
    pass


class NotInvertible(ValueError):
    pass


def e(x: float) -> complex:
    return cmath.exp(1j * TWO_PI * x)


def e_q(a: int, q: int) -> complex:
    return cmath.exp(1j * TWO_PI * ((a % q) / q))


def _csum(terms: Iterable[complex]) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


def eps(q: int) -> int:
    """0 if q = 1 mod 4, 1 if q = 3 mod 4."""
    if q % 2 == 0:
        raise EvenModulus(q)
    return 0 if q % 4 == 1 else 1


def jacobi(a: int, q: int) -> int:
    if q == 1:
        return 1
    return int(jacobi_symbol(a % q, q))


def legendre_m2(p: int) -> int:
    """(-2/p) for an odd prime p."""
    return jacobi(-2, p)


# -- Ramanujan sums ------------------------------------------------------------

def ramanujan_c(q: int, n: int) -> int:
    """c_q(n) by multiplicativity over prime powers."""
    if q < 1:
        raise ValueError("q must be positive")
    out = 1
    for p, k in factorint(q).items():
        pk1 = p ** (k - 1)
        if n % (pk1 * p) == 0:
            out *= pk1 * (p - 1)
        elif n % pk1 == 0:
            out *= -pk1
        else:
            return 0
    return out


def ramanujan_brute(q: int, n: int) -> complex:
    return _csum(e_q(a * n, q) for a in range(1, q + 1) if math.gcd(a, q) == 1)


# -- Gauss sums ----------------------------------------------------------------

@dataclass(frozen=True)
class GaussValue:
    """(r/q) * i^eps(q) * sqrt(q), kept symbolically."""

    symbol: int
    i_power: int
    q: int

    @property
    def value(self) -> complex:
        return self.symbol * (1j ** self.i_power) * math.sqrt(self.q)


def gauss_quadratic_exact(q: int, r: int) -> GaussValue:
    if q % 2 == 0:
        raise EvenModulus(f"modulus {q} is even")
    if math.gcd(r, q) != 1:
        raise NotCoprime(f"gcd({r}, {q}) != 1")
    return GaussValue(jacobi(r, q), eps(q), q)


def gauss_quadratic(q: int, r: int) -> complex:
    """sum over a mod q of e_q(r a^2), closed form for odd q and r a unit."""
    return gauss_quadratic_exact(q, r).value


def gauss_quadratic_brute(q: int, r: int) -> complex:
    return _csum(e_q(r * a * a, q) for a in range(q))


# -- characters and Kloosterman sums --------------------------------------------

@dataclass(frozen=True)
class DirichletCharacter:
    q: int
    kind: str = "trivial"  # or "jacobi"

    def __post_init__(self):
        if self.kind not in ("trivial", "jacobi"):
            raise ValueError(self.kind)
        if self.kind == "jacobi" and self.q % 2 == 0:
            raise EvenModulus(self.q)

    def __call__(self, x: int) -> int:
        if math.gcd(x, self.q) != 1:
            return 0
        return 1 if self.kind == "trivial" else jacobi(x, self.q)


def kloosterman(m: int, n: int, q: int, chi: DirichletCharacter | None = None) -> complex:
    """S(m, n, q, chi) = sum over units x of chi(x) e_q(m x + n x^-1)."""
    if chi is None:
        chi = DirichletCharacter(q)
    terms = []
    for x in range(1, q + 1):
        if math.gcd(x, q) != 1:
            continue
        xi = pow(x, -1, q) if q > 1 else 0
        terms.append(chi(x) * e_q(m * x + n * xi, q))
    return _csum(terms)


def kloosterman_ratio(m: int, n: int, q: int, chi=None) -> dict:
    """|S| against min((m,q),(n,q))^(1/4) q^(3/4); reported, never asserted."""
    s = kloosterman(m, n, q, chi)
    g = min(math.gcd(m, q), math.gcd(n, q))
    bound = g**0.25 * q**0.75
    return {"m": m, "n": n, "q": q, "chi": (chi.kind if chi else "trivial"),
            "value": abs(s), "bound": bound, "ratio": abs(s) / bound}


def kloosterman_sweep(qs: Iterable[int], mn: Iterable[tuple[int, int]], kinds=("trivial", "jacobi")) -> list[dict]:
    rows = []
    for q in qs:
        for kind in kinds:
            if kind == "jacobi" and q % 2 == 0:
                continue
            chi = DirichletCharacter(q, kind)
            for m, n in mn:
                rows.append(kloosterman_ratio(m, n, q, chi))
    return rows


# -- the complete sum S_f --------------------------------------------------------

def sf_sum_brute(q0: int, t: int, xi: int, zeta: int, f: ShiftedForm) -> complex:
    """(1/q0^2) sum over x0, y0 mod q0 of e_q0(t f~(x0, y0) + x0 xi + y0 zeta)."""
    x = np.arange(q0)
    X, Y = np.meshgrid(x, x, indexing="ij")
    ph = (t * (f.A * X * X + 2 * f.B * X * Y + f.C * Y * Y) + X * xi + Y * zeta) % q0
    z = np.exp(1j * TWO_PI * ph / q0)
    return complex(z.real.sum(), z.imag.sum()) / q0**2


def sf_sum_closed(q0: int, t: int, xi: int, zeta: int, f: ShiftedForm) -> complex:
    """Closed form obtained by completing the square twice.

    Needs q0 odd, t a unit and A invertible mod q0.  With g = gcd(q0, b^2),
    q1 = q0/g and b1 = b^2/g, the y-sum is a Gauss sum mod q1 that forces
    A zeta = B xi mod g.
    """
    if q0 % 2 == 0:
        raise EvenModulus(f"closed form needs odd q0, got {q0}")
    if math.gcd(t, q0) != 1:
        raise NotCoprime(f"gcd({t}, {q0}) != 1")
    if math.gcd(f.A, q0) != 1:
        raise NotInvertible(f"A={f.A} is not invertible mod {q0}")
    if q0 == 1:
        return 1 + 0j
    A, B = f.A, f.B
    b2 = f.b * f.b
    g = math.gcd(q0, b2)
    q1 = q0 // g
    b1 = b2 // g
    lin = A * zeta - B * xi
    if lin % g:
        return 0j
    head = (1j ** (eps(q0) + eps(q1))) / math.sqrt(q0 * q1)
    sym = jacobi(t * A, q0)
    if q1 > 1:
        sym *= jacobi(2 * t * b1 * pow(A, -1, q1), q1)
    ph = Fraction(-pow(4 * t * A, -1, q0) * xi * xi % q0, q0)
    if q1 > 1:
        ph += Fraction(-pow(8 * t * b1 * A, -1, q1) * (lin // g) ** 2 % q1, q1)
    return head * sym * e(float(ph % 1))


def sf_sum(q0: int, t: int, xi: int, zeta: int, f: ShiftedForm, route: str = "brute") -> complex:
    if route == "brute":
        return sf_sum_brute(q0, t, xi, zeta, f)
    if route == "closed":
        return sf_sum_closed(q0, t, xi, zeta, f)
    raise ValueError(route)


# -- local densities ------------------------------------------------------------

@dataclass(frozen=True)
class LocalFactor:
    p: int
    value: Fraction


def local_factor_closed(p: int, n: int) -> Fraction:
    """B_p(n) for an odd prime p."""
    if p < 3:
        raise ValueError("closed form is for odd primes")
    s = legendre_m2(p)
    if n % p == 0:
        return Fraction(-1 - p * s, p * p + (1 + s) * p + 1)
    return Fraction(p * s + 1, p**3 + p * (p - 1) * s - 1)


@lru_cache(maxsize=None)
def tau(root: tuple, q: int, coord: int = 0) -> tuple[Fraction, ...]:
    """Distribution of one coordinate over the residue orbit of root mod q."""
    vec = residue_orbit(root, q).vectors[:, coord]
    cnt = np.bincount(vec, minlength=q)
    tot = int(cnt.sum())
    return tuple(Fraction(int(c), tot) for c in cnt)


def local_density(root: Sequence[int], q: int, n: int, coord: int = 0) -> Fraction:
    """B_q(n) = sum_a tau_q(a) c_q(a - n)."""
    t = tau(tuple(root), q, coord)
    return sum((t[a] * ramanujan_c(q, a - n) for a in range(q) if t[a]), Fraction(0))


def local_factor(p: int, n: int, root: Sequence[int] = (-1, 2, 2, 3), brute: bool = False) -> LocalFactor:
    if brute:
        return LocalFactor(p, local_density(root, p, n))
    return LocalFactor(p, local_factor_closed(p, n))


def two_adic_slots(n: int, root: Sequence[int]) -> dict[tuple[str, int], Fraction]:
    """1 + B_2 + B_4 + B_8 for each curvature slot: (orbit of root or partner, coordinate)."""
    root = tuple(root)
    out = {}
    for tag, start in (("r", root), ("r'", tuple(qc.partner(root)))):
        for c in range(3):
            out[(tag, c + 1)] = 1 + sum(local_density(start, 2**k, n, c) for k in (1, 2, 3))
    return out


def two_adic_factor(n: int, root: Sequence[int] = (-1, 2, 2, 3)) -> Fraction:
    """Largest 2-adic factor over the six curvature slots.

    Each slot on its own is 8 on one class mod 8 and 0 elsewhere; taking the
    largest covers every class any circle can occupy.
    """
    return max(two_adic_slots(n, root).values())


def singular_series(n: int, root: Sequence[int] = (-1, 2, 2, 3), Q0: int = 100) -> Fraction:
    """2-adic factor times prod over odd primes p < Q0 of (1 + B_p(n))."""
    if Q0 < 8:
        raise ValueError("Q0 must be at least 8")
    out = two_adic_factor(n, root)
    if out == 0:
        return out
    for p in primerange(3, Q0):
        out *= 1 + local_factor_closed(p, n)
    return out


def singular_series_array(ns: np.ndarray, root: Sequence[int] = (-1, 2, 2, 3), Q0: int = 100) -> np.ndarray:
    """Floating-point singular series for many n at once."""
    ns = np.asarray(ns, dtype=np.int64)
    table = np.array([float(two_adic_factor(c, root)) for c in range(8)])
    out = table[ns % 8]
    for p in primerange(3, Q0):
        div = float(1 + local_factor_closed(p, 0))
        nodiv = float(1 + local_factor_closed(p, 1))
        out = out * np.where(ns % p == 0, div, nodiv)
    return out


# -- congruence counts and representations ---------------------------------------

def form_congruence_count(f: ShiftedForm, d: int, W: int, sign: int = 1) -> int:
    """#{1 <= m, n <= W : f~(m, sign*n) = 0 mod d}."""
    m = np.arange(1, W + 1, dtype=np.int64)
    M, N = np.meshgrid(m, sign * m, indexing="ij")
    v = (f.A * M * M + 2 * f.B * M * N + f.C * N * N) % d
    return int((v == 0).sum())


def form_congruence_ratio(f: ShiftedForm, d: int, W: int, sign: int = 1) -> float:
    return form_congruence_count(f, d, W, sign) / (W * W / math.sqrt(d) + W)


def divisors(n: int) -> list[int]:
    out = [1]
    for p, k in factorint(n).items():
        out = [d * p**i for d in out for i in range(k + 1)]
    return sorted(out)


def ideal_divisor_count(n: int) -> int:
    """Number of ideals of Z[sqrt(-2)] dividing (n), n != 0."""
    n = abs(n)
    out = 1
    for p, k in factorint(n).items():
        if p == 2:
            out *= 2 * k + 1
        elif legendre_m2(p) == 1:
            out *= (k + 1) ** 2
        else:
            out *= k + 1
    return out


def representation_pairs(f: ShiftedForm, z: int) -> list[tuple[int, int]]:
    """All integer (m, n) with f~(m, n) = z, for a positive definite f~ and z > 0."""
    if f.A <= 0 or f.discriminant() >= 0:
        raise ValueError("form must be positive definite")
    D = -f.discriminant()  # 8 b^2
    # A f~ = (A m + B n)^2 + 2 b^2 n^2, so |n| <= sqrt(A z / (2 b^2))
    nmax = math.isqrt(4 * f.A * z // D) + 1
    out = []
    for n in range(-nmax, nmax + 1):
        # A m^2 + 2 B n m + (C n^2 - z) = 0
        disc = (f.B * n) ** 2 - f.A * (f.C * n * n - z)
        if disc < 0:
            continue
        r = math.isqrt(disc)
        if r * r != disc:
            continue
        for s in {r, -r}:
            num = -f.B * n + s
            if num % f.A == 0:
                out.append((num // f.A, n))
    return out


def claim3_monitor(f: ShiftedForm, z: int) -> dict:
    """Representations of z by f~ against 2 * #(ideal divisors of A z)."""
    pairs = representation_pairs(f, z)
    bound = 2 * ideal_divisor_count(f.A * z)
    return {"A": f.A, "B": f.B, "C": f.C, "b": f.b, "z": z, "pairs": len(pairs), "bound": bound}


def forms_from_words(root: Sequence[int], max_length: int) -> list[tuple[tuple[str, ...], ShiftedForm]]:
    out = []
    for w in qc.reduced_words(max_length):
        out.append((w, shifted_form(qc.apply_word(w, root))))
    return out


def coprime_window(W: int) -> list[tuple[int, int]]:
    """(x, y) with |x|, |y| <= W, x odd and gcd(x, 2y) = 1."""
    return [(x, y) for x in range(-W, W + 1) for y in range(-W, W + 1)
            if x % 2 and math.gcd(x, 2 * y) == 1]


def representation_count(N: int, root: Sequence[int] = (-1, 2, 2, 3), max_length: int = 2,
                         window: int = 10) -> Counter:
    """n -> number of (gamma, x, y) with f_gamma(x, 2y) = n <= N (sharp cutoff)."""
    cnt: Counter = Counter()
    pairs = coprime_window(window)
    for _, f in forms_from_words(root, max_length):
        for x, y in pairs:
            v = form_value(f, x, 2 * y)
            if v <= N:
                cnt[v] += 1
    return cnt


# -- aggregated checks ----------------------------------------------------------

def _item(lemma: str, params: dict, ok: bool, witness=None) -> dict:
    it = {"lemma": lemma, "parameters": params, "pass": bool(ok)}
    if witness is not None and not ok:
        it["witness"] = witness
    return it


def random_sf_tuples(count: int, seed: int = 0, max_q: int = 45,
                     root: Sequence[int] = (-1, 2, 2, 3)) -> list[tuple[int, int, int, int, ShiftedForm]]:
    """Tuples (q0, t, xi, zeta, f) satisfying the closed-form hypotheses."""
    rng = np.random.default_rng(seed)
    forms = [f for _, f in forms_from_words(root, 3)]
    out = []
    while len(out) < count:
        q0 = int(rng.integers(1, max_q // 2 + 1)) * 2 + 1
        f = forms[int(rng.integers(len(forms)))]
        t = int(rng.integers(1, q0))
        if math.gcd(t, q0) != 1 or math.gcd(f.A, q0) != 1:
            continue
        out.append((q0, t, int(rng.integers(q0)), int(rng.integers(q0)), f))
    return out


def verify_sums(root: Sequence[int] = (-1, 2, 2, 3), tol: float = 1e-9, gauss_max: int = 99,
                ramanujan_max: int = 200, sf_count: int = 500, seed: int = 0) -> list[dict]:
    """Closed forms against direct summation, and exact local-factor identities."""
    root = tuple(root)
    out = []

    worst, at = 0.0, None
    for q in range(3, gauss_max + 1, 2):
        a = np.arange(q)
        for r in range(1, q):
            if math.gcd(r, q) != 1:
                continue
            brute = np.exp(1j * TWO_PI * ((r * a * a) % q) / q).sum()
            err = abs(gauss_quadratic(q, r) - brute)
            if err > worst:
                worst, at = err, (q, r)
    out.append(_item("Gauss sum closed form", {"q_max": gauss_max, "max_error": float(worst)}, worst < tol,
                     {"q": at[0], "r": at[1]} if at else None))

    worst, at = 0.0, None
    for q in range(1, ramanujan_max + 1):
        units = np.array([a for a in range(1, q + 1) if math.gcd(a, q) == 1])
        ph = np.exp(1j * TWO_PI * np.outer(np.arange(q), units) / q).sum(axis=1)
        for n in range(q):
            err = abs(ramanujan_c(q, n) - ph[n])
            if err > worst:
                worst, at = err, (q, n)
    out.append(_item("Ramanujan sum closed form", {"q_max": ramanujan_max, "max_error": float(worst)},
                     worst < tol, {"q": at[0], "n": at[1]} if at else None))

    worst, at = 0.0, None
    for q0, t, xi, zeta, f in random_sf_tuples(sf_count, seed, root=root):
        err = abs(sf_sum_closed(q0, t, xi, zeta, f) - sf_sum_brute(q0, t, xi, zeta, f))
        if err > worst:
            worst, at = err, {"q0": q0, "t": t, "xi": xi, "zeta": zeta, "form": [f.A, f.B, f.C, f.b]}
    out.append(_item("S_f closed form", {"tuples": sf_count, "max_error": float(worst)}, worst < tol, at))

    for p in (3, 5, 7, 11, 13):
        bad = [n for n in range(p) if local_factor_closed(p, n) != local_density(root, p, n)]
        out.append(_item("B_p closed form", {"p": p}, not bad, {"n": bad[:1]}))

    adm = sorted(residue_orbit(root, 8).vectors[:, :3].ravel().tolist()
                 + residue_orbit(tuple(qc.partner(root)), 8).vectors[:, :3].ravel().tolist())
    adm = set(adm)
    vals = {n: two_adic_factor(n, root) for n in range(8)}
    ok = all(v in (0, 8) for v in vals.values()) and {n for n, v in vals.items() if v} == adm
    out.append(_item("2-adic factor in {0, 8}, positive on admissible classes",
                     {"values": {str(n): str(v) for n, v in vals.items()}, "admissible": sorted(adm)}, ok))

    for q in (9, 16):
        bad = [(n, c) for c in range(3) for n in range(q) if local_density(root, q, n, c) != 0]
        out.append(_item("higher prime-power density vanishes", {"q": q}, not bad,
                         {"n": bad[0][0], "coord": bad[0][1]} if bad else None))
    return out
