"""Quadruples, the quadratic form Q and the eight gap reflections.

A quadruple ``(k1, k2, k3, w)`` records the curvatures of three mutually
tangent root circles together with ``w``, half the common sum
``k_i + k_i'`` of opposite circles.  Valid quadruples lie on the cone

    Q(k1, k2, k3, w) = w^2 - 2w(k1 + k2 + k3) + k1^2 + k2^2 + k3^2 = 0.

All arithmetic here is on Python ints, so nothing overflows.
"""
from __future__ import annotations

import math
import random
from typing import Iterable, NamedTuple, Sequence

import numpy as np

LABELS: tuple[str, ...] = (
    "123",
    "1'23",
    "12'3",
    "123'",
    "1'2'3",
    "1'23'",
    "12'3'",
    "1'2'3'",
)
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}

# Gram matrix of Q, so that Q(v) = v^T G v.
GRAM: tuple[tuple[int, ...], ...] = (
    (1, 0, 0, -1),
    (0, 1, 0, -1),
    (0, 0, 1, -1),
    (-1, -1, -1, 1),
)

S_MATRICES: dict[str, tuple[tuple[int, ...], ...]] = {
    "123": ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (2, 2, 2, -1)),
    "1'23": ((-3, 4, 4, 4), (0, 1, 0, 0), (0, 0, 1, 0), (-2, 2, 2, 3)),
    "12'3": ((1, 0, 0, 0), (4, -3, 4, 4), (0, 0, 1, 0), (2, -2, 2, 3)),
    "123'": ((1, 0, 0, 0), (0, 1, 0, 0), (4, 4, -3, 4), (2, 2, -2, 3)),
    "1'2'3": ((-3, -4, 4, 12), (-4, -3, 4, 12), (0, 0, 1, 0), (-2, -2, 2, 7)),
    "1'23'": ((-3, 4, -4, 12), (0, 1, 0, 0), (-4, 4, -3, 12), (-2, 2, -2, 7)),
    "12'3'": ((1, 0, 0, 0), (4, -3, -4, 12), (4, -4, -3, 12), (2, -2, -2, 7)),
    "1'2'3'": (
        (-3, -4, -4, 20),
        (-4, -3, -4, 20),
        (-4, -4, -3, 20),
        (-2, -2, -2, 11),
    ),
}


def primed_mask(label: str) -> tuple[bool, bool, bool]:
    """For each index i, whether the gap uses the primed circle C_i'."""
    out = []
    pos = 0
    for digit in "123":
        pos = label.index(digit, pos)
        out.append(pos + 1 < len(label) and label[pos + 1] == "'")
        pos += 1
    return tuple(out)


class Quadruple(NamedTuple):
    k1: int
    k2: int
    k3: int
    w: int

    @property
    def curvatures(self) -> tuple[int, int, int]:
        return (self.k1, self.k2, self.k3)

    def six(self) -> tuple[int, ...]:
        """Curvatures of C1, C2, C3, C1', C2', C3'."""
        return self.curvatures + tuple(2 * self.w - k for k in self.curvatures)

    def mod(self, q: int) -> tuple[int, int, int, int]:
        return tuple(c % q for c in self)


class ReflectionMatrix(NamedTuple):
    label: str
    entries: tuple[tuple[int, ...], ...]


class NotReducedError(ValueError):
    pass


def reflection(label: str) -> ReflectionMatrix:
    return ReflectionMatrix(label, S_MATRICES[label])


def eval_Q(v: Sequence[int]) -> int:
    k1, k2, k3, w = v
    return w * w - 2 * w * (k1 + k2 + k3) + k1 * k1 + k2 * k2 + k3 * k3


def gram_form(v: Sequence[int]) -> int:
    return sum(v[i] * GRAM[i][j] * v[j] for i in range(4) for j in range(4))


def solve_w(k1: int, k2: int, k3: int) -> set[int]:
    """Integer roots w of Q(k1, k2, k3, w) = 0."""
    s = k1 + k2 + k3
    # w = s +- sqrt(s^2 - (k1^2 + k2^2 + k3^2))
    disc = s * s - (k1 * k1 + k2 * k2 + k3 * k3)
    if disc < 0:
        return set()
    r = math.isqrt(disc)
    if r * r != disc:
        return set()
    return {s - r, s + r}


def mat_vec(m: Sequence[Sequence[int]], v: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(a * b for a, b in zip(row, v)) for row in m)


def mat_mul(a, b) -> tuple[tuple[int, ...], ...]:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)) for i in range(n)
    )


def transpose(a):
    return tuple(zip(*a))


def identity(n: int = 4) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def reflect(v: Sequence[int], label: str) -> Quadruple:
    return Quadruple(*mat_vec(S_MATRICES[label], v))


def partner(v: Sequence[int]) -> Quadruple:
    k1, k2, k3, w = v
    return Quadruple(2 * w - k1, 2 * w - k2, 2 * w - k3, w)


def is_reduced(word: Sequence[str]) -> bool:
    return all(a != b for a, b in zip(word, word[1:]))


def check_word(word: Sequence[str]) -> None:
    for lab in word:
        if lab not in S_MATRICES:
            raise ValueError(f"unknown gap label {lab!r}")
    if not is_reduced(word):
        raise NotReducedError(f"word {list(word)} repeats a generator")


def apply_word(word: Sequence[str], v: Sequence[int]) -> Quadruple:
    """Apply the reflections of ``word`` to ``v``, first label first."""
    check_word(word)
    out = tuple(v)
    for lab in word:
        out = mat_vec(S_MATRICES[lab], out)
    return Quadruple(*out)


def word_matrix(word: Sequence[str]):
    """Integer matrix of ``word`` acting on column vectors (first label acts first)."""
    check_word(word)
    m = identity()
    for lab in word:
        m = mat_mul(S_MATRICES[lab], m)
    return m


def reduced_words(max_length: int, labels: Sequence[str] = LABELS) -> Iterable[tuple[str, ...]]:
    """All reduced words of length <= max_length, shortest first."""
    layer: list[tuple[str, ...]] = [()]
    yield ()
    for _ in range(max_length):
        nxt = []
        for w in layer:
            for lab in labels:
                if not w or w[-1] != lab:
                    nxt.append(w + (lab,))
        yield from nxt
        layer = nxt


def s_array() -> np.ndarray:
    """The eight matrices as an (8, 4, 4) int64 array in canonical label order."""
    return np.array([S_MATRICES[lab] for lab in LABELS], dtype=np.int64)


def primed_array() -> np.ndarray:
    return np.array([primed_mask(lab) for lab in LABELS], dtype=bool)


def self_test(trials: int = 200, seed: int = 0) -> None:
    """Check the hard-coded Gram matrix against eval_Q and the generator identities."""
    rng = random.Random(seed)
    for _ in range(trials):
        v = [rng.randint(-50, 50) for _ in range(4)]
        assert gram_form(v) == eval_Q(v), v
    for lab, s in S_MATRICES.items():
        assert mat_mul(mat_mul(transpose(s), GRAM), s) == GRAM, lab
        assert mat_mul(s, s) == identity(), lab


self_test()
