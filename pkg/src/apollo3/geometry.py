"""Circles of a packing in inversive coordinates, and SVG output.

A circle with signed curvature b and center c is the vector
(b, bhat, x, y) with bhat = b|c|^2 - 1/b and (x, y) = b*c.  A line with unit
normal n, whose disk side is {p : p.n >= d}, is (0, 2d, n).  Every such
vector has <v, v> = 1 under

    <u, v> = x x' + y y' - (b bhat' + bhat b') / 2,

tangent circles have <u, v> = -1 and orthogonal ones <u, v> = 0.
Reflection in a circle m is the linear map v -> v - 2<v, m> m.

Small circles deep in the packing have coordinates of size b while
<v, v> = 1, so binary64 loses about log10(b^2) digits.  Coordinates are
therefore carried at 50 significant digits and converted to float only for
output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import mpmath

from . import quadratic_core as qc
from .quadratic_core import LABELS, Quadruple

CTX = mpmath.MPContext()
CTX.dps = 50

CONSTRUCT_TOL = 1e-30
VERIFY_TOL = 1e-9
ROUND_TOL = 1e-6


class NoIntegerW(ValueError):
    pass


class DegenerateConfiguration(ValueError):
    pass


class NotTangent(ValueError):
    pass


def _num(v):
    return CTX.mpf(v)


class InversiveCircle(NamedTuple):
    b: object
    bhat: object
    x: object
    y: object

    @classmethod
    def make(cls, b, bhat, x, y) -> "InversiveCircle":
        return cls(_num(b), _num(bhat), _num(x), _num(y))

    @classmethod
    def from_center(cls, b, cx, cy) -> "InversiveCircle":
        b, cx, cy = _num(b), _num(cx), _num(cy)
        return cls(b, b * (cx * cx + cy * cy) - 1 / b, b * cx, b * cy)

    @classmethod
    def line(cls, nx, ny, d) -> "InversiveCircle":
        return cls.make(0, 2 * _num(d), nx, ny)

    @property
    def is_line(self) -> bool:
        return abs(self.b) < CONSTRUCT_TOL

    def center(self) -> tuple[float, float]:
        return (float(self.x / self.b), float(self.y / self.b))

    def radius(self) -> float:
        return float(1 / abs(self.b))

    def curvature_int(self) -> int:
        return int(CTX.nint(self.b))

    def norm(self) -> float:
        return float(lorentz(self, self))

    def as_floats(self) -> tuple[float, float, float, float]:
        return tuple(float(v) for v in self)


def lorentz(u: Sequence, v: Sequence):
    return u[2] * v[2] + u[3] * v[3] - (u[0] * v[1] + u[1] * v[0]) / 2


def _dist(u: InversiveCircle, v: InversiveCircle):
    return CTX.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))


def tangency_residual(u: InversiveCircle, v: InversiveCircle) -> float:
    """|distance(centers) - |r1 + r2|| with signed radii, or the line analogue."""
    if u.is_line and v.is_line:
        return float(abs(lorentz(u, v) + 1))
    if u.is_line:
        u, v = v, u
    cx, cy = u.x / u.b, u.y / u.b
    r = 1 / u.b
    if v.is_line:
        # signed distance from the center to the line, measured away from the disk side
        dist = v.bhat / 2 - (v.x * cx + v.y * cy)
        return float(abs(dist - r))
    dx, dy = v.x / v.b, v.y / v.b
    return float(abs(CTX.sqrt((cx - dx) ** 2 + (cy - dy) ** 2) - abs(r + 1 / v.b)))


def invert(c: InversiveCircle, mirror: InversiveCircle) -> InversiveCircle:
    """Reflect c in mirror.  Reflecting a circle in itself reverses its orientation."""
    t = 2 * lorentz(c, mirror)
    return InversiveCircle(*(a - t * m for a, m in zip(c, mirror)))


def _det3(a):
    return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))


def dual_circle(c1: InversiveCircle, c2: InversiveCircle, c3: InversiveCircle,
                tol: float = VERIFY_TOL) -> InversiveCircle:
    """Circle (or line) through the three tangency points, orthogonal to all three."""
    for a, b in ((c1, c2), (c1, c3), (c2, c3)):
        r = tangency_residual(a, b)
        if r > tol:
            raise NotTangent(f"circles are not tangent (residual {r:.2e})")
    # <m, c> = m . (L c) with L c = (-bhat/2, -b/2, x, y); m spans the null space
    rows = [(-c.bhat / 2, -c.b / 2, c.x, c.y) for c in (c1, c2, c3)]
    m = []
    for j in range(4):
        minor = [[r[k] for k in range(4) if k != j] for r in rows]
        m.append((-1) ** j * _det3(minor))
    n = lorentz(m, m)
    if n <= 0:
        raise DegenerateConfiguration("dual circle is not spacelike")
    s = CTX.sqrt(n)
    m = [x / s for x in m]
    # fix the sign so the result is deterministic
    lead = next(x for x in m if abs(x) > CONSTRUCT_TOL)
    if lead < 0:
        m = [-x for x in m]
    return InversiveCircle(*m)


def _tangent_candidates(b, A: InversiveCircle, B: InversiveCircle) -> list[InversiveCircle]:
    """Circles of curvature b tangent to both A and B (up to two)."""
    b = _num(b)
    # unknowns u = (bhat, x, y); <v, A> = -1 is linear in u once b is fixed
    r1 = (-A.b / 2, A.x, A.y)
    r2 = (-B.b / 2, B.x, B.y)
    h1 = -1 + b * A.bhat / 2
    h2 = -1 + b * B.bhat / 2
    n = (r1[1] * r2[2] - r1[2] * r2[1], r1[2] * r2[0] - r1[0] * r2[2], r1[0] * r2[1] - r1[1] * r2[0])
    # least-norm particular solution u0 = M^T (M M^T)^-1 h
    g11 = sum(x * x for x in r1)
    g12 = sum(x * y for x, y in zip(r1, r2))
    g22 = sum(x * x for x in r2)
    det = g11 * g22 - g12 * g12
    if abs(det) < CONSTRUCT_TOL:
        return []
    l1 = (g22 * h1 - g12 * h2) / det
    l2 = (g11 * h2 - g12 * h1) / det
    u0 = [l1 * x + l2 * y for x, y in zip(r1, r2)]
    # x^2 + y^2 - b*bhat = 1 along u0 + t n
    qa = n[1] ** 2 + n[2] ** 2
    qb = 2 * (u0[1] * n[1] + u0[2] * n[2]) - b * n[0]
    qc_ = u0[1] ** 2 + u0[2] ** 2 - b * u0[0] - 1
    disc = qb * qb - 4 * qa * qc_
    scale = max(qb * qb, abs(4 * qa * qc_), 1)
    if disc < -1e-20 * scale:
        return []
    if disc < 1e-40 * scale:
        disc = _num(0)  # a double root
    out = []
    for sgn in (1, -1):
        t = (-qb + sgn * CTX.sqrt(disc)) / (2 * qa)
        out.append(InversiveCircle(b, *(u + t * d for u, d in zip(u0, n))))
    return out


def _height(c: InversiveCircle):
    return c.y / c.b if not c.is_line else c.y


@dataclass
class SixCircleConfig:
    """Circles C1, C2, C3, C1', C2', C3' together with the quadruple they realize."""

    circles: tuple[InversiveCircle, ...]
    quad: Quadruple

    @property
    def partner_quad(self) -> Quadruple:
        return qc.partner(self.quad)

    def gap(self, label: str) -> tuple[int, int, int]:
        """Indices of the three circles bounding gap ``label``."""
        return tuple(i + 3 if p else i for i, p in enumerate(qc.primed_mask(label)))

    def reflect(self, label: str) -> "SixCircleConfig":
        """Invert the three circles opposite the gap in its dual circle."""
        g = self.gap(label)
        m = dual_circle(*(self.circles[i] for i in g))
        quad = qc.reflect(self.quad, label)
        six = quad.six()
        out = list(self.circles)
        for i in range(6):
            if i not in g:
                out[i] = _snap(invert(self.circles[i], m), six[i])
        return SixCircleConfig(tuple(out), quad)

    def tangency_residual(self) -> float:
        r = 0.0
        for i in range(6):
            for j in range(i + 1, 6):
                if j - i == 3:
                    continue  # opposite circles are disjoint
                r = max(r, tangency_residual(self.circles[i], self.circles[j]))
        return r

    def curvature_residual(self) -> float:
        return max(float(abs(c.b - k)) for c, k in zip(self.circles, self.quad.six()))


def _snap(c: InversiveCircle, k: int) -> InversiveCircle:
    """Use the exact curvature and restore the normalization."""
    if abs(c.b - k) > ROUND_TOL * max(1, abs(k)):
        raise AssertionError(f"geometric curvature {c.b} drifted from {k}")
    if k == 0:
        return c
    return InversiveCircle(_num(k), (c.x * c.x + c.y * c.y - 1) / k, c.x, c.y)


def root_config(k1: int, k2: int, k3: int, w_choice: str = "smaller") -> SixCircleConfig:
    """Canonical placement of the six root circles.

    With k1 < 0 the bounding circle is centered at the origin, C2 sits on the
    negative x-axis and C3 is placed above (or on) the axis.  Otherwise C1 is
    at the origin (or is a vertical line) and C2 lies to its right.  The
    primed circles are the upper-most choice of mutually tangent fillings.
    """
    ws = sorted(qc.solve_w(k1, k2, k3))
    if not ws:
        raise NoIntegerW(f"no integer w for ({k1}, {k2}, {k3})")
    if [k1, k2, k3].count(0) >= 2:
        raise DegenerateConfiguration("two of the curvatures are zero")
    w = ws[0] if w_choice == "smaller" else ws[-1]
    quad = Quadruple(k1, k2, k3, w)
    one = _num(1)

    if k1 < 0:
        if k2 <= 0:
            raise DegenerateConfiguration("bounding circle needs positive inner curvatures")
        R = -one / k1
        C1 = InversiveCircle.from_center(k1, 0, 0)
        C2 = InversiveCircle.from_center(k2, -(R - one / k2), 0)
    elif k1 == 0:
        C2 = InversiveCircle.from_center(k2, 0, 0)
        C1 = InversiveCircle.line(-1, 0, one / k2)
    else:
        r1 = one / k1
        C1 = InversiveCircle.from_center(k1, 0, 0)
        if k2 == 0:
            C2 = InversiveCircle.line(1, 0, r1)
        else:
            C2 = InversiveCircle.from_center(k2, r1 + one / k2, 0)
    cands = _tangent_candidates(k3, C1, C2)
    if not cands:
        raise DegenerateConfiguration("no third circle fits")
    C3 = max(cands, key=_height)

    six = quad.six()
    base = (C1, C2, C3)
    options = []
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        opts = _tangent_candidates(six[i + 3], base[j], base[k])
        # drop the unprimed circle itself when it happens to qualify
        opts = [o for o in opts if _dist(o, base[i]) > 1e-20] or opts
        options.append(opts)
    best = None
    for a in options[0]:
        for b in options[1]:
            for c in options[2]:
                res = max(abs(lorentz(a, b) + 1), abs(lorentz(a, c) + 1), abs(lorentz(b, c) + 1))
                if res > 1e-20:
                    continue
                h = _height(a) + _height(b) + _height(c)
                if best is None or h > best[0] + 1e-20:
                    best = (h, (a, b, c))
    if best is None:
        raise DegenerateConfiguration("primed circles could not be placed")
    circles = tuple(_snap(c, k) for c, k in zip(base + best[1], six))
    return SixCircleConfig(circles, quad)


def other_filling(config: SixCircleConfig) -> SixCircleConfig:
    """Swap the primed triple for the other one by inverting in dual(C1, C2, C3)."""
    return config.reflect("123")


def _key(c: InversiveCircle) -> tuple:
    return tuple(int(CTX.nint(v / ROUND_TOL)) for v in c)


def generate_circles(config: SixCircleConfig, max_curvature: int) -> Iterator[InversiveCircle]:
    """Every circle of the packing with curvature <= max_curvature, once each.

    Walks reduced words in the eight gap reflections; a branch stops when
    the three circles it would add all exceed the bound.  Reflections that
    leave the quadruple unchanged are skipped, so a packing between two
    parallel lines is drawn over a single period.
    """
    seen: set = set()

    def emit(c: InversiveCircle):
        k = _key(c)
        if k in seen:
            return None
        seen.add(k)
        return c

    for c, k in zip(config.circles, config.quad.six()):
        if k <= max_curvature and emit(c):
            yield c
    stack = [(config, None)]
    while stack:
        cfg, last = stack.pop()
        for lab in LABELS:
            if lab == last:
                continue
            quad = qc.reflect(cfg.quad, lab)
            if quad == cfg.quad:
                continue
            g = cfg.gap(lab)
            six = quad.six()
            new_idx = [i for i in range(6) if i not in g]
            if min(six[i] for i in new_idx) > max_curvature:
                continue
            child = cfg.reflect(lab)
            for i in new_idx:
                if six[i] <= max_curvature and emit(child.circles[i]):
                    yield child.circles[i]
            stack.append((child, lab))


def generate_configs(config: SixCircleConfig, max_curvature: int) -> Iterator[SixCircleConfig]:
    """The configurations visited by generate_circles, for consistency checks."""
    yield config
    stack = [(config, None)]
    while stack:
        cfg, last = stack.pop()
        for lab in LABELS:
            if lab == last:
                continue
            quad = qc.reflect(cfg.quad, lab)
            if quad == cfg.quad:
                continue
            g = cfg.gap(lab)
            if min(quad.six()[i] for i in range(6) if i not in g) > max_curvature:
                continue
            child = cfg.reflect(lab)
            yield child
            stack.append((child, lab))


def circles_json(circles: Iterable[InversiveCircle]) -> str:
    return json.dumps([
        dict(zip(("b", "bhat", "x", "y"), c.as_floats()), curvature_int=c.curvature_int())
        for c in circles
    ], indent=1)


def _fmt(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _clip_line(c: InversiveCircle, vb) -> tuple[float, float, float, float] | None:
    """Segment of a line inside the viewBox, in SVG coordinates (y pointing down)."""
    x0, y0, w, h = vb
    nx, ny, d = float(c.x), -float(c.y), float(c.bhat) / 2
    pts = []
    # intersect nx*X + ny*Ys = d with the four sides
    for X in (x0, x0 + w):
        if abs(ny) > 1e-12:
            Y = (d - nx * X) / ny
            if y0 - 1e-12 <= Y <= y0 + h + 1e-12:
                pts.append((X, Y))
    for Y in (y0, y0 + h):
        if abs(nx) > 1e-12:
            X = (d - ny * Y) / nx
            if x0 - 1e-12 <= X <= x0 + w + 1e-12:
                pts.append((X, Y))
    pts = sorted(set((round(p[0], 12), round(p[1], 12)) for p in pts))
    if len(pts) < 2:
        return None
    return (*pts[0], *pts[-1])


def render_svg(circles: Sequence[InversiveCircle], viewport=(-1.05, -1.05, 2.1, 2.1), style=None) -> str:
    """Plain SVG 1.1 text; output depends only on the inputs."""
    st = {"stroke": "black", "stroke-width": "0.002", "fill": "none"}
    if style:
        st.update(style)
    x0, y0, w, h = viewport
    attrs = " ".join(f'{k}="{v}"' for k, v in st.items())
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}"')
    if not circles:
        return head + "/>\n"
    out = [head + ">", f"<g {attrs}>"]
    for c in sorted(circles, key=lambda c: (abs(c.b), c.b, c.x, c.y)):
        if c.is_line:
            seg = _clip_line(c, viewport)
            if seg:
                out.append(f'<line x1="{_fmt(seg[0])}" y1="{_fmt(seg[1])}" x2="{_fmt(seg[2])}" y2="{_fmt(seg[3])}"/>')
        else:
            cx, cy = c.center()
            # flip y so the picture has the usual orientation
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(-cy)}" r="{_fmt(c.radius())}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
