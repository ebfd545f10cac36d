"""Finite differences on dual groups: polynomials, detection, fitting, branch logs.

Functions live on finite point sets of a group (a *window*): a box
``[-W, W]`` in every Z coordinate, the grid ``j/M`` in every circle
coordinate, and all of each finite factor.

Polynomial detection uses unit-coordinate differences only.  On a box in
Z^k a function is a polynomial of total degree <= n exactly when every mixed
difference ``D_{e_1}^{i_1} ... D_{e_k}^{i_k} f`` with ``i_1 + ... + i_k = n + 1``
vanishes, because ``D_h`` for ``h = sum c_i e_i`` expands into a finite
combination of shifted unit differences.  Along compact coordinates a
polynomial must be constant, so one unit step per compact axis suffices.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    BranchInconsistency,
    NotPolynomial,
    ResidualTooLarge,
    StepTooLarge,
    VanishingValue,
    WindowExhausted,
    WindowTooSmall,
)
from .groups import GroupDescriptor, GroupElement

DEFAULT_D_MAX = 8


def canonical_key(x: GroupElement):
    """Ordering used to pick reproducible witnesses: small points first."""
    return (sum(abs(v) for v in x.z), tuple(-v for v in x.z), x.t, x.f)


@dataclass(frozen=True)
class Window:
    """Finite sample of a group: Z box radius, circle grid denominator."""

    radius: int | tuple[int, ...] = 8
    torus_grid: int = 16

    def __post_init__(self):
        if self.torus_grid < 2:
            raise ValueError("torus grid denominator must be >= 2")

    def radii(self, g: GroupDescriptor) -> tuple[int, ...]:
        if isinstance(self.radius, int):
            return (self.radius,) * g.z_rank
        if len(self.radius) != g.z_rank:
            raise ValueError(f"window needs {g.z_rank} radii")
        return tuple(self.radius)

    def scaled(self, k: int) -> Window:
        r = self.radius * k if isinstance(self.radius, int) else tuple(v * k for v in self.radius)
        return Window(r, self.torus_grid)

    def points(self, g: GroupDescriptor) -> list[GroupElement]:
        M = self.torus_grid
        axes = [range(-w, w + 1) for w in self.radii(g)]
        t_axes = [[Fraction(j, M) for j in range(M)]] * g.t_rank
        f_axes = [range(n) for n in g.finite_orders]
        pts = [g.element(z, t, f)
               for z in itertools.product(*axes)
               for t in itertools.product(*t_axes)
               for f in itertools.product(*f_axes)]
        return sorted(pts, key=canonical_key)


class LatticeFunction:
    """A function tabulated on a finite set of group points."""

    def __init__(self, group: GroupDescriptor, values: Mapping[GroupElement, complex]):
        self.group = group
        self.values = dict(values)

    @classmethod
    def from_callable(cls, group: GroupDescriptor, window: Window | Iterable[GroupElement],
                      fn: Callable) -> LatticeFunction:
        pts = window.points(group) if isinstance(window, Window) else list(window)
        return cls(group, {y: fn(y) for y in pts})

    def __call__(self, y: GroupElement):
        try:
            return self.values[y]
        except KeyError:
            raise WindowExhausted(f"{y} is outside the tabulated window", witness=y) from None

    def __contains__(self, y) -> bool:
        return y in self.values

    def __len__(self) -> int:
        return len(self.values)

    @property
    def points(self) -> list[GroupElement]:
        return sorted(self.values, key=canonical_key)

    def map(self, fn: Callable) -> LatticeFunction:
        return LatticeFunction(self.group, {y: fn(v) for y, v in self.values.items()})

    def max_abs(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    def argmax_abs(self):
        return max(self.values.items(), key=lambda kv: (abs(kv[1]),), default=(None, 0.0))

    def z_extent(self) -> list[int]:
        """Number of distinct values taken by each Z coordinate."""
        return [len({y.z[i] for y in self.values}) for i in range(self.group.z_rank)]


def delta(h: GroupElement, f: LatticeFunction) -> LatticeFunction:
    """(D_h f)(y) = f(y + h) - f(y) wherever both points are tabulated."""
    vals = f.values
    out = {}
    for y, v in vals.items():
        w = vals.get(y + h)
        if w is not None:
            out[y] = w - v
    if not out:
        raise WindowExhausted(f"window exhausted by shift {h}", witness=h)
    return LatticeFunction(f.group, out)


def iterated_delta(shifts: Iterable[GroupElement], f: LatticeFunction) -> LatticeFunction:
    for h in shifts:
        f = delta(h, f)
    return f


def compact_steps(g: GroupDescriptor, points: Iterable[GroupElement]) -> list[GroupElement]:
    """Unit steps along circle (grid 1/M inferred from the points) and finite axes."""
    pts = list(points)
    steps = []
    zero = g.zero()
    for i in range(g.t_rank):
        m = 1
        for y in pts:
            m = math.lcm(m, y.t[i].denominator)
        if m > 1:
            t = list(zero.t)
            t[i] = Fraction(1, m)
            steps.append(g.element(zero.z, t, zero.f))
    for i in range(len(g.finite_orders)):
        f = list(zero.f)
        f[i] = 1
        steps.append(g.element(zero.z, zero.t, f))
    return steps


def z_unit(g: GroupDescriptor, i: int, step: int = 1) -> GroupElement:
    zero = g.zero()
    z = list(zero.z)
    z[i] = step
    return g.element(z, zero.t, zero.f)


# --- polynomials -----------------------------------------------------------


def _coerce_number(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, complex):
        return float(v.real) if v.imag == 0 else v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            c = complex(v)
            return c.real if c.imag == 0 else c
    return float(v)


def format_number(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return repr(v)
    return repr(float(v))


@dataclass(frozen=True)
class PolynomialFn:
    """Polynomial in the Z coordinates of a group; constant along compact ones.

    ``coeffs`` maps multi-indices (one exponent per Z coordinate) to
    coefficients; zero coefficients are dropped.
    """

    group: GroupDescriptor
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in self.coeffs.items():
            k = tuple(int(e) for e in k)
            if len(k) != self.group.z_rank:
                raise ValueError(f"multi-index {k} does not match {self.group}")
            c = _coerce_number(c)
            if c != 0:
                clean[k] = clean.get(k, 0) + c
        object.__setattr__(self, "coeffs", {k: c for k, c in sorted(clean.items()) if c != 0})

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, *k: int):
        return self.coeffs.get(tuple(k), 0)

    def __call__(self, y) -> float | complex | Fraction:
        z = y.z if isinstance(y, GroupElement) else tuple(y) if isinstance(y, (tuple, list)) else (y,)
        total = 0
        for k, c in self.coeffs.items():
            term = c
            for zi, e in zip(z, k):
                term = term * zi ** e
            total = total + term
        return total

    def evaluate_float(self, y) -> float | complex:
        v = self(y)
        return complex(v) if isinstance(v, complex) else float(v)

    @property
    def is_real(self) -> bool:
        return not any(isinstance(c, complex) for c in self.coeffs.values())

    def to_json(self) -> dict:
        return {"(" + ",".join(str(e) for e in k) + ")": format_number(c)
                for k, c in self.coeffs.items()}

    @classmethod
    def from_json(cls, group: GroupDescriptor, data: Mapping[str, str]) -> PolynomialFn:
        coeffs = {}
        for key, val in data.items():
            inner = key.strip().strip("()")
            k = tuple(int(p) for p in inner.split(",") if p.strip())
            coeffs[k] = _coerce_number(val)
        return cls(group, coeffs)


# --- detection and fitting -------------------------------------------------


def _check_compact_constancy(f: LatticeFunction, tol: float):
    for s in compact_steps(f.group, f.values):
        d = delta(s, f)
        y, v = d.argmax_abs()
        if abs(v) >= tol:
            raise NotPolynomial(f"not constant along compact step {s}", witness=y, residual=abs(v))


def polynomial_degree(f: LatticeFunction, d_max: int = DEFAULT_D_MAX, tol: float = 1e-9,
                      steps: tuple[int, ...] | None = None) -> int:
    """Smallest n <= d_max with every unit difference of order n + 1 vanishing.

    ``steps`` gives the lattice spacing per Z coordinate (default 1), for
    functions supported on a sublattice.  Raises :class:`NotPolynomial`
    with the worst point when no n <= d_max works.
    """
    g = f.group
    extent = f.z_extent()
    if any(e < d_max + 2 for e in extent):
        raise WindowTooSmall(f"window has {min(extent)} points along some axis; "
                             f"degree cap {d_max} needs {d_max + 2}")
    _check_compact_constancy(f, tol)
    if g.z_rank == 0:
        return 0
    steps = steps or (1,) * g.z_rank
    units = [z_unit(g, i, s) for i, s in enumerate(steps)]
    # level[k] = mixed difference with multi-index k; grow the highest used axis only
    level = {(0,) * g.z_rank: f}
    worst = (None, 0.0)
    for order in range(1, d_max + 2):
        nxt = {}
        for k, fk in level.items():
            top = max((i for i, e in enumerate(k) if e), default=0)
            for i in range(top, g.z_rank):
                kk = list(k)
                kk[i] += 1
                try:
                    nxt[tuple(kk)] = delta(units[i], fk)
                except WindowExhausted:
                    continue
        if not nxt:
            raise WindowTooSmall(f"no differences of order {order} fit in the window")
        worst = (None, 0.0)
        for fk in nxt.values():
            y, v = fk.argmax_abs()
            if abs(v) > abs(worst[1]):
                worst = (y, v)
        if abs(worst[1]) < tol:
            return order - 1
        level = nxt
    raise NotPolynomial(f"differences of order {d_max + 1} do not vanish",
                        witness=worst[0], residual=abs(worst[1]))


def _binomial_poly(k: int, base: float, step: float) -> np.ndarray:
    """Monomial coefficients (in y) of C((y - base)/step, k)."""
    p = np.array([1.0])
    for r in range(k):
        # ((y - base)/step - r) / (r + 1)
        lin = np.array([(-base / step - r), 1.0 / step]) / (r + 1)
        p = np.convolve(p, lin)
    return p


def fit_polynomial(f: LatticeFunction, degree: int, steps: tuple[int, ...] | None = None,
                   tol: float = 1e-9) -> tuple[PolynomialFn, float]:
    """Recover a polynomial of total degree <= ``degree`` by Newton differences.

    Forward differences (on the sublattice given by ``steps``) are taken at
    the window point nearest 0 whose stencil fits, then converted to
    monomial coefficients.
    Returns ``(polynomial, residual)``; raises :class:`ResidualTooLarge`
    carrying both when the residual over the window is ``>= tol``.
    """
    g = f.group
    n = g.z_rank
    steps = steps or (1,) * n
    pts = list(f.values)
    if n == 0:
        base_val = f(g.zero())
        poly = PolynomialFn(g, {(): base_val} if base_val != 0 else {})
        residual = max(abs(v - base_val) for v in f.values.values())
        if residual >= tol:
            raise ResidualTooLarge("function is not constant", fit=poly, residual=residual)
        return poly, residual
    zero = g.zero()
    # anchor nearest 0 that keeps the stencil inside the window: less cancellation
    base = []
    for i in range(n):
        coords = sorted({y.z[i] for y in pts})
        usable = [c for c in coords if c + steps[i] * degree <= coords[-1]]
        base.append(min(usable or coords[:1], key=abs))
    base = tuple(base)
    grid = np.full((degree + 1,) * n, np.nan, dtype=complex)
    for j in itertools.product(range(degree + 1), repeat=n):
        if sum(j) > degree:
            continue
        y = g.element([b + s * e for b, s, e in zip(base, steps, j)], zero.t, zero.f)
        if y not in f:
            raise WindowTooSmall(f"fit of degree {degree} needs the point {y}")
        grid[j] = f(y)
    mono = np.zeros((degree + 1,) * n, dtype=complex)
    for k in itertools.product(range(degree + 1), repeat=n):
        if sum(k) > degree:
            continue
        arr = grid
        for axis, e in enumerate(k):
            if e:
                arr = np.diff(arr, n=e, axis=axis)
        c = arr[(0,) * n]
        if c == 0:
            continue
        term = np.array(c)
        for axis, e in enumerate(k):
            term = np.multiply.outer(term, _binomial_poly(e, base[axis], steps[axis]))
        sl = tuple(slice(0, s) for s in term.shape)
        mono[sl] += term
    scale = max(1.0, float(np.max(np.abs(mono))))
    coeffs = {}
    for k in itertools.product(range(degree + 1), repeat=n):
        c = mono[k]
        if abs(c) <= 1e-11 * scale:
            continue
        c = complex(c)
        coeffs[k] = c.real if abs(c.imag) <= 1e-11 * scale else c
    poly = PolynomialFn(g, coeffs)
    residual = max(abs(v - poly.evaluate_float(y)) for y, v in f.values.items())
    if residual >= tol:
        raise ResidualTooLarge(f"fit of degree {degree} leaves residual {residual:.3g}",
                               fit=poly, residual=residual)
    return poly, residual


# --- continuous logarithms -------------------------------------------------


def default_steps(g: GroupDescriptor, points: Iterable[GroupElement]) -> list[GroupElement]:
    return [z_unit(g, i) for i in range(g.z_rank)] + compact_steps(g, points)


def branch_log(f: LatticeFunction, steps: list[GroupElement] | None = None,
               min_modulus: float = 1e-300, near_pi: float = 0.2,
               tol: float = 1e-6) -> LatticeFunction:
    """Continuous logarithm L with L(0) = 0 and exp(L) = f on the window.

    L is accumulated along a spanning tree of unit steps.  Every step that
    connects two tabulated points, tree edge or not, is then re-checked, so
    any closed lattice loop with non-zero winding is reported as
    :class:`BranchInconsistency`.  Steps whose ratio has argument within
    ``near_pi`` of pi are refused with :class:`StepTooLarge`.
    """
    g = f.group
    zero = g.zero()
    vals = f.values
    if zero not in vals:
        raise WindowTooSmall("window must contain 0")
    for y in f.points:
        if not abs(vals[y]) > min_modulus:
            raise VanishingValue(f"characteristic function vanishes at {y}", witness=y)
    if abs(vals[zero] - 1) > 1e-9:
        raise ValueError(f"f(0) = {vals[zero]} must be 1")
    steps = steps if steps is not None else default_steps(g, vals)
    limit = math.pi - near_pi

    def step_log(y, s):
        ratio = vals[y + s] / vals[y]
        if abs(cmath.phase(ratio)) > limit:
            raise StepTooLarge(f"step {s} at {y} has argument near pi", witness=(y, s))
        return cmath.log(ratio)

    L = {zero: 0j}
    frontier = [zero]
    # breadth-first over axes in order gives axis-monotone paths from 0
    while frontier:
        nxt = []
        for y in frontier:
            for s in steps:
                for w in (y + s, y - s):
                    if w in vals and w not in L:
                        L[w] = L[y] + (step_log(y, s) if w == y + s else -step_log(w, s))
                        nxt.append(w)
        frontier = nxt
    missing = [y for y in vals if y not in L]
    if missing:
        raise WindowTooSmall(f"window is not connected by the steps (e.g. {missing[0]})")
    for y in f.points:
        for s in steps:
            w = y + s
            if w in vals:
                gap = L[w] - L[y] - step_log(y, s)
                if abs(gap) >= tol:
                    raise BranchInconsistency(f"loop through {y} -> {w} winds",
                                              witness=(y, s), residual=abs(gap))
    return LatticeFunction(g, L)
