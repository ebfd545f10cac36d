"""Distributions on groups, characteristic functions and Bochner certificates."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    Inconclusive,
    MismatchedGroups,
    NonCompactSubgroup,
    PhiNotReal,
    PointOutsideGroup,
    SpectralNotSupported,
    TailBoundUnavailable,
    UnsupportedSubgroupForm,
    WeightSumNotOne,
)
from .groups import (
    GroupDescriptor,
    GroupElement,
    Homomorphism,
    Subgroup,
    angle_to_unit,
    annihilator,
    pair,
    pair_angle,
)
from .polyfd import PolynomialFn, Window

PD_TOL = 1e-12
MIN_MODULUS = 1e-300
ATOMIC_ZERO = 1e-12
MIN_GRID = 1024


# --- characteristic functions ---------------------------------------------


class CharFn:
    """A function on a character group Y, evaluated pointwise.

    Subclasses provide ``value(y)``; calling the object accepts elements or
    bare coordinates for one-coordinate groups.
    """

    dual_owner: GroupDescriptor

    def __call__(self, y) -> complex:
        return self.value(self.dual_owner.coerce(y))

    def value(self, y: GroupElement) -> complex:
        raise NotImplementedError

    def log_value(self, y: GroupElement) -> complex | None:
        """A logarithm of f(y), or None where f vanishes.

        Closed forms override this so that tiny values never underflow.
        """
        v = self.value(y)
        return None if abs(v) <= MIN_MODULUS else cmath.log(v)

    def abs_tail(self, N: int) -> float:
        """Upper bound for sum_{|n| > N} |f(n)| when Y = Z."""
        raise TailBoundUnavailable(f"no tail bound for {type(self).__name__}")

    @property
    def predual(self) -> GroupDescriptor:
        return self.dual_owner.dual()


@dataclass(frozen=True, eq=False)
class AtomicTransform(CharFn):
    dist: Distribution

    @property
    def dual_owner(self):
        return self.dist.owner.dual()

    def value(self, y):
        return sum(float(w) * pair(x, y) for x, w in self.dist.atoms)

    def log_value(self, y):
        # a short sum of rational multiples of roots of unity is either 0 or
        # far above rounding noise
        v = self.value(y)
        return None if abs(v) <= ATOMIC_ZERO else cmath.log(v)


@dataclass(frozen=True, eq=False)
class ExpPoly(CharFn):
    """y -> (shift, y) exp(-phi(y)); ``certified`` once Bochner has passed."""

    dual_owner: GroupDescriptor
    shift: GroupElement
    phi: PolynomialFn
    certified: bool = False

    def value(self, y):
        return pair(self.shift, y) * math.exp(-float(self.phi(y)))

    def log_value(self, y):
        return complex(-float(self.phi(y)), 2 * math.pi * float(pair_angle(self.shift, y)))

    def abs_tail(self, N: int) -> float:
        if self.dual_owner != GroupDescriptor(1):
            raise TailBoundUnavailable("tail bounds are implemented for Y = Z only")
        return _exp_poly_tail(self.phi, N)


@dataclass(frozen=True, eq=False)
class SubgroupIndicator(CharFn):
    subgroup: Subgroup

    @property
    def dual_owner(self):
        return self.subgroup.owner

    def value(self, y):
        return 1.0 + 0j if self.subgroup.contains(y) else 0j

    def abs_tail(self, N: int) -> float:
        if self.subgroup.is_trivial():
            return 0.0
        raise TailBoundUnavailable("indicator of an infinite subgroup is not summable")


@dataclass(frozen=True, eq=False)
class Product(CharFn):
    factors: tuple[CharFn, ...]

    def __post_init__(self):
        owners = {f.dual_owner for f in self.factors}
        if len(owners) != 1:
            raise MismatchedGroups("factors live on different groups")

    @property
    def dual_owner(self):
        return self.factors[0].dual_owner

    def value(self, y):
        out = 1.0 + 0j
        for f in self.factors:
            out *= f.value(y)
        return out

    def log_value(self, y):
        total = 0j
        for f in self.factors:
            v = f.log_value(y)
            if v is None:
                return None
            total += v
        return total

    def abs_tail(self, N):
        # |f g| <= |f| because |g| <= 1
        bounds = []
        for f in self.factors:
            try:
                bounds.append(f.abs_tail(N))
            except TailBoundUnavailable:
                pass
        if not bounds:
            raise TailBoundUnavailable("no factor has a tail bound")
        return min(bounds)


@dataclass(frozen=True, eq=False)
class ZeroExtension(CharFn):
    """Extend ``inner`` from an open subgroup A of Y by zero.

    A must be in product form with full circle axes; points of A are sent
    to the inner group by dividing each Z coordinate by its index and each
    finite coordinate by its step.
    """

    inner: CharFn
    subgroup: Subgroup

    def __post_init__(self):
        A = self.subgroup
        if A.kind != "product" or any(m == 0 for m in A.z_mods) or any(A.t_orders):
            raise UnsupportedSubgroupForm("zero extension needs a finite-index product subgroup")
        if self.inner.dual_owner != self.quotient_dual:
            raise MismatchedGroups(f"inner lives on {self.inner.dual_owner}, "
                                   f"expected {self.quotient_dual}")

    @property
    def dual_owner(self):
        return self.subgroup.owner

    @property
    def quotient_dual(self) -> GroupDescriptor:
        A = self.subgroup
        orders = tuple(n // d for n, d in zip(A.owner.finite_orders, A.f_steps) if n // d > 1)
        return GroupDescriptor(A.owner.z_rank, A.owner.t_rank, orders)

    def to_inner(self, y: GroupElement) -> GroupElement:
        A = self.subgroup
        z = [v // m for v, m in zip(y.z, A.z_mods)]
        f = [v // d for v, d, n in zip(y.f, A.f_steps, A.owner.finite_orders) if n // d > 1]
        return self.quotient_dual.element(z, y.t, f)

    def value(self, y):
        if not self.subgroup.contains(y):
            return 0j
        return self.inner.value(self.to_inner(y))

    def log_value(self, y):
        if not self.subgroup.contains(y):
            return None
        return self.inner.log_value(self.to_inner(y))

    def abs_tail(self, N):
        m = self.subgroup.z_mods[0]
        return self.inner.abs_tail(N // m)


@dataclass(frozen=True, eq=False)
class Table(CharFn):
    """Values known only on a window; evaluation elsewhere is an error."""

    dual_owner: GroupDescriptor
    values: dict

    def value(self, y):
        try:
            return complex(self.values[y])
        except KeyError:
            raise PointOutsideGroup(f"{y} is outside the tabulated window") from None


def _exp_poly_tail(phi: PolynomialFn, N: int) -> float:
    """sum_{|n| > N} exp(-phi(n)) by geometric domination on each side.

    Valid when the increments of phi are non-decreasing beyond N, which is
    verified by checking that the second difference, written as a polynomial
    in m >= 0 around N + 1, has non-negative coefficients.
    """
    total = 0.0
    for sign in (1, -1):
        c = [Fraction(0)] * (phi.degree + 1)
        for (e,), coef in phi.coeffs.items():
            if isinstance(coef, complex):
                raise TailBoundUnavailable("phi must be real")
            c[e] += Fraction(coef) * sign ** e
        side = np.polynomial.Polynomial([float(v) for v in c])
        shifted = _shift_poly(c, N + 1)
        second = [shifted_i for shifted_i in _second_difference(shifted)]
        if any(v < 0 for v in second) or all(v == 0 for v in second):
            raise TailBoundUnavailable(f"phi is not convex beyond {N}")
        p1, p2 = float(side(N + 1)), float(side(N + 2))
        if p2 <= p1:
            raise TailBoundUnavailable(f"phi does not increase beyond {N}")
        # a term below float range is still bounded by the smallest positive float
        total += max(math.exp(-p1 - math.log1p(-math.exp(p1 - p2))), math.ulp(0.0))
    return total


def _shift_poly(c: list[Fraction], s: int) -> list[Fraction]:
    """Coefficients of p(m + s) in m."""
    out = [Fraction(0)] * len(c)
    for e, coef in enumerate(c):
        for k in range(e + 1):
            out[k] += coef * math.comb(e, k) * s ** (e - k)
    return out


def _second_difference(c: list[Fraction]) -> list[Fraction]:
    """Coefficients of p(m + 2) - 2 p(m + 1) + p(m)."""
    p2, p1 = _shift_poly(c, 2), _shift_poly(c, 1)
    return [a - 2 * b + v for a, b, v in zip(p2, p1, c)]


# --- distributions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Distribution:
    """Atomic (exact rational weights) or spectral (closed-form char fn)."""

    owner: GroupDescriptor
    atoms: tuple[tuple[GroupElement, Fraction], ...] | None = None
    spectral: CharFn | None = None

    @property
    def is_atomic(self) -> bool:
        return self.atoms is not None

    def weight(self, x: GroupElement) -> Fraction:
        return dict(self.atoms).get(x, Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, Distribution) or not (self.is_atomic and other.is_atomic):
            return NotImplemented
        return self.owner == other.owner and dict(self.atoms) == dict(other.atoms)

    def __hash__(self):
        return hash((self.owner, self.atoms))


def atomic(support: Sequence, weights: Sequence, owner: GroupDescriptor | None = None) -> Distribution:
    if owner is None:
        if not support or not isinstance(support[0], GroupElement):
            raise PointOutsideGroup("owner group is required for bare coordinates")
        owner = support[0].owner
    if len(support) != len(weights):
        raise ValueError("support and weights differ in length")
    merged: dict[GroupElement, Fraction] = {}
    for x, w in zip(support, weights):
        x = owner.coerce(x)
        w = Fraction(w)
        if w < 0:
            raise WeightSumNotOne(f"negative weight {w}")
        if w:
            merged[x] = merged.get(x, Fraction(0)) + w
    if sum(merged.values()) != 1:
        raise WeightSumNotOne(f"weights sum to {sum(merged.values())}")
    atoms = tuple(sorted(merged.items(), key=lambda kv: _atom_key(kv[0])))
    return Distribution(owner, atoms=atoms)


def _atom_key(x: GroupElement):
    return (x.z, x.t, x.f)


def degenerate(x: GroupElement) -> Distribution:
    return atomic([x], [1])


def _need_atomic(*ds: Distribution):
    for d in ds:
        if not d.is_atomic:
            raise SpectralNotSupported("operation needs atomic distributions; "
                                       "multiply characteristic functions instead")


def convolve(mu: Distribution, nu: Distribution) -> Distribution:
    _need_atomic(mu, nu)
    if mu.owner != nu.owner:
        raise MismatchedGroups("distributions live on different groups")
    pts, ws = [], []
    for x, a in mu.atoms:
        for y, b in nu.atoms:
            pts.append(x + y)
            ws.append(a * b)
    return atomic(pts, ws, mu.owner)


def reflect(mu: Distribution) -> Distribution:
    _need_atomic(mu)
    return atomic([-x for x, _ in mu.atoms], [w for _, w in mu.atoms], mu.owner)


def pushforward(h: Homomorphism | int, mu: Distribution) -> Distribution:
    _need_atomic(mu)
    h = Homomorphism.coerce(h, mu.owner)
    if h.domain != mu.owner:
        raise MismatchedGroups("homomorphism domain differs from the distribution's group")
    return atomic([h(x) for x, _ in mu.atoms], [w for _, w in mu.atoms], h.codomain)


def char_fn(mu: Distribution) -> CharFn:
    if mu.is_atomic:
        return AtomicTransform(mu)
    return mu.spectral


def spectral(f: CharFn) -> Distribution:
    return Distribution(f.predual, spectral=f)


def haar_on_subgroup(K: Subgroup) -> Distribution:
    """Haar distribution of a compact subgroup K: char fn = indicator of A(Y, K)."""
    if not K.is_compact:
        raise NonCompactSubgroup(f"{K} is not compact")
    Y = K.owner.dual()
    return spectral(SubgroupIndicator(annihilator(Y, K)))


def exp_poly_charfn(shift: GroupElement, phi: PolynomialFn) -> ExpPoly:
    Y = shift.owner.dual()
    if phi.group != Y:
        raise MismatchedGroups(f"phi lives on {phi.group}, expected {Y}")
    if not phi.is_real:
        raise PhiNotReal("phi must have real coefficients")
    if phi.coeff(*((0,) * Y.z_rank)) != 0:
        raise PhiNotReal("phi(0) must be 0")
    return ExpPoly(Y, shift, phi)


def gaussian_charfn(sigma, Y: GroupDescriptor | None = None) -> ExpPoly:
    """exp(-sigma n^2) on Y = Z (the char fn of a wrapped Gaussian on T)."""
    Y = Y or GroupDescriptor(1)
    return exp_poly_charfn(Y.dual().zero(), PolynomialFn(Y, {(2,): Fraction(sigma)}))


def inverse_transform(f: CharFn) -> dict[GroupElement, complex]:
    """Masses m(x) = |Y|^-1 sum_y f(y) conj((x, y)) on a finite group."""
    Y = f.dual_owner
    if not Y.is_finite:
        raise TailBoundUnavailable("exact inversion needs a finite dual")
    ys = list(Y.elements())
    vals = [f.value(y) for y in ys]
    X = Y.dual()
    return {x: sum(v * pair(x, y).conjugate() for v, y in zip(vals, ys)) / len(ys)
            for x in X.elements()}


def recover_atomic(f: CharFn, tol: float = 1e-12, max_denominator: int = 10**6) -> Distribution:
    """Rebuild exact rational weights from a char fn on a finite dual."""
    masses = inverse_transform(f)
    pts, ws = [], []
    for x, m in masses.items():
        w = Fraction(m.real).limit_denominator(max_denominator)
        if abs(m - float(w)) > tol:
            raise ValueError(f"mass {m} at {x} is not a short rational")
        if w:
            pts.append(x)
            ws.append(w)
    return atomic(pts, ws, f.predual)


# --- Bochner certificates --------------------------------------------------


@dataclass
class BochnerCertificate:
    passed: bool
    method: str
    min_value: float
    min_location: object
    margin: float
    tail_bound: float = 0.0
    slack: float = 0.0
    terms: int = 0
    grid: int = 0
    masses: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"pass": self.passed, "method": self.method, "min_value": self.min_value,
               "min_location": self.min_location, "margin": self.margin}
        if self.method == "density":
            out.update(tail_bound=self.tail_bound, slack=self.slack, terms=self.terms,
                       grid=self.grid)
        return out


def positive_definiteness(f: CharFn, window: Window | None = None, grid: int = MIN_GRID,
                          tol: float = 1e-9) -> BochnerCertificate:
    """Certify that f is a characteristic function.

    Finite Y: exact inverse transform, all masses >= -1e-12.

    Y = Z: the density ``d(theta) = sum_n f(n) e^{i n theta}`` is truncated
    to ``|n| <= N`` (N = window radius) and sampled on ``grid`` points.  A
    trigonometric polynomial dips below its grid minimum by at most
    ``sum n^2 |f(n)| * h^2 / 8`` (h the grid spacing), and the dropped terms
    move it by at most the tail bound, so the certified margin is
    ``grid min - slack - tail``.
    """
    Y = f.dual_owner
    if isinstance(f, AtomicTransform):
        method = "atomic"
    elif isinstance(f, SubgroupIndicator) and annihilator(Y.dual(), f.subgroup).is_compact:
        method = "haar"
    elif isinstance(f, ExpPoly) and f.phi.is_zero():
        method = "point-mass"
    else:
        method = None
    if Y.is_finite:
        masses = inverse_transform(f)
        loc, worst = min(masses.items(), key=lambda kv: kv[1].real)
        imag = max(abs(m.imag) for m in masses.values())
        cert = BochnerCertificate(worst.real >= -PD_TOL and imag < 1e-9, "inverse-transform",
                                  worst.real, loc, worst.real, masses=masses)
        return cert
    if method is not None:
        # a probability measure by construction
        return BochnerCertificate(True, method, 1.0, None, 1.0)
    if Y != GroupDescriptor(1):
        if isinstance(f, ExpPoly):
            return _quadratic_form_certificate(f)
        raise TailBoundUnavailable(f"density synthesis is implemented for Y = Z, not {Y}")
    if isinstance(f, Table):
        raise TailBoundUnavailable("Table forms carry no tail bound")
    N = (window or Window(16)).radii(Y)[0]
    grid = max(grid, MIN_GRID)
    ns = np.arange(-N, N + 1)
    coeffs = np.array([f(int(n)) for n in ns], dtype=complex)
    if abs(coeffs[N] - 1) > 1e-12:
        raise ValueError("f(0) must be 1")
    big = int(np.argmax(np.abs(coeffs)))
    if abs(coeffs[big]) > 1 + tol:
        # a positive definite function never exceeds its value at 0
        excess = 1 - float(abs(coeffs[big]))
        return BochnerCertificate(False, "modulus-bound", excess, int(ns[big]), excess)
    tail = f.abs_tail(N)
    theta = 2 * np.pi * np.arange(grid) / grid
    dens = (np.exp(1j * np.outer(theta, ns)) @ coeffs).real
    k = int(np.argmin(dens))
    h = 2 * np.pi / grid
    slack = float(np.sum(ns.astype(float) ** 2 * np.abs(coeffs))) * h * h / 8
    margin = float(dens[k]) - slack - tail
    cert = BochnerCertificate(margin > tol, "density", float(dens[k]), float(theta[k]), margin,
                              tail_bound=tail, slack=slack, terms=2 * N + 1, grid=grid)
    # the true density at theta[k] is within tail of the sample, so a sample
    # below -tail refutes positivity; anything between is undecided
    if abs(margin) <= tol or (margin < 0 and float(dens[k]) + tail >= -tol):
        raise Inconclusive(f"Bochner margin {margin:.3g} is inside the tolerance band", cert)
    return cert


def _quadratic_form_certificate(f: ExpPoly) -> BochnerCertificate:
    """exp(-<Ay, y>) with A positive semidefinite is the char fn of a
    Gaussian on R^k wrapped onto the torus, hence positive definite."""
    Y = f.dual_owner
    k = Y.z_rank
    if Y.t_rank or Y.finite_orders or f.phi.degree != 2 or any(sum(e) != 2 for e in f.phi.coeffs):
        raise TailBoundUnavailable("only homogeneous quadratic phi is certified on Z^k")
    A = np.zeros((k, k))
    for e, c in f.phi.coeffs.items():
        idx = [i for i, p in enumerate(e) for _ in range(p)]
        i, j = idx
        if i == j:
            A[i, i] += float(c)
        else:
            A[i, j] += float(c) / 2
            A[j, i] += float(c) / 2
    low = float(np.linalg.eigvalsh(A).min())
    return BochnerCertificate(low >= -PD_TOL, "quadratic-form", low, None, low)


def certify(f: ExpPoly, window: Window | None = None) -> ExpPoly:
    """Return ``f`` marked as certified after a passing Bochner check."""
    cert = positive_definiteness(f, window)
    return replace(f, certified=cert.passed)
