"""Groups Z^a x T^b x F, their character groups, subgroups and homomorphisms.

Torus coordinates are exact rationals measured in full turns, so the
pairing angle of two elements is an exact :class:`~fractions.Fraction`
and only the final ``exp(2 pi i angle)`` is a float.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import (
    MismatchedGroups,
    NotAnAutomorphism,
    PointOutsideGroup,
    UnsupportedSubgroupForm,
)

# enumeration cap for generated subgroups
MAX_CLOSURE = 100_000


@dataclass(frozen=True)
class GroupDescriptor:
    z_rank: int = 0
    t_rank: int = 0
    finite_orders: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "finite_orders", tuple(int(n) for n in self.finite_orders))
        if self.z_rank < 0 or self.t_rank < 0:
            raise ValueError("ranks must be non-negative")
        if any(n < 2 for n in self.finite_orders):
            raise ValueError(f"finite orders must be >= 2, got {self.finite_orders}")

    def __str__(self) -> str:
        parts = ["Z"] * self.z_rank + ["T"] * self.t_rank
        parts += [f"Z_{n}" for n in self.finite_orders]
        return " x ".join(parts) if parts else "{0}"

    def dual(self) -> GroupDescriptor:
        return GroupDescriptor(self.t_rank, self.z_rank, self.finite_orders)

    @property
    def is_finite(self) -> bool:
        return self.z_rank == 0 and self.t_rank == 0

    @property
    def is_compact(self) -> bool:
        return self.z_rank == 0

    @property
    def order(self) -> int:
        if not self.is_finite:
            raise ValueError(f"{self} is infinite")
        return math.prod(self.finite_orders)

    def power(self, n: int) -> GroupDescriptor:
        """The n-fold direct product, coordinates grouped factor by factor."""
        return GroupDescriptor(n * self.z_rank, n * self.t_rank, self.finite_orders * n)

    def zero(self) -> GroupElement:
        return GroupElement(self, (0,) * self.z_rank, (Fraction(0),) * self.t_rank,
                            (0,) * len(self.finite_orders))

    def element(self, z=(), t=(), f=()) -> GroupElement:
        return GroupElement(self, tuple(z), tuple(t), tuple(f))

    def elements(self) -> Iterator[GroupElement]:
        if not self.is_finite:
            raise ValueError(f"cannot enumerate infinite group {self}")
        for f in itertools.product(*(range(n) for n in self.finite_orders)):
            yield GroupElement(self, (), (), f)

    def generators(self) -> list[GroupElement]:
        """Unit vectors of the discrete factors (Z and finite)."""
        gens = []
        zero = self.zero()
        for i in range(self.z_rank):
            z = list(zero.z)
            z[i] = 1
            gens.append(self.element(z, zero.t, zero.f))
        for i in range(len(self.finite_orders)):
            f = list(zero.f)
            f[i] = 1
            gens.append(self.element(zero.z, zero.t, f))
        return gens

    def coerce(self, value) -> GroupElement:
        """Accept an element, or a bare number/tuple for one-coordinate groups."""
        if isinstance(value, GroupElement):
            if value.owner != self:
                raise PointOutsideGroup(f"{value} is not an element of {self}")
            return value
        values = tuple(value) if isinstance(value, (tuple, list)) else (value,)
        a, b, k = self.z_rank, self.t_rank, len(self.finite_orders)
        if len(values) != a + b + k:
            raise PointOutsideGroup(f"{value!r} has the wrong number of coordinates for {self}")
        return self.element(values[:a], values[a:a + b], values[a + b:])

    def split(self, x: GroupElement, n: int) -> list[GroupElement]:
        """Inverse of :func:`join` for ``self = base.power(n)``."""
        if self.z_rank % n or self.t_rank % n or len(self.finite_orders) % n:
            raise ValueError(f"{self} is not an {n}-th power")
        base = GroupDescriptor(self.z_rank // n, self.t_rank // n,
                               self.finite_orders[: len(self.finite_orders) // n])
        a, b, k = base.z_rank, base.t_rank, len(base.finite_orders)
        return [base.element(x.z[i * a:(i + 1) * a], x.t[i * b:(i + 1) * b],
                             x.f[i * k:(i + 1) * k]) for i in range(n)]


def join(parts: Sequence[GroupElement]) -> GroupElement:
    """Concatenate elements of X into one element of X^n."""
    base = parts[0].owner
    owner = base.power(len(parts))
    return owner.element(
        tuple(itertools.chain.from_iterable(p.z for p in parts)),
        tuple(itertools.chain.from_iterable(p.t for p in parts)),
        tuple(itertools.chain.from_iterable(p.f for p in parts)),
    )


@dataclass(frozen=True)
class GroupElement:
    owner: GroupDescriptor
    z: tuple[int, ...] = ()
    t: tuple[Fraction, ...] = ()
    f: tuple[int, ...] = ()

    def __post_init__(self):
        g = self.owner
        if len(self.z) != g.z_rank or len(self.t) != g.t_rank or len(self.f) != len(g.finite_orders):
            raise PointOutsideGroup(f"coordinate counts do not match {g}")
        z = []
        for v in self.z:
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise PointOutsideGroup(f"non-integer Z coordinate {v}")
                v = v.numerator
            z.append(int(v))
        t = tuple(Fraction(v) % 1 for v in self.t) if self.t else ()
        f = tuple(int(v) % n for v, n in zip(self.f, g.finite_orders))
        object.__setattr__(self, "z", tuple(z))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)

    def __repr__(self) -> str:
        parts = [str(v) for v in self.z] + [str(v) for v in self.t] + [str(v) for v in self.f]
        return f"<{', '.join(parts)}>"

    def _check(self, other: GroupElement):
        if other.owner != self.owner:
            raise MismatchedGroups(f"{self.owner} vs {other.owner}")

    def __add__(self, other: GroupElement) -> GroupElement:
        self._check(other)
        return GroupElement(self.owner,
                            tuple(a + b for a, b in zip(self.z, other.z)),
                            tuple(a + b for a, b in zip(self.t, other.t)),
                            tuple(a + b for a, b in zip(self.f, other.f)))

    def __neg__(self) -> GroupElement:
        return GroupElement(self.owner, tuple(-a for a in self.z), tuple(-a for a in self.t),
                            tuple(-a for a in self.f))

    def __sub__(self, other: GroupElement) -> GroupElement:
        return self + (-other)

    def __mul__(self, n: int) -> GroupElement:
        n = int(n)
        return GroupElement(self.owner, tuple(n * a for a in self.z), tuple(n * a for a in self.t),
                            tuple(n * a for a in self.f))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.z) and not any(self.t) and not any(self.f)

    def order(self) -> int | None:
        """Order of the element, or None when it has infinite order."""
        if any(self.z):
            return None
        m = 1
        for v in self.t:
            m = math.lcm(m, v.denominator)
        for v, n in zip(self.f, self.owner.finite_orders):
            m = math.lcm(m, n // math.gcd(v, n))
        return m


def pair_angle(x: GroupElement, y: GroupElement) -> Fraction:
    """Exact angle (in turns, reduced to [0, 1)) of the character y at x."""
    gx, gy = x.owner, y.owner
    if gy.z_rank != gx.t_rank or gy.t_rank != gx.z_rank or gy.finite_orders != gx.finite_orders:
        raise MismatchedGroups(f"{gy} is not the dual of {gx}")
    # integer numerator over a running common denominator; one reduction at the end
    num, den = 0, 1
    terms = [(a * b.numerator, b.denominator) for a, b in zip(x.z, y.t)]
    terms += [(b * a.numerator, a.denominator) for a, b in zip(x.t, y.z)]
    terms += [(a * b % n, n) for a, b, n in zip(x.f, y.f, gx.finite_orders)]
    for p, q in terms:
        if p:
            m = den * q // math.gcd(den, q)
            num = num * (m // den) + p * (m // q)
            den = m
    return Fraction(num % den, den)


def angle_to_unit(angle: Fraction) -> complex:
    a = float(angle)
    if a > 0.5:
        a -= 1.0
    return cmath.exp(2j * math.pi * a)


def pair(x: GroupElement, y: GroupElement) -> complex:
    """Value (x, y) of the character y at the point x."""
    return angle_to_unit(pair_angle(x, y))


def dual_group(g: GroupDescriptor) -> GroupDescriptor:
    return g.dual()


# --- subgroups -------------------------------------------------------------


@dataclass(frozen=True)
class Subgroup:
    """A closed subgroup of a group in the universe.

    Three forms are supported:

    ``product``
        a product of one subgroup per axis: ``m Z`` on Z axes (``m = 0`` is
        ``{0}``), ``Z_m`` on T axes (``m = 0`` is the whole circle) and
        ``d Z_n`` on finite axes.
    ``generated``
        the (finite) subgroup generated by torsion elements.
    ``annihilator``
        ``A(owner, base)`` for a generated ``base`` in the predual; membership
        is decided by exact pairing angles.
    """

    owner: GroupDescriptor
    kind: str
    z_mods: tuple[int, ...] = ()
    t_orders: tuple[int, ...] = ()
    f_steps: tuple[int, ...] = ()
    generators: tuple[GroupElement, ...] = ()
    base: Subgroup | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "product":
            g = self.owner
            if (len(self.z_mods), len(self.t_orders), len(self.f_steps)) != (
                    g.z_rank, g.t_rank, len(g.finite_orders)):
                raise ValueError(f"product subgroup data does not match {g}")
            object.__setattr__(self, "z_mods", tuple(abs(int(m)) for m in self.z_mods))
            object.__setattr__(self, "t_orders", tuple(abs(int(m)) for m in self.t_orders))
            object.__setattr__(self, "f_steps", tuple(
                math.gcd(int(d), n) for d, n in zip(self.f_steps, g.finite_orders)))
        elif self.kind == "generated":
            for x in self.generators:
                if x.owner != self.owner:
                    raise MismatchedGroups("generator outside the owner group")
                if any(x.z):
                    raise UnsupportedSubgroupForm(
                        "generated subgroups must be finite; use a product form for m*Z")
        elif self.kind == "annihilator":
            if self.base is None or self.base.kind != "generated":
                raise ValueError("annihilator form needs a generated base subgroup")
        else:
            raise ValueError(f"unknown subgroup kind {self.kind!r}")

    # constructors

    @classmethod
    def product(cls, owner, z_mods=None, t_orders=None, f_steps=None) -> Subgroup:
        return cls(owner, "product",
                   tuple(z_mods) if z_mods is not None else (1,) * owner.z_rank,
                   tuple(t_orders) if t_orders is not None else (0,) * owner.t_rank,
                   tuple(f_steps) if f_steps is not None else (1,) * len(owner.finite_orders))

    @classmethod
    def whole(cls, owner) -> Subgroup:
        return cls.product(owner)

    @classmethod
    def trivial(cls, owner) -> Subgroup:
        return cls.product(owner, (0,) * owner.z_rank, (1,) * owner.t_rank, owner.finite_orders)

    @classmethod
    def multiples(cls, owner, axis: int, m: int) -> Subgroup:
        """``m Z`` inside Z axis ``axis``; every other coordinate is zero."""
        z = [0] * owner.z_rank
        z[axis] = m
        return cls.product(owner, z, (1,) * owner.t_rank, owner.finite_orders)

    @classmethod
    def torus_cyclic(cls, owner, axis: int, m: int) -> Subgroup:
        """The points ``k/m`` of circle axis ``axis``; every other coordinate is zero."""
        if m < 1:
            raise ValueError("m must be >= 1")
        t = [1] * owner.t_rank
        t[axis] = m
        return cls.product(owner, (0,) * owner.z_rank, t, owner.finite_orders)

    @classmethod
    def generated(cls, owner, gens: Iterable[GroupElement]) -> Subgroup:
        return cls(owner, "generated", generators=tuple(owner.coerce(g) for g in gens))

    # queries

    @property
    def is_compact(self) -> bool:
        if self.kind == "product":
            return not any(self.z_mods)
        if self.kind == "generated":
            return True
        # A(Y, K) with K finite has finite index, so it is compact iff Y is
        return self.owner.is_compact

    @property
    def is_finite(self) -> bool:
        if self.kind == "product":
            return self.is_compact and all(m >= 1 for m in self.t_orders)
        if self.kind == "generated":
            return True
        return self.owner.is_finite

    def contains(self, y: GroupElement) -> bool:
        if y.owner != self.owner:
            raise MismatchedGroups(f"{y.owner} vs {self.owner}")
        if self.kind == "product":
            for v, m in zip(y.z, self.z_mods):
                if (m == 0 and v != 0) or (m and v % m):
                    return False
            for v, m in zip(y.t, self.t_orders):
                if m and (v * m).denominator != 1:
                    return False
            return all(v % d == 0 for v, d in zip(y.f, self.f_steps))
        if self.kind == "generated":
            return y in self.element_set
        return all(pair_angle(g, y) == 0 for g in self.base.generators)

    __contains__ = contains

    @cached_property
    def element_set(self) -> frozenset[GroupElement]:
        if not self.is_finite:
            raise UnsupportedSubgroupForm("cannot enumerate an infinite subgroup")
        if self.kind == "product":
            axes = []
            for m in self.t_orders:
                axes.append([Fraction(k, m) for k in range(m)])
            t_points = list(itertools.product(*axes))
            f_points = list(itertools.product(
                *(range(0, n, d) for n, d in zip(self.owner.finite_orders, self.f_steps))))
            zero_z = (0,) * self.owner.z_rank
            return frozenset(self.owner.element(zero_z, t, f) for t in t_points for f in f_points)
        if self.kind == "annihilator":
            return frozenset(y for y in self.owner.elements() if self.contains(y))
        seen = {self.owner.zero()}
        frontier = list(seen)
        while frontier:
            nxt = []
            for x in frontier:
                for g in self.generators:
                    s = x + g
                    if s not in seen:
                        seen.add(s)
                        nxt.append(s)
                        if len(seen) > MAX_CLOSURE:
                            raise UnsupportedSubgroupForm("subgroup closure too large")
            frontier = nxt
        return frozenset(seen)

    def elements(self) -> list[GroupElement]:
        return sorted(self.element_set, key=_element_key)

    @property
    def order(self) -> int:
        return len(self.element_set)

    def is_trivial(self) -> bool:
        if self.kind == "product":
            return (not any(self.z_mods) and all(m == 1 for m in self.t_orders)
                    and self.f_steps == self.owner.finite_orders)
        return self.element_set == {self.owner.zero()}

    def equals(self, other: Subgroup) -> bool:
        if self.owner != other.owner:
            return False
        a, b = self.as_product(), other.as_product()
        if a is not None and b is not None:
            return a == b
        if self.is_finite and other.is_finite:
            return self.element_set == other.element_set
        raise UnsupportedSubgroupForm("cannot compare these subgroup forms")

    def as_product(self) -> Subgroup | None:
        """Rewrite a finite subgroup in product form when it is one; else None."""
        if self.kind == "product":
            return self
        if not self.is_finite:
            return None
        elems = self.element_set
        g = self.owner
        t_orders = []
        for i in range(g.t_rank):
            m = 1
            for x in elems:
                m = math.lcm(m, x.t[i].denominator)
            t_orders.append(m)
        f_steps = []
        for i, n in enumerate(g.finite_orders):
            d = n
            for x in elems:
                d = math.gcd(d, x.f[i])
            f_steps.append(d)
        cand = Subgroup.product(g, (0,) * g.z_rank, t_orders, f_steps)
        if cand.is_finite and cand.order == len(elems):
            return cand
        return None

    def descriptor(self) -> GroupDescriptor:
        """Isomorphism type of a compact product-form subgroup."""
        p = self.as_product()
        if p is None or not p.is_compact:
            raise UnsupportedSubgroupForm("isomorphism type only for compact product subgroups")
        orders = [m for m in p.t_orders if m > 1]
        orders += [n // d for n, d in zip(p.owner.finite_orders, p.f_steps) if n // d > 1]
        return GroupDescriptor(0, sum(1 for m in p.t_orders if m == 0), tuple(orders))


def _element_key(x: GroupElement):
    return (tuple(abs(v) for v in x.z), x.z, x.t, x.f)


def annihilator(Y: GroupDescriptor, K: Subgroup) -> Subgroup:
    """A(Y, K): the characters in Y that are trivial on K."""
    if K.owner.dual() != Y:
        raise MismatchedGroups(f"{K.owner} is not the predual of {Y}")
    p = K.as_product()
    if p is not None:
        z_mods = tuple(p.t_orders)           # T axes of X pair with Z axes of Y
        t_orders = tuple(p.z_mods)           # Z axes of X pair with T axes of Y
        f_steps = tuple(n // d for n, d in zip(Y.finite_orders, p.f_steps))
        return Subgroup.product(Y, z_mods, t_orders, f_steps)
    if K.kind == "annihilator":
        if not K.owner.is_finite:
            return K.base                    # K is closed, so A(Y, A(X, B)) = B
        K = Subgroup.generated(K.owner, K.elements())
    if K.kind != "generated":
        raise UnsupportedSubgroupForm(f"no annihilator rule for {K.kind} subgroups")
    if Y.is_finite:
        members = [y for y in Y.elements() if all(pair_angle(g, y) == 0 for g in K.generators)]
        return Subgroup.generated(Y, members)
    return Subgroup(Y, "annihilator", base=K)


def mul_map(X: GroupDescriptor, n: int) -> tuple[Subgroup, Subgroup]:
    """Image X^(n) and kernel X_(n) of multiplication by n."""
    n = int(n)
    if n == 0:
        return Subgroup.trivial(X), Subgroup.whole(X)
    image = Subgroup.product(X, (abs(n),) * X.z_rank, (0,) * X.t_rank,
                             tuple(math.gcd(n, m) for m in X.finite_orders))
    kernel = Subgroup.product(X, (0,) * X.z_rank, (abs(n),) * X.t_rank,
                              tuple(m // math.gcd(n, m) for m in X.finite_orders))
    return image, kernel


def all_subgroups(g: GroupDescriptor) -> list[Subgroup]:
    """Every subgroup of a finite group (desk scale only)."""
    elems = list(g.elements())
    rank = max(1, len(g.finite_orders))
    seen: dict[frozenset, Subgroup] = {}
    for gens in itertools.combinations_with_replacement(elems, rank):
        s = Subgroup.generated(g, gens)
        seen.setdefault(s.element_set, s)
    return list(seen.values())


# --- homomorphisms ---------------------------------------------------------

Matrix = tuple[tuple, ...]


def _zeros(r: int, c: int, zero=0) -> Matrix:
    return tuple((zero,) * c for _ in range(r))


def _transpose(a, rows: int, cols: int) -> list[list]:
    return [[a[i][j] for i in range(rows)] for j in range(cols)]


def _det(m) -> Fraction:
    n = len(m)
    a = [[Fraction(v) for v in row] for row in m]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            k = a[r][c] / a[c][c]
            for j in range(c, n):
                a[r][j] -= k * a[c][j]
    return det


def _int_inverse(m) -> list[list[int]]:
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for c in range(n):
        piv = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [v / p for v in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                k = a[r][c]
                a[r] = [x - k * y for x, y in zip(a[r], a[c])]
    inv = [row[n:] for row in a]
    if any(v.denominator != 1 for row in inv for v in row):
        raise NotAnAutomorphism("integer block is not unimodular")
    return [[int(v) for v in row] for row in inv]


@dataclass(frozen=True)
class Homomorphism:
    """A continuous homomorphism in block form.

    With x = (xz, xt, xf) the image is::

        z' = zz xz
        t' = zt xz + tt xt + ft xf      (mod 1)
        f' = zf xz + ff xf              (mod n'_i)

    There are no T->Z, T->F or F->Z blocks: continuity (resp. torsion) forces
    them to vanish.
    """

    domain: GroupDescriptor
    codomain: GroupDescriptor
    zz: Matrix = None
    zt: Matrix = None
    zf: Matrix = None
    tt: Matrix = None
    ft: Matrix = None
    ff: Matrix = None

    def __post_init__(self):
        d, c = self.domain, self.codomain
        da, db, dk = d.z_rank, d.t_rank, len(d.finite_orders)
        ca, cb, ck = c.z_rank, c.t_rank, len(c.finite_orders)
        shapes = {"zz": (ca, da), "zt": (cb, da), "zf": (ck, da),
                  "tt": (cb, db), "ft": (cb, dk), "ff": (ck, dk)}
        for name, (r, k) in shapes.items():
            m = getattr(self, name)
            if m is None:
                m = _zeros(r, k)
            m = [list(row) for row in m]
            if len(m) != r or any(len(row) != k for row in m):
                raise ValueError(f"block {name} must be {r}x{k}")
            if name in ("zt", "ft"):
                m = [[Fraction(v) % 1 for v in row] for row in m]
            elif name in ("zf", "ff"):
                m = [[int(v) % c.finite_orders[i] for v in row] for i, row in enumerate(m)]
            else:
                m = [[int(v) for v in row] for row in m]
            object.__setattr__(self, name, tuple(tuple(row) for row in m))
        for i, ni in enumerate(c.finite_orders):
            for j, nj in enumerate(d.finite_orders):
                if (nj * self.ff[i][j]) % ni:
                    raise ValueError(f"ff[{i}][{j}] does not respect element orders")
        for i in range(cb):
            for j, nj in enumerate(d.finite_orders):
                if (nj * self.ft[i][j]).denominator != 1:
                    raise ValueError(f"ft[{i}][{j}] does not respect element orders")

    @classmethod
    def scalar(cls, g: GroupDescriptor, n: int) -> Homomorphism:
        """The map f_n: x -> n x."""
        def diag(k):
            return tuple(tuple(n if i == j else 0 for j in range(k)) for i in range(k))
        return cls(g, g, zz=diag(g.z_rank), tt=diag(g.t_rank), ff=diag(len(g.finite_orders)))

    @classmethod
    def identity(cls, g: GroupDescriptor) -> Homomorphism:
        return cls.scalar(g, 1)

    @classmethod
    def coerce(cls, value, g: GroupDescriptor) -> Homomorphism:
        if isinstance(value, Homomorphism):
            return value
        return cls.scalar(g, int(value))

    def __call__(self, x: GroupElement) -> GroupElement:
        if x.owner != self.domain:
            raise MismatchedGroups(f"{x.owner} is not the domain {self.domain}")
        xz, xt, xf = x.z, x.t, x.f
        z = [sum((a * b for a, b in zip(row, xz)), 0) for row in self.zz]
        t = [sum((a * b for a, b in zip(r1, xz)), Fraction(0))
             + sum((a * b for a, b in zip(r2, xt)), Fraction(0))
             + sum((a * b for a, b in zip(r3, xf)), Fraction(0))
             for r1, r2, r3 in zip(self.zt, self.tt, self.ft)]
        f = [sum((a * b for a, b in zip(r1, xz)), 0) + sum((a * b for a, b in zip(r2, xf)), 0)
             for r1, r2 in zip(self.zf, self.ff)]
        return self.codomain.element(z, t, f)

    def _same_shape(self, other: Homomorphism):
        if (self.domain, self.codomain) != (other.domain, other.codomain):
            raise MismatchedGroups("homomorphisms have different domains or codomains")

    def _blockwise(self, other, op) -> Homomorphism:
        self._same_shape(other)
        blocks = {}
        for name in ("zz", "zt", "zf", "tt", "ft", "ff"):
            a, b = getattr(self, name), getattr(other, name)
            blocks[name] = tuple(tuple(op(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))
        return Homomorphism(self.domain, self.codomain, **blocks)

    def __add__(self, other: Homomorphism) -> Homomorphism:
        return self._blockwise(other, lambda x, y: x + y)

    def __sub__(self, other: Homomorphism) -> Homomorphism:
        return self._blockwise(other, lambda x, y: x - y)

    def __neg__(self) -> Homomorphism:
        return Homomorphism.scalar(self.codomain, -1) @ self

    def __matmul__(self, other: Homomorphism) -> Homomorphism:
        """Composition ``self o other``."""
        if other.codomain != self.domain:
            raise MismatchedGroups("cannot compose: codomain/domain mismatch")
        mid, dom, cod = self.domain, other.domain, self.codomain
        a, b, k = mid.z_rank, mid.t_rank, len(mid.finite_orders)
        da, db, dk = dom.z_rank, dom.t_rank, len(dom.finite_orders)
        cb, ck = cod.t_rank, len(cod.finite_orders)

        def mm(x, y, rows, inner, cols):
            return [[sum((x[i][q] * y[q][j] for q in range(inner)), 0) for j in range(cols)]
                    for i in range(rows)]

        def add(*ms):
            return [[sum(vals) for vals in zip(*rows)] for rows in zip(*ms)]

        zz = mm(self.zz, other.zz, cod.z_rank, a, da)
        zt = add(mm(self.zt, other.zz, cb, a, da), mm(self.tt, other.zt, cb, b, da),
                 mm(self.ft, other.zf, cb, k, da))
        tt = mm(self.tt, other.tt, cb, b, db)
        ft = add(mm(self.tt, other.ft, cb, b, dk), mm(self.ft, other.ff, cb, k, dk))
        zf = add(mm(self.zf, other.zz, ck, a, da), mm(self.ff, other.zf, ck, k, da))
        ff = mm(self.ff, other.ff, ck, k, dk)
        return Homomorphism(other.domain, self.codomain, zz, zt, zf, tt, ft, ff)

    def adjoint(self) -> Homomorphism:
        """The map h~ on character groups with (x, h~ y) = (h x, y)."""
        X, Xc = self.domain, self.codomain
        Y, Yc = X.dual(), Xc.dual()
        a, b, k = X.z_rank, X.t_rank, len(X.finite_orders)
        ac, bc, kc = Xc.z_rank, Xc.t_rank, len(Xc.finite_orders)
        n, nc = X.finite_orders, Xc.finite_orders
        zz = _transpose(self.tt, bc, b)
        tt = _transpose(self.zz, ac, a)
        zt = _transpose(self.zt, bc, a)
        ft = [[Fraction(self.zf[i][j], nc[i]) for i in range(kc)] for j in range(a)]
        zf = [[n[j] * self.ft[q][j] for q in range(bc)] for j in range(k)]
        ff = [[self.ff[i][j] * n[j] // nc[i] for i in range(kc)] for j in range(k)]
        return Homomorphism(Yc, Y, zz, zt, zf, tt, ft, ff)

    @cached_property
    def is_automorphism(self) -> bool:
        if self.domain != self.codomain:
            return False
        if self.zz and abs(_det(self.zz)) != 1:
            return False
        if self.tt and abs(_det(self.tt)) != 1:
            return False
        F = GroupDescriptor(0, 0, self.domain.finite_orders)
        if not F.is_finite or not F.finite_orders:
            return True
        images = set()
        for x in F.elements():
            fx = tuple(sum(a * b for a, b in zip(row, x.f)) % ni
                       for row, ni in zip(self.ff, F.finite_orders))
            images.add(fx)
        return len(images) == F.order

    def inverse(self) -> Homomorphism:
        if not self.is_automorphism:
            raise NotAnAutomorphism("map is not invertible")
        g = self.domain
        if g.is_finite:
            table = {self(x): x for x in g.elements()}
            cols = [table[e].f for e in g.generators()]
            ff = [[cols[j][i] for j in range(len(cols))] for i in range(len(g.finite_orders))]
            return Homomorphism(g, g, ff=ff)
        if any(any(r) for r in self.zt) or any(any(r) for r in self.zf) or any(any(r) for r in self.ft):
            raise NotImplementedError("inverse with off-diagonal blocks on infinite groups")
        zz = _int_inverse(self.zz) if self.zz else ()
        tt = _int_inverse(self.tt) if self.tt else ()
        ff = ()
        if g.finite_orders:
            F = GroupDescriptor(0, 0, g.finite_orders)
            fin = Homomorphism(F, F, ff=self.ff).inverse()
            ff = fin.ff
        return Homomorphism(g, g, zz=zz, tt=tt, ff=ff)


def adjoint(h: Homomorphism) -> Homomorphism:
    return h.adjoint()


# --- structural predicates -------------------------------------------------


class Verdict(NamedTuple):
    ok: bool
    witness: object = None


def is_admissible(coeffs: Sequence[int], X: GroupDescriptor) -> Verdict:
    """Every X^(a_j) must be nontrivial; the witness is the first failing index."""
    for j, a in enumerate(coeffs):
        image, _ = mul_map(X, a)
        if image.is_trivial():
            return Verdict(False, (j, a))
    return Verdict(True)


@dataclass(frozen=True)
class StructuralReport:
    group: GroupDescriptor
    is_torsion_free: bool
    is_corwin: bool
    has_order2_element: bool
    connected_component: Subgroup
    order2_in_component: int
    prime: int | None = None
    kills_prime: bool | None = None

    def as_dict(self) -> dict:
        out = {
            "group": str(self.group),
            "is_torsion_free": self.is_torsion_free,
            "is_corwin": self.is_corwin,
            "has_order2_element": self.has_order2_element,
            "connected_component": f"T^{self.group.t_rank}" if self.group.t_rank else "{0}",
            "order2_in_component": self.order2_in_component,
        }
        if self.prime is not None:
            out["prime"] = self.prime
            out["X^(p)=0"] = self.kills_prime
        return out


def structural_predicates(X: GroupDescriptor, p: int | None = None) -> StructuralReport:
    comp = Subgroup.product(X, (0,) * X.z_rank, (0,) * X.t_rank, X.finite_orders)
    kills = None
    if p is not None:
        kills = mul_map(X, p)[0].is_trivial()
    return StructuralReport(
        group=X,
        is_torsion_free=X.t_rank == 0 and not X.finite_orders,
        is_corwin=X.z_rank == 0 and all(n % 2 for n in X.finite_orders),
        has_order2_element=X.t_rank > 0 or any(n % 2 == 0 for n in X.finite_orders),
        connected_component=comp,
        order2_in_component=2 ** X.t_rank - 1,
        prime=p,
        kills_prime=kills,
    )


def heyde_condition(deltas: Sequence, X: GroupDescriptor | None = None) -> Verdict:
    """Check that d_i + d_j and d_i - d_j are automorphisms for all i < j.

    The witness is ``(i, j, sign)`` with 0-based indices.
    """
    if X is None:
        X = next(d.domain for d in deltas if isinstance(d, Homomorphism))
    maps = [Homomorphism.coerce(d, X) for d in deltas]
    for j, d in enumerate(maps):
        if not d.is_automorphism:
            raise NotAnAutomorphism(f"delta[{j}] is not an automorphism of {X}")
    for i, j in itertools.combinations(range(len(maps)), 2):
        if not (maps[i] + maps[j]).is_automorphism:
            return Verdict(False, (i, j, "+"))
        if not (maps[i] - maps[j]).is_automorphism:
            return Verdict(False, (i, j, "-"))
    return Verdict(True)
