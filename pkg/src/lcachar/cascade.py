"""Replay of the finite-difference eliminations behind the linear-form theorems.

An equation is kept as a list of terms on two sides.  Substituting
``u + s_u`` for ``u`` and ``v + s_v`` for ``v`` and subtracting the original
equation is the same as applying ``D_(s_u, s_v)`` to every term.  A
one-variable term ``phi(c_u u + c_v v)`` then picks up the argument shift
``c_u s_u + c_v s_v``; when that shift is zero the term cancels, which is
how each step removes one unknown function.

Two modes are supported:

* :class:`SkitovichDarmois` -- ``sum_j phi_j(a_j u + b_j v) = P(u) + Q(v) + q(u, v)``
  with ``P(u) = sum_j phi_j(a_j u)`` and ``Q(v) = sum_j phi_j(b_j v)``.
* :class:`Heyde` -- ``sum_j [phi_j(u + d_j v) - phi_j(u - d_j v)] = r(u, v)``
  where ``d_j`` act on the character group (integers or homomorphisms).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import BaseEquationViolated, StepResidual
from .groups import GroupDescriptor, GroupElement, Homomorphism, join
from .polyfd import PolynomialFn, Window, polynomial_degree, LatticeFunction, DEFAULT_D_MAX

DEFAULT_SEED = 0xD1CE


@dataclass(frozen=True)
class SkitovichDarmois:
    a: tuple[int, ...]
    b: tuple[int, ...]


@dataclass(frozen=True)
class Heyde:
    deltas: tuple


def _act(c, y: GroupElement) -> GroupElement:
    if isinstance(c, Homomorphism):
        return c(y)
    return int(c) * y


class _Neg:
    """Negated coefficient (keeps homomorphisms and integers uniform)."""

    def __init__(self, c):
        self.c = c

    def __call__(self, y):
        return -_act(self.c, y)


def _apply(c, y):
    return c(y) if isinstance(c, _Neg) else _act(c, y)


@dataclass
class Term:
    label: str
    side: str                  # "lhs" or "rhs"
    func: Callable
    cu: object = None          # None marks a two-variable term
    cv: object = None
    shifts: list = field(default_factory=list)

    @property
    def two_variable(self) -> bool:
        return self.cu is None

    def arg_shift(self, su: GroupElement, sv: GroupElement) -> GroupElement:
        return _apply(self.cu, su) + _apply(self.cv, sv)

    def differenced(self, su, sv) -> Term | None:
        if not self.two_variable and self.arg_shift(su, sv).is_zero():
            return None
        return Term(self.label, self.side, self.func, self.cu, self.cv,
                    self.shifts + [(su, sv)])

    def _stencil(self):
        k = len(self.shifts)
        out = []
        for mask in itertools.product((0, 1), repeat=k):
            sign = -1 if (k - sum(mask)) % 2 else 1
            su = sv = None
            for used, (a, b) in zip(mask, self.shifts):
                if used:
                    su = a if su is None else su + a
                    sv = b if sv is None else sv + b
            out.append((sign, su, sv))
        return out

    def value(self, u: GroupElement, v: GroupElement):
        total = 0.0
        for sign, su, sv in self._stencil():
            uu = u if su is None else u + su
            vv = v if sv is None else v + sv
            if self.two_variable:
                total += sign * self.func(uu, vv)
            else:
                total += sign * self.func(_apply(self.cu, uu) + _apply(self.cv, vv))
        return total

    def describe(self) -> dict:
        out = {"term": self.label, "side": self.side}
        if not self.two_variable and self.shifts:
            out["argument_shifts"] = [self.arg_shift(su, sv) for su, sv in self.shifts]
        return out


@dataclass
class CascadeStep:
    index: int
    name: str
    shift: tuple
    eliminated: list[str]
    surviving: list[dict]
    residual: float


@dataclass
class EliminationTrace:
    mode: str
    degree_l: int
    base_residual: float
    steps: list[CascadeStep]
    terminal_residual: float
    conclusion: str
    conclusion_residual: float

    @property
    def max_step_residual(self) -> float:
        return max((s.residual for s in self.steps), default=0.0)

    def passed(self, tol: float = 1e-8) -> bool:
        return (self.max_step_residual < tol and self.terminal_residual < tol
                and self.conclusion_residual < tol)


def _random_element(Y: GroupDescriptor, rng: random.Random, window: Window) -> GroupElement:
    while True:
        z = [rng.randint(-2, 2) for _ in range(Y.z_rank)]
        t = [Fraction(rng.randrange(window.torus_grid), window.torus_grid) for _ in range(Y.t_rank)]
        f = [rng.randrange(n) for n in Y.finite_orders]
        y = Y.element(z, t, f)
        if not y.is_zero():
            return y


def _residual(terms: list[Term], pairs) -> float:
    worst = 0.0
    for u, v in pairs:
        total = 0.0
        for t in terms:
            val = t.value(u, v)
            total += val if t.side == "lhs" else -val
        worst = max(worst, abs(total))
    return worst


def _two_var(q, Y: GroupDescriptor) -> Callable:
    if isinstance(q, PolynomialFn):
        return lambda u, v: q.evaluate_float(join((u, v)))
    return q


def _degree_of(q, Y: GroupDescriptor, window: Window, given: int | None) -> int:
    if given is not None:
        return given
    if isinstance(q, PolynomialFn):
        return q.degree
    if Y.z_rank == 0:
        return 0
    Y2 = Y.power(2)
    # radius 5 gives the DEFAULT_D_MAX + 2 points per axis that detection needs
    f = LatticeFunction.from_callable(Y2, Window(5, window.torus_grid),
                                      lambda y: q(*Y2.split(y, 2)))
    return polynomial_degree(f, DEFAULT_D_MAX)


def elimination_cascade(mode, phis: Sequence[Callable], q, Y: GroupDescriptor,
                        window: Window | None = None, *, shifts: Sequence | None = None,
                        seed: int = DEFAULT_SEED, tol: float = 1e-8, base_tol: float = 1e-9,
                        q_degree: int | None = None) -> EliminationTrace:
    """Replay the elimination for ``mode`` and check every intermediate identity.

    ``phis`` are functions on the character group ``Y`` and ``q`` is the
    right-hand polynomial (a :class:`PolynomialFn` on ``Y^2`` or a callable
    ``q(u, v)``).  ``shifts`` fixes the schedule: for Skitovich-Darmois the
    elements ``h_n, ..., h_1, h``; for Heyde the elements
    ``k_1, ..., k_{2n-1}`` followed by ``(h, k)`` for the conclusion.  Without
    it, shifts are drawn from ``random.Random(seed)``.
    """
    window = window or Window(2, 8)
    n = len(phis)
    qf = _two_var(q, Y)
    pairs = [tuple(Y.power(2).split(p, 2)) for p in window.points(Y.power(2))]
    rng = random.Random(seed)
    l_deg = _degree_of(q, Y, window, q_degree)
    schedule = list(shifts) if shifts is not None else None

    def next_shift():
        if schedule is not None:
            if not schedule:
                raise ValueError("shift schedule is too short")
            return schedule.pop(0)
        return _random_element(Y, rng, window)

    zero = Y.zero()
    if isinstance(mode, SkitovichDarmois):
        a, b = tuple(mode.a), tuple(mode.b)
        if len(a) != n or len(b) != n:
            raise ValueError("coefficient lists must match the number of functions")
        P = lambda y: sum(phi(_act(aj, y)) for phi, aj in zip(phis, a))
        Q = lambda y: sum(phi(_act(bj, y)) for phi, bj in zip(phis, b))
        terms = [Term(f"phi_{j + 1}", "lhs", phis[j], a[j], b[j]) for j in range(n)]
        terms += [Term("P", "rhs", P, 1, 0), Term("Q", "rhs", Q, 0, 1), Term("q", "rhs", qf)]
        plan = []
        for m in range(n, 0, -1):
            h = Y.coerce(next_shift())
            plan.append((f"h_{m}", (_act(b[m - 1], h), _act(-a[m - 1], h))))
        h = Y.coerce(next_shift())
        plan.append(("h", (h, zero)))
        label = "skitovich-darmois"
    elif isinstance(mode, Heyde):
        d = tuple(mode.deltas)
        if len(d) != n:
            raise ValueError("delta list must match the number of functions")
        terms = []
        for j in range(n):
            terms.append(Term(f"phi_{j + 1}(u+d v)", "lhs", phis[j], 1, d[j]))
            terms.append(Term(f"phi_{j + 1}(u-d v)", "lhs", lambda y, f=phis[j]: -f(y), 1, _Neg(d[j])))
        terms.append(Term("r", "rhs", qf))
        plan = []
        for p in range(1, 2 * n):
            k = Y.coerce(next_shift())
            idx = n - p + 1 if p <= n else 2 * n - p + 1
            h = _act(d[idx - 1], k) if p <= n else -_act(d[idx - 1], k)
            plan.append((f"k_{p}", (h, k)))
        label = "heyde"
    else:
        raise TypeError(f"unknown cascade mode {mode!r}")

    base = _residual(terms, pairs)
    if base >= base_tol:
        worst = max(pairs, key=lambda uv: abs(_residual(terms, [uv])))
        raise BaseEquationViolated(f"base equation fails (residual {base:.3g})",
                                   witness=worst, residual=base)

    steps = []
    for i, (name, (su, sv)) in enumerate(plan, start=1):
        new_terms, gone = [], []
        for t in terms:
            nt = t.differenced(su, sv)
            if nt is None:
                gone.append(t.label)
            else:
                new_terms.append(nt)
        terms = new_terms
        res = _residual(terms, pairs)
        steps.append(CascadeStep(i, name, (su, sv), gone, [t.describe() for t in terms], res))
        if res >= tol:
            raise StepResidual(f"step {i} identity fails (residual {res:.3g})",
                               witness=i, residual=res)

    if isinstance(mode, SkitovichDarmois):
        # all phi_j are gone after n steps; the (h, 0) step also removes Q
        if any(t.label.startswith("phi") for t in terms) or any(t.label == "Q" for t in terms):
            raise StepResidual("elimination left unknown functions behind", witness=len(steps))
        terminal = steps[n - 1].residual
        h = plan[-1][1][0]
        order = l_deg + n + 2
        conc = Term("P", "lhs", P, 1, 0, [(h, zero)] * order)
        conclusion = f"D_h^{order} P(u) = 0"
        conc_res = max(abs(conc.value(u, zero)) for u in {p[0] for p in pairs})
    else:
        phi_terms = [t for t in terms if t.label.startswith("phi")]
        if [t.label for t in phi_terms] != ["phi_1(u+d v)"]:
            raise StepResidual("cascade did not isolate phi_1", witness=len(steps))
        # apply D_(h,k)^(l+1): the polynomial side vanishes
        hk = (Y.coerce(next_shift()), Y.coerce(next_shift()))
        lifted = [t.differenced(*hk) for t in terms]
        for _ in range(l_deg):
            lifted = [t.differenced(*hk) if t is not None else None for t in lifted]
        lifted = [t for t in lifted if t is not None]
        terminal = _residual([t for t in lifted if t.side == "lhs"], pairs)
        steps.append(CascadeStep(len(steps) + 1, "(h,k)^(l+1)", hk, [],
                                 [t.describe() for t in lifted], terminal))
        h, k = hk
        order = 2 * n + l_deg - 1
        conc = Term("phi_1", "lhs", phis[0], 1, 0, [(2 * k, zero)] + [(h, zero)] * order)
        conclusion = f"D_2k D_h^{order} phi_1(u) = 0"
        conc_res = max(abs(conc.value(u, zero)) for u in {p[0] for p in pairs})
    return EliminationTrace(label, l_deg, base, steps, terminal, conclusion, conc_res)
