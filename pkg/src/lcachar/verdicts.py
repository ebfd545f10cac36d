"""Verdicts for the three characterization results: hypothesis checks, explicit instances and searches.

A search enumerates rational distributions on a small support, keeps the
tuples whose characteristic functions satisfy the setting's equation on the
sampled dual, and checks the theorem's conclusion on every kept tuple.  On a
compact dual the polynomial defect must vanish, so the equation is an exact
identity between the two sides; this is what the vectorized kernels test.
"""

from __future__ import annotations

import itertools
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .cascade import DEFAULT_SEED
from .characterize import (
    Certificate,
    annihilator_lift,
    as_charfn,
    gamma_i_membership,
    gaussianity_check,
    qdefect_conditional_symmetry,
    qdefect_linear_forms,
    qdefect_sumdiff,
    quartic_counterexample,
)
from .dist import atomic, char_fn
from .errors import (
    CaseMismatch,
    HypothesisNotMet,
    InputError,
    SearchBudgetExceeded,
    SupportNotSubgroup,
    VanishingValue,
)
from .groups import (
    GroupDescriptor,
    GroupElement,
    Homomorphism,
    Subgroup,
    heyde_condition,
    is_admissible,
    mul_map,
    pair_angle,
    structural_predicates,
)
from .polyfd import Window

FINITE_TOL = 1e-12
WINDOW_TOL = 1e-9
NONVANISH = 1e-9
DEGENERATE_TOL = 1e-12
RECHECK_BAND = 1e3      # residuals within this factor of tol are recomputed with mpmath


@dataclass(frozen=True)
class SearchSpec:
    """Candidate space: weights with a common denominator on a support box."""

    radius: int = 2
    denominator: int = 4
    grid: int = 16
    samples: int = 0
    budget: int = 5_000_000
    threads: int | None = None


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get("LCA_CHAR_THREADS")
    n = requested or min(4, os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


# --- hypotheses ---------------------------------------------------------------


def order2_element(X: GroupDescriptor) -> GroupElement | None:
    """Some element of order 2, or None."""
    if X.t_rank:
        t = [0] * X.t_rank
        t[0] = Fraction(1, 2)
        return X.element((0,) * X.z_rank, t, (0,) * len(X.finite_orders))
    for i, n in enumerate(X.finite_orders):
        if n % 2 == 0:
            f = [0] * len(X.finite_orders)
            f[i] = n // 2
            return X.element((0,) * X.z_rank, (), f)
    return None


def _primes_killing(X: GroupDescriptor) -> list[int]:
    """Primes p with X^(p) = {0}: X must be a product of copies of Z_p."""
    if X.z_rank or X.t_rank or not X.finite_orders:
        return []
    p = X.finite_orders[0]
    if any(n != p for n in X.finite_orders) or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        return []
    return [p]


def t1_hypothesis(X: GroupDescriptor, a: Sequence[int], b: Sequence[int]) -> dict:
    for name, coeffs in (("a", a), ("b", b)):
        v = is_admissible(coeffs, X)
        if not v.ok:
            raise HypothesisNotMet(f"coefficients {name} are not admissible for {X}",
                                   witness=(name,) + tuple(v.witness))
    report = structural_predicates(X)
    primes = _primes_killing(X)
    if not report.is_torsion_free and not primes:
        raise HypothesisNotMet(f"{X} is neither torsion-free nor killed by a prime",
                               witness=order2_element(X) or str(X))
    return {"torsion_free": report.is_torsion_free, "prime": primes[0] if primes else None}


def t2_hypothesis(X: GroupDescriptor, deltas: Sequence) -> dict:
    w = order2_element(X)
    if w is not None:
        raise HypothesisNotMet(f"{X} has an element of order 2", witness=w)
    v = heyde_condition(deltas, X)
    if not v.ok:
        raise HypothesisNotMet("some d_i + d_j or d_i - d_j is not an automorphism",
                               witness=v.witness)
    return {"heyde_condition": True}


# --- candidate spaces -----------------------------------------------------------


def weight_vectors(size: int, denominator: int) -> list[tuple[Fraction, ...]]:
    """All weight vectors k/denominator (k >= 0) on ``size`` points summing to 1."""
    out = []
    for bars in itertools.combinations(range(denominator + size - 1), size - 1):
        parts, prev = [], -1
        for b in bars + (denominator + size - 1,):
            parts.append(Fraction(b - prev - 1, denominator))
            prev = b
        out.append(tuple(parts))
    return out


def support_points(X: GroupDescriptor, radius: int) -> list[GroupElement]:
    if X.t_rank:
        raise InputError("search supports are defined for Z^a x F only")
    return Window(radius).points(X)


def dual_points(Y: GroupDescriptor, grid: int) -> list[GroupElement]:
    if Y.z_rank:
        raise InputError("searches need a compact dual")
    return Window(0, grid).points(Y)


class CandidateSpace:
    """Weight vectors on fixed support points plus their char fns on a dual grid."""

    def __init__(self, X: GroupDescriptor, support: list[GroupElement],
                 weights: list[tuple[Fraction, ...]], dual: list[GroupElement]):
        self.X, self.support, self.weights, self.dual = X, support, weights, dual
        self.angles = [[pair_angle(x, y) for y in dual] for x in support]
        E = np.exp(2j * np.pi * np.array([[float(a) for a in row] for row in self.angles]))
        W = np.array([[float(w) for w in ws] for ws in weights])
        self.C = W @ E
        self.index = {y: k for k, y in enumerate(dual)}

    def __len__(self):
        return len(self.weights)

    def idx(self, fn: Callable[[GroupElement], GroupElement]) -> np.ndarray:
        return np.array([self.index[fn(y)] for y in self.dual])

    def idx2(self, fn: Callable[[GroupElement, GroupElement], GroupElement]) -> np.ndarray:
        return np.array([[self.index[fn(u, v)] for v in self.dual] for u in self.dual])

    def distribution(self, i: int):
        pts = [x for x, w in zip(self.support, self.weights[i]) if w]
        return atomic(pts, [w for w in self.weights[i] if w], self.X)

    def mp_values(self, i: int) -> list:
        """Char fn values of candidate ``i`` at 50 significant digits."""
        with mpmath.workdps(50):
            out = []
            for k in range(len(self.dual)):
                s = mpmath.mpc(0)
                for j, w in enumerate(self.weights[i]):
                    if w:
                        s += mpmath.mpf(w.numerator) / w.denominator * mpmath.expjpi(
                            2 * mpmath.mpf(self.angles[j][k].numerator) / self.angles[j][k].denominator)
                out.append(s)
            return out

    def nonvanishing(self) -> np.ndarray:
        return np.min(np.abs(self.C), axis=1) > NONVANISH

    def degenerate(self, i: int) -> bool:
        return bool(np.max(np.abs(np.abs(self.C[i]) - 1)) < DEGENERATE_TOL)


def _pair_search(space: CandidateSpace, sides: Callable, tol: float, spec: SearchSpec,
                 require_nonvanishing: bool = True):
    """Evaluate ``sides(C1, C2) -> (lhs, rhs)`` over all candidate pairs.

    ``C1`` holds a chunk of first-position rows, ``C2`` every row; both sides
    come back with shape (chunk, m, points).  Returns the kept pairs, the
    number of pairs inspected and the pairs that needed an mpmath recheck.
    """
    m = len(space)
    if m * m > spec.budget:
        raise SearchBudgetExceeded(f"{m * m} candidate pairs exceed the budget {spec.budget}")
    ok_rows = space.nonvanishing() if require_nonvanishing else np.ones(m, dtype=bool)
    rows = np.flatnonzero(ok_rows)
    chunks = [rows[i:i + 16] for i in range(0, len(rows), 16)]

    def work(chunk):
        lhs, rhs = sides(space.C[chunk], space.C)
        res = np.max(np.abs(lhs - rhs), axis=2)
        res[:, ~ok_rows] = np.inf
        kept, near = [], []
        for r, i in enumerate(chunk):
            for j in np.flatnonzero(res[r] < tol * RECHECK_BAND):
                val = res[r, j]
                if val >= tol / RECHECK_BAND:
                    near.append((int(i), int(j)))
                elif val < tol:
                    kept.append((int(i), int(j)))
        return kept, near

    with ThreadPoolExecutor(thread_count(spec.threads)) as pool:
        results = list(pool.map(work, chunks))
    kept = [p for k, _ in results for p in k]
    near = [p for _, n in results for p in n]
    return kept, int(len(rows) * ok_rows.sum()), near


def _mp_recheck(space: CandidateSpace, near, mp_sides: Callable, tol: float):
    confirmed = []
    for i, j in near:
        a, b = space.mp_values(i), space.mp_values(j)
        with mpmath.workdps(50):
            lhs, rhs = mp_sides(a, b)
            worst = max(abs(x - y) for x, y in zip(lhs, rhs))
        if worst < tol:
            confirmed.append((i, j))
    return confirmed


# --- searches -------------------------------------------------------------------


def _space(X: GroupDescriptor, spec: SearchSpec, seed: int) -> CandidateSpace:
    support = support_points(X, spec.radius)
    weights = weight_vectors(len(support), spec.denominator)
    if spec.samples:
        rng = random.Random(seed)
        seen = set(weights)
        for _ in range(spec.samples):
            d = rng.randint(2, 12)
            cuts = sorted(rng.randint(0, d) for _ in range(len(support) - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [d])]
            w = tuple(Fraction(p, d) for p in parts)
            if w not in seen:
                seen.add(w)
                weights.append(w)
    return CandidateSpace(X, support, weights, dual_points(X.dual(), spec.grid))


def search_linear_forms(X: GroupDescriptor, a: Sequence[int], b: Sequence[int],
                        spec: SearchSpec, seed: int = DEFAULT_SEED):
    """Pairs (mu_1, mu_2) whose forms a.xi, b.xi have a vanishing defect."""
    if len(a) != 2 or len(b) != 2:
        raise InputError("searches cover two random variables")
    space = _space(X, spec, seed)
    Y = X.dual()
    tol = FINITE_TOL if Y.is_finite else WINDOW_TOL
    (a1, a2), (b1, b2) = a, b
    L1 = space.idx2(lambda u, v: a1 * u + b1 * v)
    L2 = space.idx2(lambda u, v: a2 * u + b2 * v)
    A1, A2 = space.idx(lambda u: a1 * u), space.idx(lambda u: a2 * u)
    B1, B2 = space.idx(lambda v: b1 * v), space.idx(lambda v: b2 * v)
    k = len(space.dual)

    def sides(C1, C2):
        lhs = C1[:, None, L1] * C2[None, :, L2]
        P = C1[:, A1][:, None, :] * C2[:, A2][None, :, :]
        Q = C1[:, B1][:, None, :] * C2[:, B2][None, :, :]
        rhs = P[:, :, :, None] * Q[:, :, None, :]
        shape = lhs.shape[:2] + (k * k,)
        return lhs.reshape(shape), rhs.reshape(shape)

    def mp_sides(c1, c2):
        lhs = [c1[L1[u, v]] * c2[L2[u, v]] for u in range(k) for v in range(k)]
        rhs = [c1[A1[u]] * c2[A2[u]] * c1[B1[v]] * c2[B2[v]] for u in range(k) for v in range(k)]
        return lhs, rhs

    kept, examined, near = _pair_search(space, sides, tol, spec)
    kept += _mp_recheck(space, near, mp_sides, tol)
    return space, sorted(kept), examined, len(near)


def search_symmetry(X: GroupDescriptor, deltas: Sequence, spec: SearchSpec,
                    seed: int = DEFAULT_SEED):
    """Pairs whose char fns satisfy prod mu_j^(u + d~_j v) = prod mu_j^(u - d~_j v)."""
    if len(deltas) != 2:
        raise InputError("searches cover two random variables")
    space = _space(X, spec, seed)
    Y = X.dual()
    tol = FINITE_TOL if Y.is_finite else WINDOW_TOL
    d1, d2 = (Homomorphism.coerce(d, X).adjoint() for d in deltas)
    P1 = space.idx2(lambda u, v: u + d1(v))
    P2 = space.idx2(lambda u, v: u + d2(v))
    M1 = space.idx2(lambda u, v: u - d1(v))
    M2 = space.idx2(lambda u, v: u - d2(v))
    k = len(space.dual)

    def sides(C1, C2):
        lhs = C1[:, None, P1] * C2[None, :, P2]
        rhs = C1[:, None, M1] * C2[None, :, M2]
        shape = lhs.shape[:2] + (k * k,)
        return lhs.reshape(shape), rhs.reshape(shape)

    def mp_sides(c1, c2):
        lhs = [c1[P1[u, v]] * c2[P2[u, v]] for u in range(k) for v in range(k)]
        rhs = [c1[M1[u, v]] * c2[M2[u, v]] for u in range(k) for v in range(k)]
        return lhs, rhs

    kept, examined, near = _pair_search(space, sides, tol, spec)
    kept += _mp_recheck(space, near, mp_sides, tol)
    return space, sorted(kept), examined, len(near)


def search_sumdiff(X: GroupDescriptor, spec: SearchSpec, seed: int = DEFAULT_SEED):
    """Single distributions with mu^(u+v) mu^(u-v) = mu^(u)^2 mu^(v) mu^(-v)."""
    space = _space(X, spec, seed)
    Y = X.dual()
    tol = FINITE_TOL if Y.is_finite else WINDOW_TOL
    if len(space) > spec.budget:
        raise SearchBudgetExceeded(f"{len(space)} candidates exceed the budget {spec.budget}")
    S = space.idx2(lambda u, v: u + v)
    D = space.idx2(lambda u, v: u - v)
    N = space.idx(lambda v: -v)
    C = space.C
    lhs = C[:, S] * C[:, D]
    rhs = (C ** 2)[:, :, None] * (C * C[:, N])[:, None, :]
    res = np.max(np.abs(lhs - rhs).reshape(len(space), -1), axis=1)
    kept = [int(i) for i in np.flatnonzero(res < tol)]
    return space, kept, len(space)


# --- verdicts -------------------------------------------------------------------


def _nonvanishing_or_raise(fs, window: Window):
    for j, f in enumerate(fs):
        for y in window.points(f.dual_owner):
            if f.log_value(y) is None or abs(f.value(y)) <= NONVANISH:
                raise HypothesisNotMet(f"characteristic function {j} vanishes at {y}",
                                       witness=(j, y))


def _window_degenerate(f, window: Window) -> bool:
    return all(abs(abs(f.value(y)) - 1) < DEGENERATE_TOL for y in window.points(f.dual_owner))


def _explicit(claim: str, hyp: dict, rep, fs, window: Window, degenerate_needed: bool) -> Certificate:
    defect = rep.certificate()
    if not rep.q_independent:
        return Certificate(claim, True, "premise-fails", sub=[defect], details=hyp)
    subs, bad = [defect], []
    for j, f in enumerate(fs):
        g = gaussianity_check(f, window)
        subs.append(g)
        if not g.passed or (degenerate_needed and not _window_degenerate(f, window)):
            bad.append(j)
    cert = Certificate(claim, not bad, "conclusion-holds" if not bad else "counterexample",
                       witnesses=bad, fitted_q=rep.q, sub=subs, details=hyp)
    return cert


def _search_cert(claim: str, hyp: dict, space: CandidateSpace, kept, examined: int,
                 rechecked: int, conclusion: Callable[[int], bool]) -> Certificate:
    bad = []
    for tup in kept:
        members = tup if isinstance(tup, tuple) else (tup,)
        if not all(conclusion(i) for i in members):
            bad.append(tuple(space.distribution(i) for i in members))
    cert = Certificate(claim, not bad, "conclusion-holds" if not bad else "counterexample",
                       witnesses=bad[:5], details=dict(hyp, candidates=len(space),
                                                      examined=examined, kept=len(kept),
                                                      rechecked=rechecked,
                                                      dual_points=len(space.dual)))
    return cert


def theorem_verdict(theorem: str, X: GroupDescriptor, *, a=None, b=None, deltas=None,
                    alpha=None, beta=None, marginals=None, search: SearchSpec | None = None,
                    window: Window | None = None, seed: int = DEFAULT_SEED,
                    subgroup: Subgroup | None = None, quartic=(1, Fraction(1, 100))) -> Certificate:
    """Check one of the three characterization theorems on an instance.

    T1: linear forms with integer coefficients ``a``, ``b``.
    T2: conditional symmetry with ``deltas`` (or ``alpha``/``beta``).
    T3: sum and difference of two identically distributed variables.

    With ``marginals`` the implication is checked on that tuple; with
    ``search`` rational candidates are enumerated.  For T3 on a group whose
    connected component has an element of order 2, the quartic family (and
    its zero extension through ``subgroup``) witnesses necessity.
    """
    theorem = theorem.upper()
    window = window or Window(8, 16)
    if theorem == "T1":
        if a is None or b is None:
            raise InputError("T1 needs coefficient lists a and b")
        hyp = t1_hypothesis(X, a, b)
        degenerate_needed = hyp["prime"] is not None or X.dual().is_compact
        if search is not None:
            space, kept, examined, near = search_linear_forms(X, a, b, search, seed)
            return _search_cert("T1", hyp, space, kept, examined, near, space.degenerate)
        fs = [as_charfn(m) for m in marginals or ()]
        if len(fs) != len(a):
            raise InputError("T1 needs one marginal per coefficient")
        _nonvanishing_or_raise(fs, window)
        rep = qdefect_linear_forms(fs, a, b, window)
        return _explicit("T1", hyp, rep, fs, window, degenerate_needed)
    if theorem == "T2":
        if deltas is None:
            if alpha is None or beta is None:
                raise InputError("T2 needs deltas or alpha and beta")
            deltas = [Homomorphism.coerce(bb, X) @ Homomorphism.coerce(aa, X).inverse()
                      for aa, bb in zip(alpha, beta)]
        if len(deltas) < 2:
            raise InputError("T2 needs at least two variables")
        hyp = t2_hypothesis(X, deltas)
        if search is not None:
            space, kept, examined, near = search_symmetry(X, deltas, search, seed)
            conclusion = space.degenerate if X.dual().is_compact else (
                lambda i: gaussianity_check(char_fn(space.distribution(i)), window).passed)
            return _search_cert("T2", hyp, space, kept, examined, near, conclusion)
        fs = [as_charfn(m) for m in marginals or ()]
        if len(fs) != len(deltas):
            raise InputError("T2 needs one marginal per delta")
        _nonvanishing_or_raise(fs, window)
        if alpha is None:
            alpha, beta = [1] * len(deltas), list(deltas)
        rep = qdefect_conditional_symmetry(fs, alpha, beta, window)
        return _explicit("T2", hyp, rep, fs, window, X.dual().is_compact)
    if theorem == "T3":
        report = structural_predicates(X)
        hyp = {"order2_in_component": report.order2_in_component}
        if report.order2_in_component:
            return _t3_necessity(X, hyp, subgroup, quartic, window)
        if search is not None:
            space, kept, examined = search_sumdiff(X, search, seed)

            def member(i):
                try:
                    return gamma_i_membership(char_fn(space.distribution(i)),
                                              Window(0, search.grid)).passed
                except (SupportNotSubgroup, VanishingValue):
                    return False

            return _search_cert("T3", hyp, space, kept, examined, 0, member)
        if not marginals or len(marginals) != 1:
            raise InputError("T3 needs exactly one distribution")
        f = as_charfn(marginals[0])
        try:
            rep = qdefect_sumdiff(f, window)
        except CaseMismatch as e:
            return Certificate("T3", True, "premise-fails", witnesses=[e.witness], details=hyp)
        if not rep.q_independent:
            return Certificate("T3", True, "premise-fails", sub=[rep.certificate()], details=hyp)
        try:
            member = gamma_i_membership(f, window)
        except SupportNotSubgroup as e:
            member = Certificate("gamma*I", False, "not-member", witnesses=[e.witness])
        return Certificate("T3", member.passed,
                           "conclusion-holds" if member.passed else "counterexample",
                           witnesses=list(member.witnesses), fitted_q=rep.q,
                           sub=[rep.certificate(), member], details=hyp)
    raise InputError(f"unknown theorem {theorem!r}; expected T1, T2 or T3")


def _t3_necessity(X: GroupDescriptor, hyp: dict, subgroup, quartic, window) -> Certificate:
    if X != GroupDescriptor(0, 1):
        raise InputError("necessity constructions are implemented for X = T only")
    f, qc = quartic_counterexample(*quartic)
    subs = [qc]
    ok = qc.passed and qc.verdict == "qindep-nongaussian"
    details = dict(hyp, quartic=tuple(Fraction(v) for v in quartic))
    if subgroup is not None and not subgroup.is_trivial():
        h, lc = annihilator_lift(f, subgroup)
        subs.append(lc)
        m = lc.details["index"]
        try:
            rep = qdefect_sumdiff(h, Window(6).scaled(m))
            subs.append(rep.certificate())
            lifted_ok = rep.q_independent
        except CaseMismatch as e:
            subs.append(Certificate("qdefect-sumdiff", False, "CaseMismatch", witnesses=[e.witness]))
            lifted_ok = False
        member = gamma_i_membership(h, window.scaled(m))
        subs.append(member)
        details.update(k_is_corwin=lc.details["k_is_corwin"], lifted_separates=lifted_ok and not member.passed)
        ok = ok and lc.passed and (lifted_ok and not member.passed) == bool(lc.details["k_is_corwin"])
    return Certificate("T3", ok, "necessity-witnessed" if ok else "necessity-not-witnessed",
                       margins=dict(qc.margins), fitted_q=qc.fitted_q, sub=subs, details=details)
