"""Gaussianity tests, Q-independence defects, counterexamples and theorem verdicts."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dist import (
    CharFn,
    Distribution,
    ExpPoly,
    ZeroExtension,
    char_fn,
    exp_poly_charfn,
    positive_definiteness,
)
from .errors import (
    BochnerFail,
    BranchInconsistency,
    CaseMismatch,
    Inconclusive,
    InputError,
    MismatchedGroups,
    NonCompactSubgroup,
    NotAnAutomorphism,
    NotPolynomial,
    ResidualTooLarge,
    StepTooLarge,
    SupportNotSubgroup,
    TailBoundUnavailable,
    UnsupportedSubgroupForm,
    VanishingValue,
)
from .groups import (
    GroupDescriptor,
    GroupElement,
    Homomorphism,
    Subgroup,
    annihilator,
    join,
    structural_predicates,
)
from .polyfd import (
    DEFAULT_D_MAX,
    LatticeFunction,
    PolynomialFn,
    Window,
    branch_log,
    canonical_key,
    compact_steps,
    fit_polynomial,
    polynomial_degree,
    z_unit,
)

ZERO = 1e-300          # below this a characteristic function value counts as 0
GAUSS_TOL = 1e-9
FIT_TOL = 1e-9
COMPACT_TOL = 1e-9

QINDEP = "QIndependent"
NOT_QINDEP = "NotQIndependent"
PLAIN = "PlainIndependent"


@dataclass
class Certificate:
    claim: str
    passed: bool
    verdict: str = ""
    margins: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    fitted_q: PolynomialFn | None = None
    sub: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def find(self, claim: str) -> Certificate | None:
        """First sub-certificate (depth first) with the given claim."""
        for c in self.sub:
            if c.claim == claim:
                return c
            hit = c.find(claim)
            if hit is not None:
                return hit
        return None

    def to_json(self) -> dict:
        from .serialize import certificate_json
        return certificate_json(self)


@dataclass
class QDefectReport:
    setting: str
    verdict: str
    q: PolynomialFn | None = None
    residual: float = 0.0
    witness: object = None
    degree: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def q_independent(self) -> bool:
        return self.verdict in (QINDEP, PLAIN)

    def certificate(self) -> Certificate:
        return Certificate(f"qdefect-{self.setting}", self.q_independent, self.verdict,
                           margins={"residual": self.residual},
                           witnesses=[] if self.witness is None else [self.witness],
                           fitted_q=self.q, details=dict(self.details, degree=self.degree))


def as_charfn(m) -> CharFn:
    if isinstance(m, Distribution):
        return char_fn(m)
    if isinstance(m, CharFn):
        return m
    raise TypeError(f"expected a Distribution or CharFn, got {type(m).__name__}")


def _pair_order(pairs):
    return sorted(pairs, key=lambda uv: canonical_key(join(uv)))


# --- Gaussianity -----------------------------------------------------------


def _gaussian_core(f: CharFn, pts: Sequence[GroupElement], tol: float) -> Certificate:
    """phi = -log|f| must be >= 0 and satisfy the parallelogram identity on
    all pairs whose sum and difference stay among ``pts``; the phase must be
    additive on the same pairs."""
    logs = {}
    for y in pts:
        v = f.log_value(y)
        if v is None:
            raise VanishingValue(f"characteristic function vanishes at {y}", witness=y)
        logs[y] = v
    phi = {y: -v.real for y, v in logs.items()}
    phase = {y: cmath.exp(1j * v.imag) for y, v in logs.items()}
    low = min(pts, key=lambda y: (phi[y], canonical_key(y)))
    worst = (None, 0.0)
    first = None
    phase_worst = (None, 0.0)
    for u, v in _pair_order((u, v) for u in pts for v in pts):
        s, d = u + v, u - v
        if s not in phi or d not in phi:
            continue
        r = phi[s] + phi[d] - 2 * (phi[u] + phi[v])
        if abs(r) > abs(worst[1]):
            worst = ((u, v), r)
        if first is None and abs(r) >= tol:
            first = ((u, v), r)
        pr = abs(phase[s] - phase[u] * phase[v])
        if pr > phase_worst[1]:
            phase_worst = ((u, v), pr)
    ok_phi = phi[low] >= -tol
    ok_par = first is None
    ok_phase = phase_worst[1] < tol
    cert = Certificate("gaussian", ok_phi and ok_par and ok_phase,
                       "gaussian" if ok_phi and ok_par and ok_phase else "not-gaussian",
                       margins={"min_phi": phi[low], "parallelogram_residual": abs(worst[1]),
                                "phase_residual": phase_worst[1]})
    if first is not None:
        cert.witnesses.append(first[0])
        cert.details["witness_residual"] = abs(first[1])
        cert.details["worst_pair"] = worst[0]
    if not ok_phi:
        cert.witnesses.append(low)
    if not ok_phase:
        cert.witnesses.append(phase_worst[0])
    cert.details["points"] = len(pts)
    return cert


def gaussianity_check(f, window: Window | None = None, tol: float = GAUSS_TOL) -> Certificate:
    """Test whether ``f`` is (x, y) exp(-phi(y)) with phi a non-negative
    solution of phi(u+v) + phi(u-v) = 2 phi(u) + 2 phi(v) on the window.

    The witness is the first failing pair in canonical order (small points
    first); the largest residual is reported as ``worst_pair``.
    """
    f = as_charfn(f)
    pts = (window or Window(8)).points(f.dual_owner)
    return _gaussian_core(f, pts, tol)


def _infer_subgroup(Y: GroupDescriptor, S: list[GroupElement], pts: list[GroupElement],
                    grid: int) -> Subgroup:
    """Smallest product subgroup containing S, checked against the window.

    A circle axis whose whole sampling grid is in S is read as the full circle.
    """
    z_mods = [0] * Y.z_rank
    t_orders = [1] * Y.t_rank
    f_steps = list(Y.finite_orders)
    for y in S:
        for i, v in enumerate(y.z):
            z_mods[i] = math.gcd(z_mods[i], v)
        for i, v in enumerate(y.t):
            t_orders[i] = math.lcm(t_orders[i], v.denominator)
        for i, v in enumerate(y.f):
            f_steps[i] = math.gcd(f_steps[i], v)
    t_orders = [0 if m == grid else m for m in t_orders]
    cand = Subgroup.product(Y, z_mods, t_orders, f_steps)
    members = set(S)
    extra = [y for y in pts if cand.contains(y) and y not in members]
    if not extra:
        return cand
    if Y.is_finite:
        gen = Subgroup.generated(Y, S)
        if gen.element_set == members:
            return gen
    raise UnsupportedSubgroupForm("support is a subgroup of the window but not of a supported form")


def gamma_i_membership(f, window: Window | None = None, tol: float = GAUSS_TOL) -> Certificate:
    """Decide whether f is the char fn of a Gaussian times a Haar distribution.

    The support S = {f != 0} must be a subgroup; it is the annihilator of the
    compact subgroup K carrying the Haar factor, and f restricted to S must
    pass the Gaussianity test.
    """
    f = as_charfn(f)
    Y = f.dual_owner
    window = window or Window(8)
    pts = window.points(Y)
    vals = {y: f.log_value(y) for y in pts}
    S = [y for y in pts if vals[y] is not None]
    support = set(S)
    for y1, y2 in _pair_order((a, b) for a in S for b in S):
        s = y1 + y2
        if s in vals and s not in support:
            raise SupportNotSubgroup(f"{y1} + {y2} leaves the support", witness=(y1, y2))
    for y in S:
        if -y in vals and -y not in support:
            raise SupportNotSubgroup(f"-{y} is outside the support", witness=(y, y))
    A = _infer_subgroup(Y, S, pts, window.torus_grid)
    K = annihilator(Y.dual(), A)
    gauss = _gaussian_core(f, S, tol)
    cert = Certificate("gamma*I", gauss.passed and K.is_compact,
                       "member" if gauss.passed else "not-member",
                       margins=dict(gauss.margins), witnesses=list(gauss.witnesses), sub=[gauss])
    cert.details.update(support=A, haar_subgroup=K, haar_compact=K.is_compact)
    if "witness_residual" in gauss.details:
        cert.details["witness_residual"] = gauss.details["witness_residual"]
    return cert


# --- Q-independence defects -------------------------------------------------


def _log_sum(terms) -> complex | None:
    """Sum of logarithms; None (a vanishing factor) is absorbing."""
    total = 0j
    for t in terms:
        if t is None:
            return None
        total += t
    return total


def _collapse(setting: str, pts, num, den, mode: str, tol: float) -> QDefectReport:
    """Compact dual: a continuous polynomial with q(0) = 0 is 0, so the two
    sides must agree exactly wherever they are defined."""
    worst, witness = 0.0, None
    for y in pts:
        a, b = num[y], den[y]
        if (a is None) != (b is None):
            if mode == "mismatch":
                raise CaseMismatch(f"one side vanishes at {y}, the other does not", witness=y)
            return QDefectReport(setting, NOT_QINDEP, None, math.inf, y,
                                 details={"reason": "one side vanishes"})
        if a is None:
            continue
        r = abs(cmath.exp(a - b) - 1)
        if r > worst:
            worst = r
        if r >= tol and witness is None:
            witness = y
    if witness is not None:
        return QDefectReport(setting, NOT_QINDEP, None, worst, witness,
                             details={"reason": "ratio is not 1 on a compact dual"})
    return QDefectReport(setting, PLAIN, PolynomialFn(pts[0].owner), worst, degree=0,
                         details={"compact_dual": True})


def _defect(setting: str, G: GroupDescriptor, pts: list[GroupElement], num: dict, den: dict,
            mode: str, tol: float = FIT_TOL, d_max: int | None = None) -> QDefectReport:
    """Turn the two sides (given as logarithms, None where a side vanishes)
    into a fitted polynomial defect.

    ``mode`` says what to do where a side vanishes: ``raise`` any zero,
    ``cases`` reports NotQIndependent when exactly one side vanishes,
    ``mismatch`` raises CaseMismatch for that situation.
    """
    pts = sorted(pts, key=canonical_key)
    if mode == "raise":
        for y in pts:
            if num[y] is None or den[y] is None:
                raise VanishingValue(f"characteristic function vanishes at {y}", witness=y)
    if G.z_rank == 0:
        return _collapse(setting, pts, num, den, mode, tol)
    ratio = {}
    for y in pts:
        a, b = num[y], den[y]
        if (a is None) != (b is None):
            if mode == "mismatch":
                raise CaseMismatch(f"one side vanishes at {y}, the other does not", witness=y)
            return QDefectReport(setting, NOT_QINDEP, None, math.inf, y,
                                 details={"reason": "one side vanishes"})
        if a is not None:
            ratio[y] = a - b
    steps = [0] * G.z_rank
    for y in ratio:
        for i, v in enumerate(y.z):
            steps[i] = math.gcd(steps[i], v)
    steps = tuple(s or 1 for s in steps)
    # the modulus part of the log is exact; only the phase needs a continuous branch
    phase = LatticeFunction(G, {y: cmath.exp(1j * d.imag) for y, d in ratio.items()})
    lattice = [z_unit(G, i, s) for i, s in enumerate(steps)] + compact_steps(G, ratio)
    details = {"steps": steps, "nonvanishing_points": len(ratio), "points": len(pts)}
    try:
        branch = branch_log(phase, lattice)
        q = LatticeFunction(G, {y: complex(d.real, branch(y).imag) for y, d in ratio.items()})
    except (BranchInconsistency, StepTooLarge) as e:
        return QDefectReport(setting, NOT_QINDEP, None, e.residual or math.inf, e.witness,
                             details=dict(details, reason=type(e).__name__))
    extent = min(q.z_extent())
    cap = d_max if d_max is not None else max(0, min(DEFAULT_D_MAX, extent - 2))
    try:
        degree = polynomial_degree(q, cap, steps=steps)
    except NotPolynomial as e:
        return QDefectReport(setting, NOT_QINDEP, None, e.residual, e.witness,
                             details=dict(details, reason="defect is not a polynomial"))
    try:
        poly, residual = fit_polynomial(q, degree, steps=steps, tol=tol)
    except ResidualTooLarge as e:
        return QDefectReport(setting, NOT_QINDEP, e.fit, e.residual, None, degree,
                             details=dict(details, reason="fit residual too large"))
    verdict = PLAIN if poly.is_zero() else QINDEP
    return QDefectReport(setting, verdict, poly, residual, degree=degree, details=details)


def _window_pts(G: GroupDescriptor, window: Window | None) -> list[GroupElement]:
    return (window or Window(6)).points(G)


def _power_of(G: GroupDescriptor) -> int:
    """Largest n that splits G into n equal blocks (the joint's arity)."""
    counts = [G.z_rank, G.t_rank, len(G.finite_orders)]
    for n in range(max(counts), 1, -1):
        if all(c % n == 0 for c in counts):
            k = len(G.finite_orders) // n
            if G.finite_orders == G.finite_orders[:k] * n:
                return n
    return 1


def qdefect_vector(joint, marginals: Sequence | None = None, window: Window | None = None,
                   tol: float = FIT_TOL) -> QDefectReport:
    """Defect q with joint^(y_1..y_n) = prod mu_j^(y_j) exp(q(y)).

    ``joint`` lives on X^n.  Without ``marginals`` they are read off the
    joint char fn on the coordinate axes.
    """
    J = as_charfn(joint)
    Yn = J.dual_owner
    if marginals is not None:
        ms = [as_charfn(m) for m in marginals]
        n = len(ms)
        if ms[0].dual_owner.power(n) != Yn:
            raise MismatchedGroups(f"joint lives on {Yn}, marginals on {ms[0].dual_owner}")
    else:
        n = _power_of(Yn)
        ms = None
    parts_of = (lambda p: Yn.split(p, n)) if n > 1 else (lambda p: [p])
    zero = parts_of(Yn.zero())[0]

    def marginal(j, y):
        if ms is not None:
            return ms[j].log_value(y)
        parts = [zero] * n
        parts[j] = y
        return J.log_value(join(parts))

    pts = _window_pts(Yn, window)
    num, den = {}, {}
    for p in pts:
        num[p] = J.log_value(p)
        den[p] = _log_sum(marginal(j, y) for j, y in enumerate(parts_of(p)))
    return _defect("vector", Yn, pts, num, den, "cases", tol)


def _scale(c, y: GroupElement) -> GroupElement:
    if isinstance(c, Homomorphism):
        return c(y)
    return int(c) * y


def qdefect_linear_forms(marginals: Sequence, a: Sequence, b: Sequence,
                         window: Window | None = None, tol: float = FIT_TOL) -> QDefectReport:
    """Defect of prod mu_j^(a_j u + b_j v) against prod mu_j^(a_j u) prod mu_j^(b_j v).

    The forms sum a_j xi_j and sum b_j xi_j are Q-independent exactly when
    this defect is a polynomial.
    """
    fs = [as_charfn(m) for m in marginals]
    if not (len(fs) == len(a) == len(b)):
        raise InputError("marginals and coefficient lists differ in length")
    Y = fs[0].dual_owner
    Y2 = Y.power(2)
    pts = _window_pts(Y2, window)
    num, den = {}, {}
    for p in pts:
        u, v = Y2.split(p, 2)
        num[p] = _log_sum(f.log_value(_scale(aj, u) + _scale(bj, v)) for f, aj, bj in zip(fs, a, b))
        den[p] = _log_sum([f.log_value(_scale(aj, u)) for f, aj in zip(fs, a)]
                          + [f.log_value(_scale(bj, v)) for f, bj in zip(fs, b)])
    mode = "cases" if Y.is_compact else "raise"
    rep = _defect("linear-forms", Y2, pts, num, den, mode, tol)
    rep.details.update(a=list(a), b=list(b))
    return rep


def qdefect_conditional_symmetry(marginals: Sequence, alpha: Sequence, beta: Sequence,
                                 window: Window | None = None,
                                 tol: float = FIT_TOL) -> QDefectReport:
    """Defect of prod mu_j^(a~_j u + b~_j v) against prod mu_j^(a~_j u - b~_j v).

    ``alpha`` and ``beta`` are automorphisms of X (or integers); their
    adjoints act on the character group.  Polynomial defect means the
    conditional distribution of the second form given the first is
    symmetric up to a Q-factor.
    """
    fs = [as_charfn(m) for m in marginals]
    if not (len(fs) == len(alpha) == len(beta)):
        raise InputError("marginals and automorphism lists differ in length")
    Y = fs[0].dual_owner
    X = Y.dual()
    adj = []
    for seq in (alpha, beta):
        maps = []
        for j, c in enumerate(seq):
            h = Homomorphism.coerce(c, X)
            if h.domain != X:
                raise MismatchedGroups(f"automorphism {j} does not act on {X}")
            if not h.is_automorphism:
                raise NotAnAutomorphism(f"coefficient {j} is not an automorphism of {X}")
            maps.append(h.adjoint())
        adj.append(maps)
    ta, tb = adj
    Y2 = Y.power(2)
    pts = _window_pts(Y2, window)
    num, den = {}, {}
    for p in pts:
        u, v = Y2.split(p, 2)
        num[p] = _log_sum(f.log_value(al(u) + be(v)) for f, al, be in zip(fs, ta, tb))
        den[p] = _log_sum(f.log_value(al(u) - be(v)) for f, al, be in zip(fs, ta, tb))
    mode = "cases" if Y.is_compact else "raise"
    return _defect("conditional-symmetry", Y2, pts, num, den, mode, tol)


def qdefect_sumdiff(f, window: Window | None = None, tol: float = FIT_TOL) -> QDefectReport:
    """Defect of f(u+v) f(u-v) against f(u)^2 f(v) f(-v).

    Zero values are allowed: wherever one side vanishes the other must too,
    otherwise :class:`CaseMismatch` names the first such (u, v).  The defect
    is fitted on the sublattice where nothing vanishes.
    """
    f = as_charfn(f)
    Y = f.dual_owner
    Y2 = Y.power(2)
    pts = _window_pts(Y2, window)
    cache = {}

    def lv(y):
        if y not in cache:
            cache[y] = f.log_value(y)
        return cache[y]

    num, den = {}, {}
    for p in pts:
        u, v = Y2.split(p, 2)
        num[p] = _log_sum([lv(u + v), lv(u - v)])
        den[p] = _log_sum([lv(u), lv(u), lv(v), lv(-v)])
    return _defect("sumdiff", Y2, pts, num, den, "mismatch", tol)


# --- counterexample family and zero extension --------------------------------


def quartic_charfn(a, b) -> ExpPoly:
    """n -> exp(-a n^2 - b n^4) on Z, a candidate char fn on the circle."""
    a, b = Fraction(a), Fraction(b)
    if a < 0 or b < 0 or (a == 0 and b == 0):
        raise InputError("need a, b >= 0 with a > 0 or b > 0")
    Y = GroupDescriptor(1)
    return exp_poly_charfn(Y.dual().zero(), PolynomialFn(Y, {(2,): a, (4,): b}))


def _bochner(f: CharFn, window: Window) -> Certificate:
    try:
        bc = positive_definiteness(f, window)
    except Inconclusive as e:
        raise BochnerFail(str(e), e.certificate) from None
    except TailBoundUnavailable as e:
        raise BochnerFail(f"no rigorous tail bound: {e}") from None
    cert = Certificate("bochner", bc.passed, "positive-definite" if bc.passed else "not-positive-definite",
                       margins={"margin": bc.margin, "min_value": bc.min_value,
                                "tail_bound": bc.tail_bound, "slack": bc.slack},
                       details={"method": bc.method, "min_location": bc.min_location,
                                "terms": bc.terms, "grid": bc.grid})
    if not bc.passed:
        cert.witnesses.append(bc.min_location)
    return cert


def quartic_counterexample(a, b, *, pd_window: Window | None = None,
                           defect_window: Window | None = None,
                           gauss_window: Window | None = None) -> tuple[ExpPoly, Certificate]:
    """Build exp(-a n^2 - b n^4) and certify the three properties that make it
    separate Q-independence of sum and difference from Gaussianity on the
    circle: positive definiteness, a polynomial sum/difference defect
    (q = -12 b u^2 v^2) and, for b > 0, failure of Gaussianity."""
    f = quartic_charfn(a, b)
    pd = _bochner(f, pd_window or Window(16))
    if not pd.passed:
        raise BochnerFail(f"density certificate fails (margin {pd.margins['margin']:.3g})", pd)
    f = ExpPoly(f.dual_owner, f.shift, f.phi, certified=True)
    defect = qdefect_sumdiff(f, defect_window or Window(6)).certificate()
    gauss = gaussianity_check(f, gauss_window or Window(8))
    try:
        member = gamma_i_membership(f, gauss_window or Window(8))
    except SupportNotSubgroup as e:
        member = Certificate("gamma*I", False, "not-member", witnesses=[e.witness])
    if Fraction(b) > 0:
        ok = defect.passed and not gauss.passed and not member.passed
        verdict = "qindep-nongaussian" if ok else "not-separating"
    else:
        ok = defect.passed and gauss.passed
        verdict = "gaussian-control" if ok else "control-failed"
    cert = Certificate("quartic-counterexample", ok, verdict,
                       margins={"bochner_margin": pd.margins["margin"],
                                "gaussian_witness_residual": gauss.details.get("witness_residual", 0.0),
                                "defect_residual": defect.margins["residual"]},
                       fitted_q=defect.fitted_q, sub=[pd, defect, gauss, member],
                       details={"a": Fraction(a), "b": Fraction(b)})
    cert.witnesses = list(gauss.witnesses)
    return f, cert


def annihilator_lift(f, K: Subgroup, window: Window | None = None) -> tuple[CharFn, Certificate]:
    """Extend a char fn of X/K (living on A(Y, K)) by zero to all of Y.

    The lift is re-certified positive definite and the certificate records
    whether K is a Corwin group, the property the sum/difference argument
    needs to keep both sides of the equation vanishing together.
    """
    f = as_charfn(f)
    if not K.is_compact:
        raise NonCompactSubgroup(f"{K} is not compact")
    Y = K.owner.dual()
    A = annihilator(Y, K)
    if K.is_trivial():
        h = f
        if h.dual_owner != Y:
            raise MismatchedGroups(f"char fn lives on {h.dual_owner}, expected {Y}")
    else:
        h = ZeroExtension(f, A)
    index = A.z_mods[0] if A.kind == "product" and Y.z_rank == 1 and A.z_mods[0] else 1
    pd = _bochner(h, (window or Window(16)).scaled(index))
    try:
        corwin = structural_predicates(K.descriptor()).is_corwin
    except UnsupportedSubgroupForm:
        corwin = None
    cert = Certificate("lift", pd.passed, "positive-definite" if pd.passed else "not-positive-definite",
                       margins=dict(pd.margins), sub=[pd],
                       details={"subgroup": K, "annihilator": A, "k_is_corwin": corwin,
                                "index": index})
    return h, cert
