"""Command-line front end.

Exit codes: 0 computed (and matches --expect), 1 contradicts --expect,
2 input error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import characterize as ch
from . import verdicts
from .cascade import DEFAULT_SEED, Heyde, SkitovichDarmois, elimination_cascade
from .dist import char_fn, positive_definiteness
from .errors import (
    BochnerFail,
    Inconclusive,
    InputError,
    TailBoundUnavailable,
    WitnessError,
)
from .groups import (
    GroupDescriptor,
    Homomorphism,
    adjoint,
    annihilator,
    heyde_condition,
    is_admissible,
    mul_map,
    structural_predicates,
)
from .polyfd import PolynomialFn, Window
from .serialize import (
    charfn_from_json,
    distribution_from_json,
    dumps,
    element_from_json,
    group_from_json,
    homomorphism_from_json,
    parse_json,
    rational,
    subgroup_from_json,
    to_jsonable,
)

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEFAULT_TOL = 1e-9
CIRCLE = GroupDescriptor(0, 1)


class Report(dict):
    """Plain report: claim, pass, verdict and free-form fields."""


def _load(value: str, path: str):
    if isinstance(value, str) and value.startswith("@"):
        try:
            with open(value[1:], encoding="utf-8") as fh:
                value = fh.read()
        except OSError as e:
            raise InputError(f"{path}: cannot read {value[1:]} ({e.strerror})") from None
    return parse_json(value, path)


def _int_list(text: str, path: str) -> list:
    text = text.strip()
    if text.startswith("["):
        data = parse_json(text, path)
    else:
        data = [p for p in text.split(",") if p.strip()]
    try:
        return [int(v) if not isinstance(v, dict) else v for v in data]
    except (TypeError, ValueError):
        raise InputError(f"{path}: expected a comma-separated list of integers") from None


def _maps(text: str, X: GroupDescriptor, path: str) -> list[Homomorphism]:
    return [homomorphism_from_json(X, v, f"{path}[{i}]") for i, v in enumerate(_int_list(text, path))]


def _group(args, default=None) -> GroupDescriptor:
    if getattr(args, "group", None) is None:
        if default is None:
            raise InputError("--group is required")
        return default
    return group_from_json(_load(args.group, "--group"), "--group")


def _window(args) -> Window:
    return Window(args.W, args.M)


def _dist_list(text: str, X: GroupDescriptor, path: str):
    data = _load(text, path)
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a list of distributions")
    return [distribution_from_json(X, d, f"{path}[{i}]") for i, d in enumerate(data)]


def _charfn_arg(args, X: GroupDescriptor):
    if getattr(args, "charfn", None):
        return charfn_from_json(X.dual(), _load(args.charfn, "--charfn"), "--charfn")
    if getattr(args, "dist", None):
        return char_fn(distribution_from_json(X, _load(args.dist, "--dist"), "--dist"))
    raise InputError("give --dist or --charfn")


def _cert_report(cert) -> dict:
    return cert.to_json()


def _qreport(rep) -> dict:
    out = rep.certificate().to_json()
    out["verdict"] = rep.verdict
    return out


# --- command handlers -------------------------------------------------------------


def cmd_dual(args):
    g = _group(args)
    return {"claim": "dual", "pass": True, "verdict": "computed", "group": g,
            "dual": g.dual(), "text": str(g.dual())}


def cmd_annihilator(args):
    X = _group(args)
    K = subgroup_from_json(X, _load(args.subgroup, "--subgroup"), "--subgroup")
    A = annihilator(X.dual(), K)
    out = {"claim": "annihilator", "pass": True, "verdict": "computed", "subgroup": K,
           "annihilator": A, "annihilator_compact": A.is_compact}
    if A.is_finite:
        out["elements"] = A.elements()
    return out


def cmd_predicates(args):
    X = _group(args)
    rep = structural_predicates(X, args.prime)
    out = {"claim": "predicates", "pass": True, "verdict": "computed"}
    out.update(rep.as_dict())
    if args.mul is not None:
        image, kernel = mul_map(X, args.mul)
        out["mul_image"], out["mul_kernel"] = image, kernel
    return out


def cmd_admissible(args):
    X = _group(args)
    v = is_admissible(_int_list(args.coeffs, "--coeffs"), X)
    return {"claim": "admissible", "pass": v.ok, "verdict": "admissible" if v.ok else "not-admissible",
            "witnesses": [] if v.ok else [{"index": v.witness[0], "coefficient": v.witness[1]}]}


def cmd_heyde(args):
    X = _group(args)
    maps = _maps(args.deltas, X, "--deltas")
    v = heyde_condition(maps, X)
    return {"claim": "heyde-condition", "pass": v.ok, "verdict": "holds" if v.ok else "fails",
            "witnesses": [] if v.ok else [{"i": v.witness[0], "j": v.witness[1], "sign": v.witness[2]}]}


def cmd_adjoint(args):
    X = _group(args)
    h = homomorphism_from_json(X, _load(args.map, "--map"), "--map")
    return {"claim": "adjoint", "pass": True, "verdict": "computed", "adjoint": adjoint(h)}


def cmd_charfn(args):
    X = _group(args)
    f = _charfn_arg(args, X)
    Y = X.dual()
    if args.at:
        pts = [element_from_json(Y, p, f"--at[{i}]") for i, p in enumerate(_load(args.at, "--at"))]
    else:
        pts = _window(args).points(Y)
    return {"claim": "charfn", "pass": True, "verdict": "computed",
            "values": [{"y": y, "value": f.value(y)} for y in pts]}


def cmd_pd(args):
    X = _group(args)
    f = _charfn_arg(args, X)
    cert = positive_definiteness(f, Window(args.N, args.M), grid=args.grid, tol=args.tol)
    out = {"claim": "bochner", "pass": cert.passed,
           "verdict": "positive-definite" if cert.passed else "not-positive-definite"}
    out.update(cert.as_dict())
    if cert.masses:
        out["masses"] = [{"x": x, "mass": m} for x, m in cert.masses.items()]
    return out


def cmd_gaussian(args):
    X = _group(args)
    return _cert_report(ch.gaussianity_check(_charfn_arg(args, X), _window(args), args.tol))


def cmd_gamma_i(args):
    X = _group(args)
    return _cert_report(ch.gamma_i_membership(_charfn_arg(args, X), _window(args), args.tol))


def cmd_qdefect(args):
    X = _group(args)
    w = _window(args)
    if args.setting == "vector":
        n = args.n
        joint = distribution_from_json(X.power(n), _load(args.joint, "--joint"), "--joint")
        margs = _dist_list(args.marginals, X, "--marginals") if args.marginals else None
        return _qreport(ch.qdefect_vector(joint, margs, w, args.tol))
    if args.setting == "forms":
        margs = _dist_list(args.marginals, X, "--marginals")
        return _qreport(ch.qdefect_linear_forms(margs, _int_list(args.a, "--a"),
                                                _int_list(args.b, "--b"), w, args.tol))
    if args.setting == "symmetry":
        margs = _dist_list(args.marginals, X, "--marginals")
        return _qreport(ch.qdefect_conditional_symmetry(
            margs, _maps(args.alpha, X, "--alpha"), _maps(args.beta, X, "--beta"), w, args.tol))
    return _qreport(ch.qdefect_sumdiff(_charfn_arg(args, X), w, args.tol))


def cmd_quartic(args):
    f, cert = ch.quartic_counterexample(rational(args.a, "--a"), rational(args.b, "--b"),
                                        pd_window=Window(args.N), defect_window=Window(args.W),
                                        gauss_window=Window(max(args.W, 8)))
    out = cert.to_json()
    out["charfn"] = to_jsonable(f)
    return out


def cmd_lift(args):
    X = _group(args, CIRCLE)
    K = subgroup_from_json(X, _load(args.subgroup, "--subgroup"), "--subgroup")
    if args.dist or args.charfn:
        # the quotient X/K is described by its own group descriptor
        Q = group_from_json(_load(args.quotient, "--quotient"), "--quotient") if args.quotient else X
        f = _charfn_arg(args, Q)
    else:
        f = ch.quartic_charfn(rational(args.a, "--a"), rational(args.b, "--b"))
    h, cert = ch.annihilator_lift(f, K, Window(args.N))
    subs = [cert]
    m = cert.details["index"]
    try:
        subs.append(ch.qdefect_sumdiff(h, Window(args.W).scaled(m), args.tol).certificate())
    except WitnessError as e:
        subs.append(ch.Certificate("qdefect-sumdiff", False, type(e).__name__,
                                   witnesses=[e.witness]))
    try:
        subs.append(ch.gamma_i_membership(h, Window(args.W).scaled(m)))
    except WitnessError as e:
        subs.append(ch.Certificate("gamma*I", False, type(e).__name__, witnesses=[e.witness]))
    cert.sub.extend(subs[1:])
    qind, member = subs[1].passed, subs[2].passed
    cert.verdict = ("gaussian-control" if member else
                    "qindep-nongaussian" if qind else "not-qindep")
    out = cert.to_json()
    out["charfn"] = to_jsonable(h)
    return out


def _gaussian_phis(sigmas):
    return [lambda y, s=s: float(s) * y.z[0] ** 2 for s in sigmas]


def cmd_cascade(args):
    Y = GroupDescriptor(1)
    sig = [rational(s, "--sigma") for s in args.sigma.split(",")]
    phis = _gaussian_phis(sig)
    Y2 = Y.power(2)
    shifts = [element_from_json(Y, v, f"--shifts[{i}]")
              for i, v in enumerate(_load(args.shifts, "--shifts"))] if args.shifts else None
    if args.mode == "sd":
        a, b = _int_list(args.a, "--a"), _int_list(args.b, "--b")
        c = 2 * sum(s * x * y for s, x, y in zip(sig, a, b))
        q = PolynomialFn(Y2, {(1, 1): c})
        mode = SkitovichDarmois(tuple(a), tuple(b))
    else:
        d = _int_list(args.deltas, "--deltas")
        c = 4 * sum(s * x for s, x in zip(sig, d))
        q = PolynomialFn(Y2, {(1, 1): c})
        mode = Heyde(tuple(d))
    trace = elimination_cascade(mode, phis, q, Y, Window(args.W, args.M), shifts=shifts,
                                seed=args.seed, tol=args.tol)
    out = {"claim": f"cascade-{args.mode}", "pass": trace.passed(args.tol),
           "verdict": "replayed" if trace.passed(args.tol) else "residual-too-large",
           "q": q, "trace": trace}
    return out


def cmd_verify(args):
    theorem = args.theorem.upper()
    X = _group(args, CIRCLE if theorem == "T3" else None)
    search = None
    if args.search:
        search = verdicts.SearchSpec(radius=args.radius, denominator=args.denominator,
                                     grid=args.M, samples=args.samples, budget=args.budget)
    kw = {"window": _window(args), "seed": args.seed, "search": search}
    if args.marginals:
        kw["marginals"] = _dist_list(args.marginals, X, "--marginals")
    if theorem == "T1":
        kw.update(a=_int_list(args.a, "--a") if args.a else None,
                  b=_int_list(args.b, "--b") if args.b else None)
    elif theorem == "T2":
        kw["deltas"] = _maps(args.deltas, X, "--deltas") if args.deltas else None
    elif theorem == "T3":
        if args.subgroup:
            kw["subgroup"] = subgroup_from_json(X, _load(args.subgroup, "--subgroup"), "--subgroup")
        kw["quartic"] = (rational(args.qa, "--qa"), rational(args.qb, "--qb"))
    return verdicts.theorem_verdict(theorem, X, **kw).to_json()


# --- parser -----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, tol: float = DEFAULT_TOL):
    p.set_defaults(tol_ceiling=tol)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--expect", help="expected verdict, 'pass' or 'fail'")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=tol,
                   help=f"tolerance (may only be tightened below {tol})")
    p.add_argument("--W", type=int, default=8, help="Z window radius")
    p.add_argument("--M", type=int, default=16, help="circle grid denominator")
    p.add_argument("--N", type=int, default=16, help="terms kept in density synthesis")
    p.add_argument("--grid", type=int, default=1024, help="density grid size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcachar",
                                     description="Characterization checks on groups Z^a x T^b x F.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, **kw):
        p = sub.add_parser(name, **kw)
        _common(p)
        p.set_defaults(handler=handler)
        return p

    p = add("dual", cmd_dual)
    p.add_argument("--group", required=True)
    p = add("annihilator", cmd_annihilator)
    p.add_argument("--group", required=True)
    p.add_argument("--subgroup", required=True)
    p = add("predicates", cmd_predicates)
    p.add_argument("--group", required=True)
    p.add_argument("--prime", type=int)
    p.add_argument("--mul", type=int, help="also report image and kernel of x -> n x")
    p = add("admissible", cmd_admissible)
    p.add_argument("--group", required=True)
    p.add_argument("--coeffs", required=True)
    p = add("heyde-cond", cmd_heyde)
    p.add_argument("--group", required=True)
    p.add_argument("--deltas", required=True)
    p = add("adjoint", cmd_adjoint)
    p.add_argument("--group", required=True)
    p.add_argument("--map", required=True)
    for name, handler in (("charfn", cmd_charfn), ("pd-check", cmd_pd),
                          ("gaussian-check", cmd_gaussian), ("gamma-i-check", cmd_gamma_i)):
        p = add(name, handler)
        p.add_argument("--group", required=True, help="the group X carrying the distribution")
        p.add_argument("--dist")
        p.add_argument("--charfn", help="characteristic function on the dual of X")
        if name == "charfn":
            p.add_argument("--at", help="JSON list of dual points")

    q = sub.add_parser("qdefect").add_subparsers(dest="setting", required=True)
    for setting in ("vector", "forms", "symmetry", "sumdiff"):
        p = q.add_parser(setting)
        _common(p)
        p.set_defaults(handler=cmd_qdefect, setting=setting)
        p.add_argument("--group", required=True)
        if setting == "vector":
            p.add_argument("--joint", required=True)
            p.add_argument("--n", type=int, default=2)
            p.add_argument("--marginals")
        elif setting == "sumdiff":
            p.add_argument("--dist")
            p.add_argument("--charfn")
        else:
            p.add_argument("--marginals", required=True)
            if setting == "forms":
                p.add_argument("--a", required=True)
                p.add_argument("--b", required=True)
            else:
                p.add_argument("--alpha", required=True)
                p.add_argument("--beta", required=True)

    c = sub.add_parser("counterexample").add_subparsers(dest="family", required=True)
    p = c.add_parser("quartic")
    _common(p)
    p.set_defaults(handler=cmd_quartic, W=6)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("lift", cmd_lift)
    p.set_defaults(W=6)
    p.add_argument("--group", help="the group X (default: the circle)")
    p.add_argument("--subgroup", required=True)
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1/100")
    p.add_argument("--dist")
    p.add_argument("--charfn")
    p.add_argument("--quotient", help="group descriptor of X/K for --dist/--charfn")

    c = sub.add_parser("cascade").add_subparsers(dest="mode", required=True)
    for mode in ("sd", "heyde"):
        p = c.add_parser(mode)
        _common(p, tol=1e-8)
        p.set_defaults(handler=cmd_cascade, mode=mode, W=2)
        p.add_argument("--sigma", default="1,2", help="Gaussian parameters of phi_j = s_j y^2")
        p.add_argument("--shifts", help="JSON list of shift elements (default: seeded)")
        if mode == "sd":
            p.add_argument("--a", default="1,1")
            p.add_argument("--b", default="1,-1")
        else:
            p.add_argument("--deltas", default="1,3")

    v = sub.add_parser("verify").add_subparsers(dest="theorem", required=True)
    for theorem in ("t1", "t2", "t3"):
        p = v.add_parser(theorem)
        _common(p)
        p.set_defaults(handler=cmd_verify, theorem=theorem)
        p.add_argument("--group")
        p.add_argument("--marginals")
        p.add_argument("--search", action="store_true")
        p.add_argument("--radius", type=int, default=2)
        p.add_argument("--denominator", type=int, default=4)
        p.add_argument("--samples", type=int, default=0)
        p.add_argument("--budget", type=int, default=5_000_000)
        if theorem == "t1":
            p.add_argument("--a")
            p.add_argument("--b")
        elif theorem == "t2":
            p.add_argument("--deltas")
        else:
            p.add_argument("--subgroup")
            p.add_argument("--qa", default="1")
            p.add_argument("--qb", default="1/100")
    return parser


# --- output -----------------------------------------------------------------------


def _is_element(obj) -> bool:
    return isinstance(obj, dict) and set(obj) == {"z", "t", "f"}


def _compact(obj) -> str:
    if _is_element(obj):
        return "<" + ", ".join(str(v) for v in obj["z"] + obj["t"] + obj["f"]) + ">"
    if isinstance(obj, list) and obj and all(_is_element(v) for v in obj):
        return "(" + ", ".join(_compact(v) for v in obj) + ")"
    return obj if isinstance(obj, str) else json.dumps(obj)


def _leaf(obj) -> bool:
    if not isinstance(obj, (dict, list)) or not obj or _is_element(obj):
        return True
    return isinstance(obj, list) and all(_is_element(v) for v in obj)


def _text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if _leaf(obj):
        return [pad + _compact(obj)]
    lines = []
    items = obj.items() if isinstance(obj, dict) else (("-", v) for v in obj)
    for k, v in items:
        label = "-" if isinstance(obj, list) else f"{k}:"
        if _leaf(v):
            lines.append(f"{pad}{label} {_compact(v)}")
        else:
            lines.append(f"{pad}{label}")
            lines.extend(_text(v, indent + 1))
    return lines


def render(report: dict, fmt: str) -> str:
    data = to_jsonable(report)
    if fmt == "json":
        return json.dumps(data, indent=2, ensure_ascii=False)
    head = f"{data.get('claim', '?')}: {'PASS' if data.get('pass') else 'FAIL'} ({data.get('verdict', '')})"
    rest = {k: v for k, v in data.items() if k not in ("claim", "pass", "verdict")}
    return "\n".join([head] + _text(rest))


def _matches(report: dict, expect: str | None) -> bool:
    if expect is None:
        return True
    e = expect.lower()
    if e in ("pass", "ok", "true"):
        return bool(report.get("pass"))
    if e in ("fail", "false"):
        return not report.get("pass")
    return e == str(report.get("verdict", "")).lower()


def _error_report(claim: str, e: WitnessError) -> dict:
    return {"claim": claim, "pass": False, "verdict": type(e).__name__, "message": str(e),
            "witnesses": [] if e.witness is None else [e.witness],
            "residuals": {} if e.residual is None else {"residual": e.residual}}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    claim = args.command
    try:
        if not 0 < args.tol <= args.tol_ceiling:
            raise InputError(f"--tol must lie in (0, {args.tol_ceiling}]; tolerances may only be tightened")
        report = args.handler(args)
    except (Inconclusive, BochnerFail, TailBoundUnavailable) as e:
        print(f"inconclusive: {e}", file=err)
        cert = getattr(e, "certificate", None)
        report = {"claim": claim, "pass": False, "verdict": "inconclusive", "message": str(e)}
        if cert is not None:
            report["certificate"] = cert
        print(render(report, args.format), file=out)
        return EXIT_INCONCLUSIVE
    except WitnessError as e:
        report = _error_report(claim, e)
    except (InputError, ValueError, KeyError, TypeError) as e:
        print(f"input error: {e}", file=err)
        return EXIT_INPUT
    print(render(report, args.format), file=out)
    if not _matches(report, args.expect):
        print(f"verdict {report.get('verdict')!r} contradicts --expect {args.expect!r}", file=err)
        return EXIT_MISMATCH
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
