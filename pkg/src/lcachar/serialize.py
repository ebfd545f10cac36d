"""JSON forms of groups, elements, maps, distributions, polynomials and reports.

Rationals are written as "p/q" strings and floats are rounded to 12
significant digits, so reports are byte-stable across runs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction

import numpy as np

from .cascade import EliminationTrace
from .dist import (
    AtomicTransform,
    CharFn,
    Distribution,
    ExpPoly,
    Product,
    SubgroupIndicator,
    ZeroExtension,
    atomic,
    exp_poly_charfn,
    spectral,
)
from .errors import InputError, PointOutsideGroup, UnsupportedSubgroupForm
from .groups import GroupDescriptor, GroupElement, Homomorphism, Subgroup
from .polyfd import PolynomialFn


def _field(data: dict, key: str, kind, path: str, default=None):
    if key not in data:
        if default is not None:
            return default
        raise InputError(f"{path}: missing field {key!r}")
    value = data[key]
    if not isinstance(value, kind):
        raise InputError(f"{path}.{key}: expected {getattr(kind, '__name__', kind)}, "
                         f"got {type(value).__name__}")
    return value


def parse_json(text: str, path: str = "$"):
    if not isinstance(text, str):
        return text
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON ({e.msg} at line {e.lineno} column {e.colno})") from None


def rational(value, path: str = "$") -> Fraction:
    try:
        return Fraction(str(value)) if not isinstance(value, Fraction) else value
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{path}: {value!r} is not a rational number") from None


# --- groups and elements ----------------------------------------------------------


def group_json(g: GroupDescriptor) -> dict:
    return {"z_rank": g.z_rank, "t_rank": g.t_rank, "finite": list(g.finite_orders)}


def group_from_json(data, path: str = "group") -> GroupDescriptor:
    data = parse_json(data, path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected an object")
    unknown = set(data) - {"z_rank", "t_rank", "finite"}
    if unknown:
        raise InputError(f"{path}: unknown field {sorted(unknown)[0]!r}")
    z = _field(data, "z_rank", int, path, 0)
    t = _field(data, "t_rank", int, path, 0)
    fin = _field(data, "finite", list, path, [])
    if z < 0 or t < 0 or any(not isinstance(n, int) or n < 2 for n in fin):
        raise InputError(f"{path}: ranks must be >= 0 and finite orders >= 2")
    return GroupDescriptor(z, t, tuple(fin))


def element_json(x: GroupElement) -> dict:
    return {"z": list(x.z), "t": [str(v) for v in x.t], "f": list(x.f)}


def element_from_json(g: GroupDescriptor, data, path: str = "element") -> GroupElement:
    data = parse_json(data, path)
    if isinstance(data, dict):
        z = _field(data, "z", list, path, [0] * g.z_rank or [])
        t = [rational(v, f"{path}.t") for v in _field(data, "t", list, path, [0] * g.t_rank or [])]
        f = _field(data, "f", list, path, [0] * len(g.finite_orders) or [])
        if len(z) != g.z_rank or len(t) != g.t_rank or len(f) != len(g.finite_orders):
            raise PointOutsideGroup(f"{path}: coordinate counts do not match {g}")
        return g.element(z, t, f)
    if isinstance(data, (int, str)) or isinstance(data, list):
        vals = data if isinstance(data, list) else [data]
        a = g.z_rank
        b = g.t_rank
        parsed = [int(v) if i < a or i >= a + b else rational(v, path) for i, v in enumerate(vals)]
        return g.coerce(parsed)
    raise InputError(f"{path}: cannot read an element from {data!r}")


# --- subgroups and homomorphisms ----------------------------------------------------


def subgroup_json(K: Subgroup) -> dict:
    if K.kind == "product":
        return {"kind": "product", "z_mods": list(K.z_mods), "t_orders": list(K.t_orders),
                "f_steps": list(K.f_steps)}
    if K.kind == "generated":
        return {"kind": "generated", "generators": [element_json(x) for x in K.generators]}
    return {"kind": "annihilator", "base": subgroup_json(K.base)}


def subgroup_from_json(g: GroupDescriptor, data, path: str = "subgroup") -> Subgroup:
    """Accepts product data, generator lists or the tags ``whole``, ``trivial``,
    ``multiples`` (axis, m) and ``torus_cyclic`` (axis, m)."""
    if data not in ("whole", "trivial"):
        data = parse_json(data, path)
    if isinstance(data, str):
        data = {"tag": data}
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected an object")
    tag = data.get("tag") or data.get("kind")
    if tag == "whole":
        return Subgroup.whole(g)
    if tag == "trivial":
        return Subgroup.trivial(g)
    if tag in ("multiples", "torus_cyclic"):
        axis = _field(data, "axis", int, path, 0)
        m = _field(data, "m", int, path)
        return getattr(Subgroup, tag)(g, axis, m)
    if tag == "product":
        return Subgroup.product(g, data.get("z_mods"), data.get("t_orders"), data.get("f_steps"))
    if tag == "generated" or "generators" in data:
        gens = _field(data, "generators", list, path)
        return Subgroup.generated(g, [element_from_json(g, x, f"{path}.generators[{i}]")
                                      for i, x in enumerate(gens)])
    raise UnsupportedSubgroupForm(f"{path}: unknown subgroup form {tag!r}")


def homomorphism_json(h: Homomorphism) -> dict:
    out = {"domain": group_json(h.domain), "codomain": group_json(h.codomain)}
    for name in ("zz", "zt", "zf", "tt", "ft", "ff"):
        out[name] = [[str(v) if isinstance(v, Fraction) else v for v in row]
                     for row in getattr(h, name)]
    return out


def homomorphism_from_json(g: GroupDescriptor, data, path: str = "map") -> Homomorphism:
    """An integer means multiplication by it; otherwise block matrices."""
    data = parse_json(data, path)
    if isinstance(data, int):
        return Homomorphism.scalar(g, data)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected an integer or block matrices")
    dom = group_from_json(data["domain"], f"{path}.domain") if "domain" in data else g
    cod = group_from_json(data["codomain"], f"{path}.codomain") if "codomain" in data else dom
    blocks = {}
    for name in ("zz", "zt", "zf", "tt", "ft", "ff"):
        if name in data:
            rows = data[name]
            if name in ("zt", "ft"):
                rows = [[rational(v, f"{path}.{name}") for v in r] for r in rows]
            blocks[name] = rows
    try:
        return Homomorphism(dom, cod, **blocks)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None


# --- polynomials, distributions, char fns -------------------------------------------------


def polynomial_json(p: PolynomialFn) -> dict:
    out = {}
    for k, c in p.to_json().items():
        v = p.coeffs[tuple(int(e) for e in k.strip("()").split(",") if e)]
        out[k] = str(round12(v)) if isinstance(v, float) else c
    return out


def polynomial_from_json(g: GroupDescriptor, data, path: str = "phi") -> PolynomialFn:
    data = parse_json(data, path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a coefficient map")
    try:
        return PolynomialFn.from_json(g, data)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from None


def distribution_json(d: Distribution) -> dict:
    if d.is_atomic:
        return {"atoms": [{"point": element_json(x), "weight": str(w)} for x, w in d.atoms]}
    return {"spectral": charfn_json(d.spectral)}


def charfn_json(f: CharFn) -> dict:
    if isinstance(f, ExpPoly):
        return {"type": "exp-poly", "phi": polynomial_json(f.phi), "shift": element_json(f.shift)}
    if isinstance(f, SubgroupIndicator):
        return {"type": "indicator", "subgroup": subgroup_json(f.subgroup)}
    if isinstance(f, ZeroExtension):
        return {"type": "zero-extension", "subgroup": subgroup_json(f.subgroup),
                "inner": charfn_json(f.inner)}
    if isinstance(f, Product):
        return {"type": "product", "factors": [charfn_json(g) for g in f.factors]}
    if isinstance(f, AtomicTransform):
        return {"type": "atomic", "distribution": distribution_json(f.dist)}
    return {"type": type(f).__name__}


def distribution_from_json(X: GroupDescriptor, data, path: str = "distribution") -> Distribution:
    data = parse_json(data, path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected an object")
    if "atoms" in data:
        atoms = _field(data, "atoms", list, path)
        pts, ws = [], []
        for i, a in enumerate(atoms):
            p = f"{path}.atoms[{i}]"
            if not isinstance(a, dict):
                raise InputError(f"{p}: expected an object")
            pts.append(element_from_json(X, _field(a, "point", (dict, list, int), p), f"{p}.point"))
            ws.append(rational(_field(a, "weight", (str, int), p), f"{p}.weight"))
        return atomic(pts, ws, X)
    if "spectral" in data:
        return spectral(charfn_from_json(X.dual(), data["spectral"], f"{path}.spectral"))
    raise InputError(f"{path}: expected 'atoms' or 'spectral'")


def charfn_from_json(Y: GroupDescriptor, data, path: str = "charfn") -> CharFn:
    data = parse_json(data, path)
    kind = _field(data, "type", str, path)
    if kind == "exp-poly":
        X = Y.dual()
        shift = element_from_json(X, data["shift"], f"{path}.shift") if "shift" in data else X.zero()
        return exp_poly_charfn(shift, polynomial_from_json(Y, _field(data, "phi", dict, path),
                                                           f"{path}.phi"))
    if kind == "indicator":
        return SubgroupIndicator(subgroup_from_json(Y, data["subgroup"], f"{path}.subgroup"))
    if kind == "atomic":
        return AtomicTransform(distribution_from_json(Y.dual(), data["distribution"],
                                                      f"{path}.distribution"))
    if kind == "product":
        return Product(tuple(charfn_from_json(Y, f, f"{path}.factors[{i}]")
                             for i, f in enumerate(_field(data, "factors", list, path))))
    raise InputError(f"{path}: unknown characteristic function type {kind!r}")


# --- generic conversion ---------------------------------------------------------------


def round12(x: float):
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return float(f"{x:.12g}") + 0.0


def to_jsonable(obj):
    """Recursive conversion with fixed formatting rules."""
    from .characterize import Certificate, QDefectReport

    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        return round12(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        if abs(c.imag) <= 1e-15 * max(1.0, abs(c.real)):
            return round12(c.real)
        return {"re": round12(c.real), "im": round12(c.imag)}
    if isinstance(obj, GroupElement):
        return element_json(obj)
    if isinstance(obj, GroupDescriptor):
        return group_json(obj)
    if isinstance(obj, Subgroup):
        return subgroup_json(obj)
    if isinstance(obj, Homomorphism):
        return homomorphism_json(obj)
    if isinstance(obj, PolynomialFn):
        return polynomial_json(obj)
    if isinstance(obj, Distribution):
        return distribution_json(obj)
    if isinstance(obj, CharFn):
        return charfn_json(obj)
    if isinstance(obj, Certificate):
        return certificate_json(obj)
    if isinstance(obj, QDefectReport):
        return qdefect_json(obj)
    if isinstance(obj, EliminationTrace):
        return trace_json(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    return str(obj)


def certificate_json(c) -> dict:
    return {
        "claim": c.claim,
        "pass": bool(c.passed),
        "verdict": c.verdict,
        "witnesses": to_jsonable(c.witnesses),
        "fitted_q": to_jsonable(c.fitted_q),
        "residuals": to_jsonable(c.margins),
        "details": to_jsonable(c.details),
        "sub_certificates": [certificate_json(s) for s in c.sub],
    }


def qdefect_json(r) -> dict:
    return {
        "setting": r.setting,
        "verdict": r.verdict,
        "fitted_q": to_jsonable(r.q),
        "residual": to_jsonable(r.residual),
        "degree": r.degree,
        "witness": to_jsonable(r.witness),
        "details": to_jsonable(r.details),
    }


def trace_json(t: EliminationTrace) -> dict:
    return {
        "mode": t.mode,
        "degree_l": t.degree_l,
        "base_residual": round12(t.base_residual),
        "steps": [{"index": s.index, "name": s.name,
                   "shift": {"u": element_json(s.shift[0]), "v": element_json(s.shift[1])},
                   "eliminated": s.eliminated, "surviving": to_jsonable(s.surviving),
                   "residual": round12(s.residual)} for s in t.steps],
        "terminal_residual": round12(t.terminal_residual),
        "conclusion": t.conclusion,
        "conclusion_residual": round12(t.conclusion_residual),
        "pass": t.passed(),
    }


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False)
