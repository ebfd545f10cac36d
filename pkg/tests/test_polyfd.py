import cmath
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcachar.errors import NotPolynomial, ResidualTooLarge, VanishingValue, WindowTooSmall
from lcachar.groups import GroupDescriptor
from lcachar.polyfd import (
    LatticeFunction,
    PolynomialFn,
    Window,
    branch_log,
    delta,
    fit_polynomial,
    iterated_delta,
    polynomial_degree,
    z_unit,
)

Z = GroupDescriptor(1)
Z2 = GroupDescriptor(2)
ZxZ3 = GroupDescriptor(1, 0, (3,))


def tabulate(g, fn, window=Window(8)):
    return LatticeFunction.from_callable(g, window, fn)


def eval_monomials(coeffs, z):
    # independent evaluation: plain sum of c * prod(z_i^k_i)
    return sum(c * math.prod(v ** k for v, k in zip(z, key)) for key, c in coeffs.items())


small = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def poly_coeffs(draw, rank, max_degree=4):
    d = draw(st.integers(0, max_degree))
    keys = [k for k in itertools.product(range(d + 1), repeat=rank) if sum(k) <= d]
    coeffs = {k: draw(small) for k in keys}
    top = [k for k in keys if sum(k) == d]
    coeffs[top[0]] = draw(small.filter(lambda c: c != 0))
    return d, coeffs


@settings(max_examples=40, deadline=None)
@given(poly_coeffs(2))
def test_degree_and_fit_recover_random_polynomial(data):
    d, coeffs = data
    f = tabulate(Z2, lambda y: float(eval_monomials(coeffs, y.z)), Window(6))
    assert polynomial_degree(f, d_max=5) == d
    p, res = fit_polynomial(f, d)
    assert res < 1e-9
    for k, c in coeffs.items():
        assert abs(p.coeff(*k) - float(c)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(poly_coeffs(1, 5), st.integers(-3, 3).filter(bool))
def test_difference_lowers_degree(data, h):
    d, coeffs = data
    f = tabulate(Z, lambda y: float(eval_monomials(coeffs, y.z)), Window(12))
    g = delta(Z.coerce(h), f)
    expected = max(d - 1, 0)
    assert polynomial_degree(g, d_max=6) == expected
    # oracle: the difference matches direct evaluation
    for y in g.points[:5]:
        direct = eval_monomials(coeffs, (y.z[0] + h,)) - eval_monomials(coeffs, y.z)
        assert abs(g(y) - float(direct)) < 1e-8


def test_iterated_delta_kills_degree_plus_one():
    f = tabulate(Z, lambda y: y.z[0] ** 3 - 2.0 * y.z[0], Window(10))
    shifts = [Z.coerce(1), Z.coerce(2), Z.coerce(-1), Z.coerce(3)]
    assert iterated_delta(shifts, f).max_abs() < 1e-9
    assert iterated_delta(shifts[:3], f).max_abs() > 1


def test_non_polynomial_raises_with_witness():
    f = tabulate(Z, lambda y: math.exp(y.z[0] / 3), Window(12))
    with pytest.raises(NotPolynomial) as e:
        polynomial_degree(f, d_max=4)
    assert e.value.witness is not None and e.value.residual > 0


def test_window_too_small():
    f = tabulate(Z, lambda y: float(y.z[0]), Window(2))
    with pytest.raises(WindowTooSmall):
        polynomial_degree(f, d_max=8)


def test_compact_axis_must_be_constant():
    ok = tabulate(ZxZ3, lambda y: float(y.z[0] ** 2), Window(6))
    assert polynomial_degree(ok, d_max=3) == 2
    bad = tabulate(ZxZ3, lambda y: float(y.z[0] + y.f[0]), Window(6))
    with pytest.raises(NotPolynomial):
        polynomial_degree(bad, d_max=3)


def test_fit_reports_residual():
    f = tabulate(Z, lambda y: float(y.z[0] ** 3), Window(6))
    with pytest.raises(ResidualTooLarge) as e:
        fit_polynomial(f, 2)
    assert e.value.residual > 1 and e.value.fit is not None


def test_branch_log_unwraps_phase():
    # phase grows past pi, the log must stay continuous
    f = tabulate(Z, lambda y: cmath.exp(0.7j * y.z[0] - 0.01 * y.z[0] ** 2), Window(10))
    L = branch_log(f)
    for y in L.points:
        n = y.z[0]
        assert abs(L(y) - (0.7j * n - 0.01 * n * n)) < 1e-9


def test_branch_log_vanishing():
    f = tabulate(Z, lambda y: 0.0 if y.z[0] == 3 else 1.0, Window(4))
    with pytest.raises(VanishingValue) as e:
        branch_log(f)
    assert e.value.witness == Z.coerce(3)


def test_polynomial_json_round_trip():
    p = PolynomialFn(Z2, {(2, 0): Fraction(1, 3), (1, 1): -2, (0, 0): 0})
    q = PolynomialFn.from_json(Z2, p.to_json())
    assert q.coeffs == p.coeffs
    assert p(Z2.coerce([3, 1])) == Fraction(3) - 6
    assert p.degree == 2


def test_z_unit():
    assert z_unit(Z2, 1, 3) == Z2.coerce([0, 3])
