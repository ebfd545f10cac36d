from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcachar.characterize import (
    NOT_QINDEP,
    PLAIN,
    QINDEP,
    annihilator_lift,
    gamma_i_membership,
    gaussianity_check,
    qdefect_conditional_symmetry,
    qdefect_linear_forms,
    qdefect_sumdiff,
    qdefect_vector,
    quartic_charfn,
    quartic_counterexample,
)
from lcachar.dist import (
    atomic,
    char_fn,
    convolve,
    exp_poly_charfn,
    gaussian_charfn,
    haar_on_subgroup,
    spectral,
)
from lcachar.errors import CaseMismatch, NotAnAutomorphism, SupportNotSubgroup
from lcachar.groups import GroupDescriptor, Subgroup, join
from lcachar.polyfd import PolynomialFn, Window

Z = GroupDescriptor(1)
T = GroupDescriptor(0, 1)
T2 = GroupDescriptor(0, 2)
Z6 = GroupDescriptor(0, 0, (6,))


def quartic_phi(a, b, n):
    return a * n * n + b * n ** 4


@pytest.mark.parametrize("sigma", [0, Fraction(3, 10), 1, 5])
def test_gaussians_pass(sigma):
    assert gaussianity_check(gaussian_charfn(sigma)).passed


def test_shifted_gaussian_passes():
    f = exp_poly_charfn(T.coerce([Fraction(1, 3)]), PolynomialFn(Z, {(2,): Fraction(1, 2)}))
    assert gaussianity_check(f).passed


@pytest.mark.parametrize("b", [Fraction(1, 100), Fraction(1, 7), 2])
def test_quartic_fails_with_first_witness(b):
    cert = gaussianity_check(quartic_charfn(1, b))
    assert not cert.passed
    assert cert.witnesses == [(Z.coerce(1), Z.coerce(1))]
    # parallelogram defect at (1, 1): phi(2) + phi(0) - 4 phi(1) = 12 b
    direct = quartic_phi(1, b, 2) - 4 * quartic_phi(1, b, 1)
    assert abs(cert.details["witness_residual"] - float(direct)) < 1e-9
    assert abs(float(direct) - 12 * float(b)) < 1e-12


def test_negative_phi_is_not_gaussian():
    f = exp_poly_charfn(T.zero(), PolynomialFn(Z, {(2,): -1}))
    assert not gaussianity_check(f).passed


def test_gamma_i_members_and_errors():
    K = Subgroup.generated(Z6, [Z6.coerce(2)])
    assert gamma_i_membership(haar_on_subgroup(K)).passed
    shifted = atomic([1, 3, 5], ["1/3"] * 3, Z6)
    assert gamma_i_membership(shifted).passed
    assert gamma_i_membership(gaussian_charfn(1)).passed
    assert not gamma_i_membership(quartic_charfn(1, Fraction(1, 100))).passed
    with pytest.raises(SupportNotSubgroup):
        gamma_i_membership(atomic([0, 1], ["1/2", "1/2"], Z6))


def test_qdefect_vector_gaussian_pair():
    # joint exp(-(u^2 + v^2 + uv/10)) on T^2; marginals exp(-u^2), exp(-v^2)
    Y2 = T2.dual()
    joint = spectral(exp_poly_charfn(T2.zero(), PolynomialFn(Y2, {(2, 0): 1, (0, 2): 1,
                                                                 (1, 1): Fraction(1, 10)})))
    rep = qdefect_vector(joint)
    assert rep.verdict == QINDEP
    assert abs(rep.q.coeff(1, 1) + 0.1) < 1e-9 and rep.residual < 1e-9


def test_qdefect_vector_compact_dual():
    X2 = Z6.power(2)
    mu = atomic([0, 3], ["1/2", "1/2"], Z6)
    nu = atomic([1, 2, 5], ["1/4", "1/4", "1/2"], Z6)
    prod = atomic([join((x, y)) for x, _ in mu.atoms for y, _ in nu.atoms],
                  [a * b for _, a in mu.atoms for _, b in nu.atoms], X2)
    assert qdefect_vector(prod).verdict == PLAIN
    diag = atomic([[0, 0], [1, 1]], ["1/2", "1/2"], X2)
    rep = qdefect_vector(diag)
    assert rep.verdict == NOT_QINDEP and rep.witness is not None


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=0, max_value=3, max_denominator=10),
       st.fractions(min_value=0, max_value=3, max_denominator=10),
       st.lists(st.sampled_from([-2, -1, 1, 2, 3]), min_size=4, max_size=4))
def test_linear_forms_gaussian_closed_form(s1, s2, coeffs):
    a, b = coeffs[:2], coeffs[2:]
    rep = qdefect_linear_forms([gaussian_charfn(s1), gaussian_charfn(s2)], a, b)
    assert rep.q_independent
    expected = -2 * float(s1 * a[0] * b[0] + s2 * a[1] * b[1])
    got = rep.q.coeff(1, 1) if rep.q is not None else 0.0
    assert abs(got - expected) < 1e-9


@pytest.mark.parametrize("n", [5, 6, 7, 8])
def test_linear_forms_uniform_against_enumeration(n):
    # oracle: enumerate (X1 + X2, X1 - X2) for independent uniforms and compare
    # the joint law with the product of its marginals
    g = GroupDescriptor(0, 0, (n,))
    U = atomic(list(range(n)), [Fraction(1, n)] * n, g)
    joint = {}
    for x1 in range(n):
        for x2 in range(n):
            key = ((x1 + x2) % n, (x1 - x2) % n)
            joint[key] = joint.get(key, 0) + Fraction(1, n * n)
    factorizes = all(joint.get((i, j), 0) == Fraction(1, n * n) for i in range(n) for j in range(n))
    rep = qdefect_linear_forms([U, U], [1, 1], [1, -1])
    assert (rep.verdict == PLAIN) == factorizes == (n % 2 == 1)
    if not factorizes:
        assert rep.witness == g.power(2).coerce([n // 2, n // 2])


def test_conditional_symmetry():
    f1, f2 = gaussian_charfn(1), gaussian_charfn(2)
    rep = qdefect_conditional_symmetry([f1, f2], [1, 1], [1, -1])
    assert rep.q_independent
    with pytest.raises(NotAnAutomorphism):
        qdefect_conditional_symmetry([f1, f2], [2, 1], [1, -1])


def test_sumdiff_quartic_closed_form():
    for b in (Fraction(1, 100), Fraction(1, 3)):
        rep = qdefect_sumdiff(quartic_charfn(1, b))
        assert rep.verdict == QINDEP
        assert abs(rep.q.coeff(2, 2) + 12 * float(b)) < 1e-9
        assert set(rep.q.coeffs) == {(2, 2)}


def test_sumdiff_large_defect_no_underflow():
    # phi = n^4 drives f(6) far below float range; logs must still work
    rep = qdefect_sumdiff(quartic_charfn(0, 1))
    assert abs(rep.q.coeff(2, 2) + 12) < 1e-9


def test_quartic_counterexample_certificate():
    f, cert = quartic_counterexample(1, Fraction(1, 100))
    assert f.certified and cert.passed and cert.verdict == "qindep-nongaussian"
    assert [c.claim for c in cert.sub] == ["bochner", "qdefect-sumdiff", "gaussian", "gamma*I"]
    assert cert.find("bochner").margins["margin"] > 0.25
    _, control = quartic_counterexample(1, 0)
    assert control.verdict == "gaussian-control"


def test_lift_corwin_gate():
    b = Fraction(1, 100)
    h, cert = annihilator_lift(quartic_charfn(1, b), Subgroup.torus_cyclic(T, 0, 3), Window(18))
    assert cert.passed and cert.details["k_is_corwin"]
    # h(3n) = f(n) and zero off 3Z
    assert h(Z.coerce(1)) == 0
    assert abs(h(Z.coerce(6)) - np.exp(-float(quartic_phi(1, b, 2)))) < 1e-15
    rep = qdefect_sumdiff(h, Window(18))
    assert abs(rep.q.coeff(2, 2) + 12 * float(b) / 81) < 1e-9
    h2, _ = annihilator_lift(quartic_charfn(1, b), Subgroup.torus_cyclic(T, 0, 2), Window(12))
    with pytest.raises(CaseMismatch) as e:
        qdefect_sumdiff(h2, Window(12))
    assert e.value.witness == Z.power(2).coerce([1, 1])


def test_point_masses_are_gaussian():
    mu = convolve(atomic([Fraction(1, 4)], [1], T), atomic([Fraction(1, 2)], [1], T))
    assert gaussianity_check(char_fn(mu)).passed
    assert gamma_i_membership(mu).passed


def test_generic_marginals_on_z5_are_not_qindependent():
    Z5 = GroupDescriptor(0, 0, (5,))
    m1 = atomic([0, 1], ["2/3", "1/3"], Z5)
    m2 = atomic([0, 2], ["3/4", "1/4"], Z5)
    rep = qdefect_linear_forms([m1, m2], [1, 1], [1, 2])
    assert rep.verdict == NOT_QINDEP and rep.witness is not None


def test_conditional_symmetry_single_gaussian():
    # log f(u + v) - log f(u - v) = -s[(u + v)^2 - (u - v)^2] = -4 s uv
    rep = qdefect_conditional_symmetry([gaussian_charfn(Fraction(3, 2))], [1], [1])
    assert abs(rep.q.coeff(1, 1) + 6) < 1e-9
