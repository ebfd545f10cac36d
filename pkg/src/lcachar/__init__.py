"""Characterization checks for distributions on groups Z^a x T^b x F."""

from .cascade import Heyde, SkitovichDarmois, elimination_cascade
from .characterize import (
    Certificate,
    QDefectReport,
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
from .dist import (
    Distribution,
    atomic,
    char_fn,
    convolve,
    degenerate,
    exp_poly_charfn,
    gaussian_charfn,
    haar_on_subgroup,
    inverse_transform,
    positive_definiteness,
    pushforward,
    recover_atomic,
    reflect,
)
from .groups import (
    GroupDescriptor,
    GroupElement,
    Homomorphism,
    Subgroup,
    adjoint,
    annihilator,
    heyde_condition,
    is_admissible,
    mul_map,
    pair,
    pair_angle,
    structural_predicates,
)
from .polyfd import PolynomialFn, Window, delta, fit_polynomial, polynomial_degree
from .verdicts import SearchSpec, theorem_verdict

__all__ = [n for n in dir() if not n.startswith("_")]
