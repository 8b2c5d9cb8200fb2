"""Exact symbolic feedback linearization of single-input affine systems."""

from .algebra import ParseError, Poly, RatFn, VarContext, parse_poly
from .algebroid import (
    AlgebroidContext,
    SectionClass,
    algebroid_bracket,
    anchor_I,
    anchor_II,
    check_homomorphism,
    check_jacobi,
    check_leibniz,
    crosscheck_isomorphism,
)
from .geometry import (
    KForm,
    PolyMap,
    VecField,
    compose,
    differential,
    exterior_derivative,
    integrate_exact,
    invert_triangular,
    is_integrable,
    jacobian_determinant,
    lie_bracket,
    pair,
    pullback,
    pushforward,
    wedge_21,
)
from .linearizer import (
    ControlSystem,
    OmegaHints,
    algorithm_I,
    algorithm_II,
    algorithm_II_phase1,
    algorithm_II_phase2,
    build_straightening_map,
    choose_omega,
    classical_check,
    normalize_output,
    verify_relative_degree,
)

__version__ = "0.1.0"
