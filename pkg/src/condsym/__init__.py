"""Conditional-symmetry toolkit for the wave equation in conic variables.

The equation u_tt - u_xx = F becomes u_yz = f under y = (t+x)/2,
z = (t-x)/2 (this normalization carries no scale factor).  The package
classifies side conditions Qu = 0 whose determining equations make f
reducible, synthesizes such right-hand sides from a generating function
T(y, z), reduces the PDE to phi'' = -Phi(omega, phi), and certifies lifted
solutions u = sigma(y, z) * phi(omega(y, z)) numerically.
"""

from .expr import (
    BinOp, DEFAULT_VARIABLES, EvalDomainError, Expr, ExprError, FUNCTION_NAMES,
    Num, Unary, UnboundVariableError, Var, add, as_expr, compile_fn, cos,
    differentiate, div, evaluate, evaluate_with_scale, exp, free_variables,
    log, mul, neg, num, pow_, rename_variables, simplify, sin, sqrt, sub,
    substitute, to_string, var,
)
from .parser import ExprSyntaxError, UnknownIdentifierError, parse
from .sampling import DEFAULT_SPEC, SamplingSpec, ZeroVerdict, is_zero, sample_values
from .detsys import (
    Case, Case1Pair, DegenerateKError, DegenerateLError, DetsysError,
    NamedResidual, NormalizationError, NormalizedOperator, QOperator,
    ZeroOperatorError, case1_pair, case22_check, check_residuals,
    normalize_operator, residuals_case1, residuals_case2, swap_yz,
)
from .reduction import (
    CatalogFamily, CatalogMissError, CharacteristicEscapeError,
    DegenerateTError, InconsistentInvariantError, NumericInvariant,
    Reduction, ReducedODE, ReductionError, SigmaSignError, build_reduction,
    catalog_families, derive_k_s, invariant_omega, phi_only_criterion,
    reduced_ode, reduction_identity_residual, sigma_from, synthesize_f,
    synthesize_reduction,
)
from .numerics import (
    BlowUpError, Grid, NumericsError, PhiSolution, Report, ResidualEntry,
    SolutionField, SpanExceededError, lift_solution, mixed_residual,
    solve_reduced_ode, to_conic, to_physical, transform_rhs,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
