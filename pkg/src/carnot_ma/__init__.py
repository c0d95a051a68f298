"""Subelliptic Monge-Ampere equations along Carnot-type vector fields.

The package evaluates, verifies and numerically solves Dirichlet problems

    -det(hess_X u) + H(x, u, grad_X u) = 0 in Omega,   u = g on the boundary,

for families X_1..X_m of Carnot-type vector fields on R^n: horizontal
calculus (exact and finite-difference jets), convexity certification,
explicit Heisenberg-group solutions as ground-truth oracles, strict
subsolution and barrier constructions, and a monotone wide-stencil grid
solver realizing the supremum-of-subsolutions construction as a nondecreasing
fixed-point iteration.
"""

__version__ = "0.1.0"

from .calculus import (EuclideanJet2, HorizontalJet,
                       directional_second_difference, horizontal_jet_exact,
                       horizontal_jet_fd)
from .constructions import (BarrierParams, PerturbParams,
                            explicit_heisenberg_oracle, lower_barrier,
                            perturb_to_strict, upper_barrier, xsquare_check)
from .convexity import (check_x_convex, horizontal_gradient_bound,
                        x_convexity_of_norm_check)
from .domains import DomainSpec, euclidean_ball, koranyi_ball
from .errors import (CarnotMAError, ConfigError, ConstructionError,
                     DimensionMismatchError, DomainError, ExpressionError,
                     PerronEmptyError, UnsupportedFamilyError)
from .fields import (FieldFamily, carnot_type_family, euclidean,
                     general_family, heisenberg, q_matrix, sigma,
                     validate_carnot_type)
from .functions import ClosedFormFunction, PolynomialFunction, \
    constant_function
from .grids import (Grid, GridFunction, build_grid,
                    grid_function_from_callable, read_csv, write_csv)
from .harness import SUITE_NAMES, SuiteResult, run_suite, run_suites
from .operators import (Hamiltonian, detroot_min_representation,
                        gauss_curvature, growth_check,
                        lipschitz_root_check, logdet_min_representation,
                        ma_residual, matrix_inequality_suite)
from .solver import (SolveReport, characteristic_points, comparison_check,
                     default_subsolution, scheme_residual, solve,
                     solve_dirichlet)

__all__ = [
    "__version__",
    # fields
    "FieldFamily", "carnot_type_family", "general_family", "euclidean",
    "heisenberg", "sigma", "q_matrix", "validate_carnot_type",
    # calculus
    "EuclideanJet2", "HorizontalJet", "horizontal_jet_exact",
    "horizontal_jet_fd", "directional_second_difference",
    # functions / domains
    "ClosedFormFunction", "PolynomialFunction", "constant_function",
    "DomainSpec", "koranyi_ball", "euclidean_ball",
    # operators
    "Hamiltonian", "ma_residual", "gauss_curvature",
    "detroot_min_representation", "logdet_min_representation",
    "matrix_inequality_suite", "growth_check", "lipschitz_root_check",
    # convexity
    "check_x_convex", "x_convexity_of_norm_check",
    "horizontal_gradient_bound",
    # constructions
    "explicit_heisenberg_oracle", "perturb_to_strict", "lower_barrier",
    "upper_barrier", "xsquare_check", "PerturbParams", "BarrierParams",
    # grids / solver
    "Grid", "GridFunction", "build_grid", "grid_function_from_callable",
    "write_csv", "read_csv", "solve", "solve_dirichlet", "SolveReport",
    "scheme_residual", "default_subsolution", "characteristic_points",
    "comparison_check",
    # harness
    "SUITE_NAMES", "SuiteResult", "run_suite", "run_suites",
    # errors
    "CarnotMAError", "DimensionMismatchError", "DomainError",
    "UnsupportedFamilyError", "ConstructionError", "PerronEmptyError",
    "ConfigError", "ExpressionError",
]
