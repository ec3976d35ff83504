"""Parameter-free Halpern iterations for monotone inclusions and variational inequalities."""

from .core import (GapEvaluationError, NonFiniteError, OracleCounter, SolverReport,
                   TraceRecord, check_halpern_step_conditions, inner, norm, restricted_gap)
from .halpern import (cocoercivity_condition, halpern_cocoercive_solve,
                      halpern_constrained_solve, lambda_update, potential_value,
                      potential_weights, simple_residual_variant)
from .inexact import (InexactnessBudget, halpern_lipschitz_solve, restart_solve,
                      scaled_resolvent_option)
from .operators import (Operator, OperatorMetadata, affine_operator, bilinear_saddle,
                        identity_operator, quadratic_saddle, regularize,
                        resolvent_target_operator, saddle_operator, scale,
                        verify_cocoercive, zero_operator)
from .resolvent import (ResolventCertificate, approx_resolvent, displacement, eg_prox_step,
                        eg_solve, exact_displacement_affine, exact_resolvent_affine)
from .sets import (Ball, Box, FeasibleSet, Orthant, Simplex, WholeSpace, operator_mapping,
                   project_ball, project_box, project_simplex)

__version__ = "0.1.0"
