"""posflow: outflow positivity limiting for 1D DG conservation-law solvers,
and the interior-weight table engine behind it."""

from .geometry import CanonicalCell, CellKind, FaceSet, QuadratureRule, \
    gauss_legendre, gauss_lobatto
from .polyspace import (PolySpace, Polynomial, SpaceKind, boundary_average,
                        boundary_crowding, boundary_face_average,
                        cell_average, evaluate, project)
from .positivity import (DampingResult, DesingMap, PositivityKind,
                         PressureMethod, StatePositivitySet, damping_affine,
                         damping_pressure, desingularize_velocity,
                         limit_pointwise, limit_retentional,
                         quick_positivity_check)
from .riemann import (FluxModel, ModelKind, SignalBounds, exact_riemann_flux,
                      hll_flux, llf_flux, physical_flux, signal_bounds,
                      speed_cap_at_node)
from .sampling import sample_lower_bound
from .solver import (BoundaryCondition, DGField, Mesh1D, Operators,
                     PositivityError, RunResult, SolverOptions,
                     StepDiagnostics, TimeStepCollapse, algorithm1_step,
                     algorithm2_step, dt_pos, dt_stable, dt_zero,
                     positivity_set_for, project_initial_condition, run,
                     semidiscrete_rhs, ssp_rk)
from .weights import (Provenance, RetentionalPoints, WeightBracket,
                      box_lower_bound, cubic_simplex_weight, interval_weight,
                      quadratic_star_weight, retentional_points,
                      simplex_lower_bound, sphere_weight, star_weight,
                      tabulated_weight, weight_table)

__version__ = "0.1.0"
