"""Theta-scheme finite difference solver for the viscous Burgers equation
with nonlinear Neumann boundary feedback control."""

from .analysis import (ControllerRow, ConvergenceRow, StudyPlan, TruncationRow,
                       controller_error, run_study, spatial_self_error,
                       temporal_self_error, truncation_errors,
                       truncation_study)
from .cli import ConfigError, RunConfig, parse_config
from .grid import (GridSpec, InitialCondition, ModelParams, StateField,
                   make_grid, sample_initial)
from .operators import (BoundaryControllerEval, NormReport, dx2_boundary,
                        dx2_interior, dx_backward, dx_central, dx_forward,
                        evaluate_controllers, feedback_flux_left,
                        feedback_flux_left_deriv, feedback_flux_right,
                        feedback_flux_right_deriv, initial_energy_proxy,
                        inner_h, inner_l2, nonlinear_term,
                        nonlinear_term_field, norms, theta_combine)
from .stability import (BoundVerdict, DecayFit, InsufficientDataError,
                        StabilityBounds, alpha_admissible, beta_star,
                        check_step, decay_exponent_bound,
                        feasible_decay_exponent, fit_decay, stability_bounds,
                        timestep_limits)
from .stepper import (BlowUpError, NewtonStats, NonConvergenceError,
                      RunTrajectory, SingularTridiagonalError, Tridiagonal,
                      explicit_step, jacobian, newton_step, residual, run,
                      thomas_solve)

__version__ = "0.1.0"
