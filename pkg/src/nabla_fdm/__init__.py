"""Nabla fractional calculus, rational (vector-fitted) approximation of
fractional operators, and frequency-distributed simulation of nabla
fractional-order systems."""

from .errors import *  # noqa: F401,F403
from .nabla_calc import backward_diff, caputo_diff, exact_solve, frac_sum, gl_weights
from .nlt import ContourSpec, TransformFn, inlt_contour, inlt_limit, inlt_series, nlt_eval, transform_of
from .system import SystemSpec
from .trace import SignalTrace
from .vecfit import (
    PoleSet,
    RationalApproximant,
    SamplingGrid,
    error_J,
    fit_operator,
    fit_with_integrator,
    identify_residues,
    initial_poles,
    make_grid,
    vector_fit,
)
from .fdm_sim import (
    assign_initial_state,
    caputo_diff_fdm,
    simulate_operator,
    simulate_system,
    step_operator,
    weight_mu,
)

__version__ = "0.1.0"
