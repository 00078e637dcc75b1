"""Bell inequalities violated by states invariant under partial transposition.

The package builds the d-setting inequality family and the matching
d x d state family, evaluates the violation in closed form, and
maximizes it two independent ways: an uphill simplex over the free
parameter chart and an alternating state/measurement optimization with
a small dense semidefinite solver.
"""

from .analytic import ViolationBreakdown, asymptotic_params, quantum_value_analytic
from .bell import BellFunctional, Scenario, classical_bound, make_id
from .model import (
    FreeStateParams,
    MeasurementParams,
    MeasurementSet,
    StateParams,
    assemble_density,
    bell_operator,
    build_measurements,
    solve_constraints,
    theta_frame,
)
from .optimize import OptResult, SimplexConfig, maximize_violation, violation_curve
from .seesaw import SeesawConfig, SeesawResult, restricted_dimension_search, seesaw

__all__ = [
    "BellFunctional",
    "FreeStateParams",
    "MeasurementParams",
    "MeasurementSet",
    "OptResult",
    "Scenario",
    "SeesawConfig",
    "SeesawResult",
    "SimplexConfig",
    "StateParams",
    "ViolationBreakdown",
    "asymptotic_params",
    "assemble_density",
    "bell_operator",
    "build_measurements",
    "classical_bound",
    "make_id",
    "maximize_violation",
    "quantum_value_analytic",
    "restricted_dimension_search",
    "seesaw",
    "solve_constraints",
    "theta_frame",
    "violation_curve",
]

__version__ = "0.1.0"
