"""Sampling-based path planning in the space of (position, covariance) states.

The edge cost charges Euclidean travel plus ``alpha`` times the bits of
information needed to shrink the propagated covariance to the next node's.
"""

from .matnum import InvalidInputError, NotPDError, NotPSDError, gen_eigvals, is_pd, is_psd, psd_leq
from .ricost import GoalRegion, RiParams, UncertainState, d_info, propagate, ri_distance
from .collision import Box, ConvexPolygon, chi2_value, state_clear, transition_clear
from .pathspace import NonConvergenceError, PiecewisePath, path_cost_integral, path_cost_partition, path_cost_sup
from .planner import CorruptedTreeError, InfeasibleStartError, PlanResult, plan
from .scenario import BUNDLED, Scenario, ScenarioError, load_scenario
from .oracle import GridSpec, analytic_1d_optimum, default_grid, grid_dijkstra, maxdet_oracle

__version__ = "0.1.0"

__all__ = [
    "InvalidInputError", "NotPDError", "NotPSDError", "gen_eigvals", "is_pd", "is_psd", "psd_leq",
    "GoalRegion", "RiParams", "UncertainState", "d_info", "propagate", "ri_distance",
    "Box", "ConvexPolygon", "chi2_value", "state_clear", "transition_clear",
    "NonConvergenceError", "PiecewisePath", "path_cost_integral", "path_cost_partition", "path_cost_sup",
    "CorruptedTreeError", "InfeasibleStartError", "PlanResult", "plan",
    "BUNDLED", "Scenario", "ScenarioError", "load_scenario",
    "GridSpec", "analytic_1d_optimum", "default_grid", "grid_dijkstra", "maxdet_oracle",
]
