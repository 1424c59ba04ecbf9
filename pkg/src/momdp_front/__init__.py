"""Exact Pareto fronts of finite average-cost multi-objective MDPs."""

from .estimation import (
    EstimationSystem,
    build_momdp,
    eta_table,
    pendubot_system,
    scalar_system,
    stability_condition,
    steady_state_covariance,
    threshold_family,
    threshold_policy,
    verify_threshold_front,
)
from .front import (
    EdgePoint,
    FrontEdge,
    FrontVertex,
    OffFrontError,
    ParetoFront,
    blend_of_mixing,
    decompose_point,
    front_bruteforce,
    front_dichotomy_2d,
    front_from_policy_family,
    mixing_coefficient,
    realize_edge_point,
    realize_point,
)
from .lp import is_pareto_optimal, lexicographic_min, solve_scalarized, supporting_weight
from .model import (
    DeterministicPolicy,
    MomdpModel,
    SimpleMixingPolicy,
    StationaryPolicy,
    analyze_chain,
    is_unichain,
    toy_model,
    validate_model,
)
from .nonlinear import (
    ScalarizationSpec,
    minimize_over_front_2d,
    minimize_over_front_general,
    parse_scalarization,
)
from .occupancy import MultichainError, basic_feasible_solutions, occupancy_of_stationary, polytope_spec
from .simulation import RolloutConfig, regeneration_stats, rollout

__version__ = "0.1.0"
