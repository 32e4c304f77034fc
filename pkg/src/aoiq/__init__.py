"""Average age-of-information analysis of parallel lossy queues.

Exact chain-based solver, discrete-event simulator, closed-form upper
bound, and routing-game solvers for networks of parallel exponential
servers with preemption, buffer replacement, and in-service losses.
"""

from .shs import (
    RESET_ZERO,
    AoiSolution,
    NegativeSolutionError,
    ReducibleChainError,
    ResetMap,
    ShsError,
    ShsModel,
    ShsTransition,
    SingularSystemError,
    average_aoi,
    solve_v_system,
    stationary_distribution,
)
from .models import (
    ModelKind,
    QueueNetworkSpec,
    Server,
    build_model,
    build_network_model,
    closed_form_pi,
    comparison_specs,
    kind_of,
    mm11_exact_aoi,
)
from .bounds import (
    BoundInput,
    bound_recursion_check,
    centralized_routing_aoi,
    scaled_single_queue_aoi,
    upper_bound,
)
from .game import (
    GameResult,
    GameSpec,
    MeanFieldResult,
    MeanFieldState,
    best_response,
    br_residual,
    finite_n_equilibrium,
    game_cost,
    joint_best_response,
    mean_field_routing,
    mean_field_solve,
    project_feasible,
    step_size_bound,
)
from . import sim  # noqa: E402  (submodule re-export)

__version__ = "0.1.0"

__all__ = [
    "RESET_ZERO",
    "AoiSolution",
    "NegativeSolutionError",
    "ReducibleChainError",
    "ResetMap",
    "ShsError",
    "ShsModel",
    "ShsTransition",
    "SingularSystemError",
    "average_aoi",
    "solve_v_system",
    "stationary_distribution",
    "ModelKind",
    "QueueNetworkSpec",
    "Server",
    "build_model",
    "build_network_model",
    "closed_form_pi",
    "comparison_specs",
    "kind_of",
    "mm11_exact_aoi",
    "BoundInput",
    "bound_recursion_check",
    "centralized_routing_aoi",
    "scaled_single_queue_aoi",
    "upper_bound",
    "GameResult",
    "GameSpec",
    "MeanFieldResult",
    "MeanFieldState",
    "best_response",
    "br_residual",
    "finite_n_equilibrium",
    "game_cost",
    "joint_best_response",
    "mean_field_routing",
    "mean_field_solve",
    "project_feasible",
    "step_size_bound",
    "__version__",
]
