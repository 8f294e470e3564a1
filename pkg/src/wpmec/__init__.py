"""Energy and task scheduling for a wireless-powered edge-computing user."""

from .baselines import full_offload, local_only, myopic, solve_offline
from .model import (
    AllocationPlan,
    ChannelTrace,
    ConvergenceError,
    DomainError,
    Mode,
    SystemParams,
    TaskTrace,
)
from .offline_fading import cds_power, compute_cds, solve_fading, solve_sp
from .offline_static import TransitionSchedule, forward_search_averages, solve_static
from .online import InfeasiblePlanError, run_online
from .scenario import (
    GeometryConfig,
    PortableRng,
    RngSpec,
    ScenarioConfig,
    gen_channels,
    gen_tasks,
    run_montecarlo,
)
from .verify import check_feasible, check_structure, grid_oracle

__all__ = [
    "AllocationPlan", "ChannelTrace", "ConvergenceError", "DomainError", "GeometryConfig",
    "InfeasiblePlanError", "Mode", "PortableRng", "RngSpec", "ScenarioConfig", "SystemParams",
    "TaskTrace", "TransitionSchedule", "cds_power", "check_feasible", "check_structure", "compute_cds",
    "forward_search_averages", "full_offload", "gen_channels", "gen_tasks", "grid_oracle",
    "local_only", "myopic", "run_montecarlo", "run_online", "solve_fading", "solve_offline",
    "solve_sp", "solve_static",
]
