"""Decentralized density control of agent swarms on the unit circle.

The package couples a finite swarm to its macroscopic description: agents
interact through a periodic kernel, estimate the swarm density with a
consensus filter over a communication graph, and steer themselves with a
velocity field derived from the mass-balance equation of the density.
"""

from .circle import (
    Field,
    Grid,
    circular_convolution,
    cumulative_integral,
    derivative,
    integrate,
    interp_periodic,
    wrap,
    wrapped_difference,
)
from .config import (
    ConfigError,
    EstimatorConfig,
    ScenarioConfig,
    TargetConfig,
    TopologyConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from .control import (
    ControlGains,
    control_source,
    fit_decay_rate,
    local_control_field,
    macroscopic_control,
    sample_control,
    simulate_macroscopic,
    velocity_field,
)
from .density import (
    ErrorSeries,
    density_error_raw,
    estimation_error_raw,
    kde,
    normalize_series,
    reference_density,
)
from .estimator import (
    EstimatorState,
    estimate_mean_consistency,
    init_estimates,
    init_estimates_equilibrium,
    pi_rhs,
)
from .graph import (
    CommGraph,
    complete_graph,
    is_connected,
    knn_graph,
    laplacian_apply,
    proximity_graph,
)
from .kernels import (
    InteractionParams,
    SmoothingParams,
    TargetParams,
    interaction_kernel,
    target_density,
    tracking_mean,
    von_mises_kernel,
)
from .sim import (
    RunRecord,
    SwarmState,
    agent_velocities,
    coupled_rhs,
    initial_positions,
    rk4_step,
    run_scenario,
)

__all__ = [
    "CommGraph",
    "ConfigError",
    "ControlGains",
    "ErrorSeries",
    "EstimatorConfig",
    "EstimatorState",
    "Field",
    "Grid",
    "InteractionParams",
    "RunRecord",
    "ScenarioConfig",
    "SmoothingParams",
    "SwarmState",
    "TargetConfig",
    "TargetParams",
    "TopologyConfig",
    "agent_velocities",
    "circular_convolution",
    "complete_graph",
    "config_from_dict",
    "config_to_dict",
    "control_source",
    "coupled_rhs",
    "cumulative_integral",
    "density_error_raw",
    "derivative",
    "estimate_mean_consistency",
    "estimation_error_raw",
    "fit_decay_rate",
    "init_estimates",
    "init_estimates_equilibrium",
    "initial_positions",
    "integrate",
    "interaction_kernel",
    "interp_periodic",
    "is_connected",
    "kde",
    "knn_graph",
    "laplacian_apply",
    "load_config",
    "local_control_field",
    "macroscopic_control",
    "normalize_series",
    "pi_rhs",
    "proximity_graph",
    "reference_density",
    "rk4_step",
    "run_scenario",
    "sample_control",
    "save_config",
    "simulate_macroscopic",
    "target_density",
    "tracking_mean",
    "velocity_field",
    "von_mises_kernel",
    "wrap",
    "wrapped_difference",
]

__version__ = "0.1.0"
