"""Coupled agent/estimator integration and scenario runs.

The microscopic loop advances agent positions together with every agent's
density estimate.  Control fields are computed on unit-mass (probability)
densities: the mass-balance model is a mean-field object, so the velocity
fields that advect agents and enter the control fluxes are built against
rho / N, while the recorded error metrics keep the mass-N convention of the
KDE.  The recovered control U is invariant to that common rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circle import Field, Grid, convolve_rows, interp_rows, wrap, wrapped_difference
from .config import ScenarioConfig
from .control import ControlGains, local_control_rows, velocity_field
from .density import ErrorSeries, estimation_error_raw, kde, l2_norm, normalize_series
from .estimator import (EstimatorState, init_estimates, init_estimates_equilibrium,
                        pi_rhs)
from .graph import CommGraph, complete_graph, is_connected, knn_graph, proximity_graph
from .kernels import (InteractionParams, SmoothingParams, TargetParams,
                      interaction_kernel, interaction_kernel_field, target_density,
                      tracking_mean, von_mises_kernel)


@dataclass
class SwarmState:
    """Wrapped agent positions and the simulation clock."""

    positions: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.positions = wrap(np.asarray(self.positions, dtype=float))


@dataclass
class RunRecord:
    """Everything a scenario run produces, metrics normalized post-hoc."""

    config: ScenarioConfig
    times: np.ndarray
    density_error: ErrorSeries
    estimation_error: ErrorSeries | None
    positions: np.ndarray                 # (samples, N)
    tracking_mu: np.ndarray | None        # sampled schedule for tracking targets
    step_times: np.ndarray                # one entry per integration step
    connected_flags: np.ndarray           # per-step connectivity of the comm graph
    snapshot_times: np.ndarray
    density_snapshots: np.ndarray         # (snapshots, M), mass-N convention
    target_snapshots: np.ndarray          # (snapshots, M)
    estimate_mean_snapshots: np.ndarray | None

    @property
    def disconnected_steps(self) -> int:
        return int(np.sum(~self.connected_flags))


def initial_positions(n: int) -> np.ndarray:
    """Midpoint-uniform deployment: x_i = -pi + (2i - 1) pi / n.

    Evenly spaced with no agent sitting exactly on the seam node.
    """
    return -np.pi + (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / n


def agent_velocities(state: SwarmState, controls: np.ndarray,
                     p: InteractionParams) -> np.ndarray:
    """Microscopic dynamics: pairwise repulsion sum plus the control input."""
    controls = np.asarray(controls, dtype=float)
    if controls.shape != state.positions.shape:
        raise ValueError("agent_velocities: controls length mismatch")
    diffs = wrapped_difference(state.positions[:, None], state.positions[None, :])
    return interaction_kernel(diffs, p).sum(axis=1) + controls


def rk4_step_array(state: np.ndarray, rhs, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of x' = rhs(x) on a flat array."""
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Scenario:
    """Precomputed immutable data shared by every step of one run."""

    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.grid = Grid(cfg.grid_m)
        self.smoothing = SmoothingParams(cfg.h)
        self.interaction = InteractionParams(cfg.interaction_length)
        self.kernel_field = interaction_kernel_field(self.interaction, self.grid)
        # Control runs on unit-mass densities; the floor moves to that scale.
        self.gains_unit = ControlGains(cfg.k_p, cfg.resolved_rho_floor() / cfg.n)
        self._static_target = None
        if cfg.target.kind != "tracking-von-mises":
            self._static_target = self._build_target(0.0)

    def _build_target(self, t: float):
        cfg = self.cfg
        if cfg.target.kind == "tracking-von-mises":
            mu = tracking_mean(t)
            params = TargetParams("monomodal-von-mises", mu, mu, cfg.target.kappa, cfg.n)
        else:
            params = TargetParams(cfg.target.kind, cfg.target.mu1, cfg.target.mu2,
                                  cfg.target.kappa, cfg.n)
        rho_d = target_density(params, self.grid)
        unit = Field(self.grid, rho_d.values / cfg.n)
        v_d_unit = velocity_field(unit, self.interaction)
        return rho_d, unit, v_d_unit

    def target_at(self, t: float):
        """(rho_d mass-N, rho_d unit-mass, V_d of the unit-mass target)."""
        if self._static_target is not None:
            return self._static_target
        return self._build_target(t)

    def build_graph(self, positions: np.ndarray) -> CommGraph:
        topo = self.cfg.topology
        if topo.kind == "knn":
            return knn_graph(positions, topo.k)
        if topo.kind == "proximity":
            return proximity_graph(positions, topo.eps)
        return complete_graph(self.cfg.n)

    def vm_rows(self, positions: np.ndarray) -> np.ndarray:
        """Unit kernels centered at each agent; row-sum is the KDE."""
        return von_mises_kernel(self.grid.points[None, :] - positions[:, None],
                                self.smoothing)

    def init_estimator(self, positions: np.ndarray, graph: CommGraph) -> EstimatorState:
        cfg = self.cfg
        mode = cfg.estimator.init
        if mode == "self":
            return init_estimates(positions, cfg.n, self.smoothing, self.grid)
        if mode == "warm":
            est = np.tile(kde(positions, self.smoothing, self.grid).values, (cfg.n, 1))
            return EstimatorState(self.grid, est, np.zeros_like(est))
        return init_estimates_equilibrium(
            positions, cfg.n, self.smoothing, self.grid,
            cfg.estimator.alpha, cfg.estimator.sigma_i,
            realization=cfg.estimator.integral_realization, graph=graph)


def coupled_rhs(swarm: SwarmState, est: EstimatorState | None, cfg: ScenarioConfig,
                graph: CommGraph | None = None, scenario: _Scenario | None = None):
    """Time derivatives of (positions, estimates, integral terms).

    The communication graph is taken as given (frozen within a step by the
    integrator); when omitted it is built from the current positions.
    Centralized mode feeds the true KDE through the same control pipeline and
    returns zero estimator derivatives unless the config co-runs the
    estimator for comparison purposes.
    """
    scn = scenario or _Scenario(cfg)
    if cfg.mode == "decentralized" and est is None:
        raise ValueError("coupled_rhs: decentralized mode needs an estimator state")
    pos = swarm.positions
    if graph is None:
        graph = scn.build_graph(pos)

    vm = scn.vm_rows(pos)
    rho_vals = vm.sum(axis=0)                      # mass-N KDE of true positions
    rho_d, rho_d_unit, v_d_unit = scn.target_at(swarm.t)

    decentralized = cfg.mode == "decentralized"
    run_estimator = est is not None and (decentralized or cfg.centralized_estimator)

    if run_estimator and not cfg.pin_estimates:
        refs = cfg.n * vm
        d_est, d_int = pi_rhs(est, refs, graph, cfg.estimator.alpha,
                              cfg.estimator.sigma_p, cfg.estimator.sigma_i,
                              realization=cfg.estimator.integral_realization)
    elif est is not None:
        d_est = np.zeros_like(est.estimates)
        d_int = np.zeros_like(est.integral_terms)
    else:
        d_est = d_int = None

    if decentralized and not cfg.pin_estimates:
        control_input = est.estimates / cfg.n
    else:
        # centralized, or decentralized with estimates pinned to the truth
        control_input = rho_vals[None, :] / cfg.n
    u_rows = local_control_rows(control_input, rho_d_unit, v_d_unit,
                                scn.interaction, scn.gains_unit,
                                include_boundary_term=cfg.include_boundary_term)
    if u_rows.shape[0] == 1:
        u = interp_rows(scn.grid, u_rows[0], pos)
    else:
        u = interp_rows(scn.grid, u_rows, pos)

    if cfg.advection == "mean-field":
        v_field = convolve_rows(scn.kernel_field, rho_vals[None, :] / cfg.n)[0]
        d_pos = interp_rows(scn.grid, v_field, pos) + u
    else:
        d_pos = agent_velocities(swarm, u, scn.interaction)
    return d_pos, d_est, d_int


def rk4_step(swarm: SwarmState, est: EstimatorState | None, cfg: ScenarioConfig,
             dt: float, graph: CommGraph | None = None,
             scenario: _Scenario | None = None):
    """Advance the coupled state one step; graph frozen across the stages."""
    scn = scenario or _Scenario(cfg)
    if graph is None:
        graph = scn.build_graph(swarm.positions)

    have_est = est is not None

    def stage(pos, e_est, e_int, t_stage):
        s = SwarmState(pos, t_stage)
        e = EstimatorState(scn.grid, e_est, e_int) if have_est else None
        return coupled_rhs(s, e, cfg, graph=graph, scenario=scn)

    p0 = swarm.positions
    e0 = est.estimates if have_est else None
    z0 = est.integral_terms if have_est else None
    t0 = swarm.t

    def axpy(a, b, c):
        return None if a is None else a + b * c

    k1 = stage(p0, e0, z0, t0)
    k2 = stage(p0 + 0.5 * dt * k1[0], axpy(e0, 0.5 * dt, k1[1]),
               axpy(z0, 0.5 * dt, k1[2]), t0 + 0.5 * dt)
    k3 = stage(p0 + 0.5 * dt * k2[0], axpy(e0, 0.5 * dt, k2[1]),
               axpy(z0, 0.5 * dt, k2[2]), t0 + 0.5 * dt)
    k4 = stage(p0 + dt * k3[0], axpy(e0, dt, k3[1]), axpy(z0, dt, k3[2]), t0 + dt)

    new_pos = wrap(p0 + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]))
    if not np.all(np.isfinite(new_pos)):
        raise RuntimeError("rk4_step: non-finite positions after step")
    new_swarm = SwarmState(new_pos, t0 + dt)

    new_est = None
    if have_est:
        new_e = e0 + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        new_z = z0 + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(new_e)) and np.all(np.isfinite(new_z))):
            raise RuntimeError("rk4_step: non-finite estimator state after step")
        new_est = EstimatorState(scn.grid, new_e, new_z)
    return new_swarm, new_est


def run_scenario(cfg: ScenarioConfig) -> RunRecord:
    """Integrate a full scenario and assemble the post-processed record."""
    scn = _Scenario(cfg)
    grid = scn.grid
    pos0 = initial_positions(cfg.n)
    swarm = SwarmState(pos0.copy())

    frozen_graph = None
    if cfg.topology.kind != "proximity":
        frozen_graph = scn.build_graph(pos0)
    graph0 = frozen_graph if frozen_graph is not None else scn.build_graph(pos0)

    est = None
    if cfg.mode == "decentralized" or cfg.centralized_estimator:
        est = scn.init_estimator(pos0, graph0)

    tracking = cfg.target.kind == "tracking-von-mises"
    steps = int(round(cfg.t_final / cfg.dt))

    rec_times, rec_err, rec_pos, rec_mu, rec_est_err = [], [], [], [], []
    step_times = np.arange(steps) * cfg.dt
    connected = np.ones(steps, dtype=bool)
    if frozen_graph is not None and steps > 0:
        connected[:] = is_connected(frozen_graph)
    snap_times, snap_rho, snap_target, snap_est = [], [], [], []

    def take_snapshot(t, rho_vals, target_vals, est_state):
        snap_times.append(t)
        snap_rho.append(rho_vals.copy())
        snap_target.append(target_vals.copy())
        if est_state is not None:
            snap_est.append(est_state.estimates.mean(axis=0))

    def record(t, rho_field, target_field, est_state):
        rec_times.append(t)
        rec_err.append(l2_norm(target_field.values - rho_field.values, grid))
        rec_pos.append(swarm.positions.copy())
        if tracking:
            rec_mu.append(tracking_mean(t))
        if est_state is not None:
            rec_est_err.append(estimation_error_raw(rho_field, est_state.estimates))

    snapshot_steps = {0, steps}
    if cfg.snapshot_every:
        snapshot_steps.update(range(0, steps + 1, cfg.snapshot_every))

    for step in range(steps + 1):
        rho = kde(swarm.positions, scn.smoothing, grid)
        rho_d, _, _ = scn.target_at(swarm.t)
        if steps > 0 and (step % cfg.record_every == 0 or step == steps):
            record(swarm.t, rho, rho_d, est)
        if step in snapshot_steps:
            take_snapshot(swarm.t, rho.values, rho_d.values, est)
        if step == steps:
            break
        if frozen_graph is not None:
            graph = frozen_graph
        else:
            graph = scn.build_graph(swarm.positions)
            connected[step] = is_connected(graph)
        try:
            swarm, est = rk4_step(swarm, est, cfg, cfg.dt, graph=graph, scenario=scn)
        except RuntimeError as exc:
            raise RuntimeError(f"run_scenario: step {step + 1}: {exc}") from exc

    times = np.asarray(rec_times)
    density_series = normalize_series(times, np.asarray(rec_err))
    est_series = None
    if rec_est_err:
        est_series = normalize_series(times, np.asarray(rec_est_err).T)

    return RunRecord(
        config=cfg,
        times=times,
        density_error=density_series,
        estimation_error=est_series,
        positions=np.asarray(rec_pos) if rec_pos else np.empty((0, cfg.n)),
        tracking_mu=np.asarray(rec_mu) if tracking and rec_mu else None,
        step_times=step_times,
        connected_flags=connected,
        snapshot_times=np.asarray(snap_times),
        density_snapshots=np.asarray(snap_rho),
        target_snapshots=np.asarray(snap_target),
        estimate_mean_snapshots=np.asarray(snap_est) if snap_est else None,
    )
