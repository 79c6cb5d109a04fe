"""PI dynamic-average-consensus estimation of the swarm density.

Each agent carries a gridded estimate of the global density and a companion
integral state.  The estimate is driven toward the agent's own reference
density (its kernel, scaled to total mass) while proportional and integral
Laplacian coupling pulls the network toward the reference average, which is
exactly the KDE of all positions.

Two algebraically related realizations of the integral action are provided:

* ``"laplacian-of-integral"``: the integral state accumulates the raw
  estimates and the current Laplacian is applied to it, sigma_I * L(t) z with
  z' = rho_hat.
* ``"integral-of-laplacian"``: the integral state accumulates the Laplacian
  feedback itself, sigma_I * z with z' = L(t) rho_hat, so each agent only
  ever integrates differences with current neighbors.

On a fixed graph the two produce identical estimate trajectories whenever the
initial integral states are consistent (z0 <-> L z0).  On a switching graph
they differ: applying a fresh Laplacian to history accumulated under old
topologies injects spurious feedback on every topology change, while the
second form stays well-behaved through disconnections and is the one a
physically distributed agent can actually compute.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circle import Grid
from .density import kde, reference_rows
from .graph import CommGraph, laplacian_apply
from .kernels import SmoothingParams

REALIZATIONS = ("laplacian-of-integral", "integral-of-laplacian")


@dataclass
class EstimatorState:
    """Per-agent estimate fields and integral-term fields, both (N, M).

    Estimates may transiently go negative (the PI dynamics is linear and does
    not enforce positivity); consumers clamp where positivity is required.
    The meaning of ``integral_terms`` depends on the realization in use: the
    running integral of the estimates, or of their Laplacian feedback.
    """

    grid: Grid
    estimates: np.ndarray = field(repr=False)
    integral_terms: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        self.integral_terms = np.asarray(self.integral_terms, dtype=float)
        if self.estimates.shape != self.integral_terms.shape:
            raise ValueError("EstimatorState: estimate/integral shape mismatch")
        if self.estimates.ndim != 2 or self.estimates.shape[1] != self.grid.m:
            raise ValueError("EstimatorState: fields must be (N, M) on the given grid")


def init_estimates(positions: np.ndarray, n: int, p: SmoothingParams, grid: Grid) -> EstimatorState:
    """Cold start: each agent knows only its own reference; integrals zero."""
    return EstimatorState(grid, reference_rows(positions, n, p, grid),
                          np.zeros((len(positions), grid.m)))


def init_estimates_equilibrium(positions: np.ndarray, n: int, p: SmoothingParams,
                               grid: Grid, alpha: float, sigma_i: float,
                               realization: str = "integral-of-laplacian",
                               graph: CommGraph | None = None) -> EstimatorState:
    """Warm start at the consensus equilibrium of the initial configuration.

    All estimates start at the KDE of the deployment positions and the
    integral states are preloaded so that the PI dynamics is stationary
    there: sigma_I-weighted integral feedback exactly cancels the tracking
    term -alpha (rho_hat - r_i).  In the integral-of-laplacian realization
    the preload z_i = -(alpha/sigma_I)(rho_hat_i - r_i) is computable by each
    agent from its own data; the laplacian-of-integral realization needs the
    graph's pseudoinverse (the preload exists since the tracking residuals
    sum to zero over agents).

    Starting at equilibrium removes the integrator wind-up transient, whose
    dominant symptom is a systematic overestimate of the density each agent
    sees at its own position (and hence uniformly weakened control).
    """
    est = np.tile(kde(positions, p, grid).values, (len(positions), 1))
    resid = -(alpha / sigma_i) * (est - reference_rows(positions, len(positions), p, grid))
    if realization == "integral-of-laplacian":
        z = resid
    elif realization == "laplacian-of-integral":
        if graph is None:
            raise ValueError("equilibrium preload for laplacian-of-integral needs the graph")
        z = np.linalg.pinv(graph.laplacian) @ resid
    else:
        raise ValueError(f"unknown realization {realization!r}")
    return EstimatorState(grid, est, z)


def pi_rhs(state: EstimatorState, refs: np.ndarray, g: CommGraph,
           alpha: float, sigma_p: float, sigma_i: float,
           realization: str = "laplacian-of-integral"):
    """Time derivatives of the PI consensus state.

    Returns (estimate_derivatives, integral_derivatives), both (N, M).
    """
    if min(alpha, sigma_p, sigma_i) <= 0:
        raise ValueError("pi_rhs: gains must be positive")
    if realization not in REALIZATIONS:
        raise ValueError(f"pi_rhs: unknown realization {realization!r}")
    est = state.estimates
    track = -alpha * (est - refs)
    l_est = laplacian_apply(g, est)
    if realization == "laplacian-of-integral":
        d_est = track - sigma_p * l_est - sigma_i * laplacian_apply(g, state.integral_terms)
        d_int = est.copy()
    else:
        d_est = track - sigma_p * l_est - sigma_i * state.integral_terms
        d_int = l_est
    return d_est, d_int


def estimate_mean_consistency(state: EstimatorState, refs: np.ndarray) -> float:
    """L2 distance between the agent-mean estimate and the agent-mean reference.

    Diagnostic only: PI consensus drives every estimate toward the reference
    mean, so this gauges how far the network as a whole has converged.
    """
    diff = state.estimates.mean(axis=0) - np.asarray(refs, dtype=float).mean(axis=0)
    return float(np.sqrt(np.sum(np.square(diff)) * state.grid.dx))
