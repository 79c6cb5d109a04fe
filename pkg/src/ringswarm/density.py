"""Kernel density estimation and the run error metrics.

The swarm density is always *measured* as the KDE of true agent positions;
estimator outputs never enter the metrics.  Both error metrics are recorded
raw during a run and normalized post-hoc by their maximum over the run, the
per-agent estimation errors each by their own maximum before averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import Field, Grid
from .kernels import SmoothingParams, von_mises_kernel


def kde(positions: np.ndarray, p: SmoothingParams, grid: Grid) -> Field:
    """Kernel density estimate: sum of unit-mass Von Mises kernels.

    Total mass equals the number of agents.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        raise ValueError("kde: empty position list")
    vals = von_mises_kernel(grid.points[None, :] - positions[:, None], p).sum(axis=0)
    return Field(grid, vals)


def reference_density(x_i: float, n: int, p: SmoothingParams, grid: Grid) -> Field:
    """Single-agent reference signal r_i = n * K_h(x - x_i), mass n.

    The agent-average of these references is exactly the KDE, which is what
    the consensus estimator tracks.
    """
    return Field(grid, n * von_mises_kernel(grid.points - x_i, p))


def reference_rows(positions: np.ndarray, n: int, p: SmoothingParams, grid: Grid) -> np.ndarray:
    """All N reference densities stacked as an (N, M) array."""
    positions = np.asarray(positions, dtype=float)
    return n * von_mises_kernel(grid.points[None, :] - positions[:, None], p)


def l2_norm(values: np.ndarray, grid: Grid) -> float:
    """Continuum L2 norm of grid samples: sqrt(int v^2 dx)."""
    return float(np.sqrt(np.sum(np.square(values)) * grid.dx))


def density_error_raw(rho_d: Field, rho: Field) -> float:
    """Raw tracking error ||rho_d - rho||_2 by periodic quadrature."""
    if rho_d.grid.m != rho.grid.m:
        raise ValueError("density_error_raw: grid mismatch")
    return l2_norm(rho_d.values - rho.values, rho.grid)


def estimation_error_raw(rho: Field, estimates: np.ndarray) -> np.ndarray:
    """Per-agent raw estimation errors ||rho - rho_hat_i||_2, shape (N,)."""
    estimates = np.asarray(estimates, dtype=float)
    if estimates.ndim != 2 or estimates.shape[1] != rho.grid.m:
        raise ValueError("estimation_error_raw: estimates must be (N, M) on rho's grid")
    diff = rho.values[None, :] - estimates
    return np.sqrt(np.sum(np.square(diff), axis=1) * rho.grid.dx)


@dataclass(frozen=True)
class ErrorSeries:
    """A recorded error trace: raw samples and their post-hoc normalization."""

    times: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray


def normalize_series(times: np.ndarray, raw: np.ndarray) -> ErrorSeries:
    """Post-hoc max-normalization of an error trace.

    1-D input: divide by the series maximum (an all-zero series stays zero).
    2-D input (agents x samples): each agent's series is normalized by its own
    maximum first, then averaged across agents, matching the nesting of the
    average-estimation-error metric.
    """
    times = np.asarray(times, dtype=float)
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        peak = raw.max() if raw.size else 0.0
        normalized = raw / peak if peak > 0 else np.zeros_like(raw)
        return ErrorSeries(times, raw, normalized)
    if raw.ndim == 2:
        peaks = raw.max(axis=1, keepdims=True)
        safe = np.where(peaks > 0, peaks, 1.0)
        per_agent = np.where(peaks > 0, raw / safe, 0.0)
        return ErrorSeries(times, raw.mean(axis=0), per_agent.mean(axis=0))
    raise ValueError("normalize_series: raw must be 1-D or 2-D")
