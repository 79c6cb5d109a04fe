"""Geometry and numerics on the periodic domain [-pi, pi).

Everything downstream (densities, velocity fields, control fields) lives on a
uniform M-point grid over the circle.  This module owns the grid, angle
wrapping, quadrature, finite differences, circular convolution and periodic
interpolation.  All functions are pure; ``Grid`` and ``Field`` are immutable
value types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap(x):
    """Wrap angles to the half-open interval [-pi, pi).

    Accepts scalars or arrays.  The representative of pi is -pi, so no value
    is ever double counted at the seam.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("wrap: non-finite angle")
    out = x - TWO_PI * np.floor((x + np.pi) / TWO_PI)
    # floor can land exactly on +pi for inputs like pi*(1 - 2**-53); fold it.
    out = np.where(out >= np.pi, out - TWO_PI, out)
    if out.ndim == 0:
        return float(out)
    return out


def wrapped_difference(a, b):
    """Relative position a - b wrapped to [-pi, pi)."""
    return wrap(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: points[k] = -pi + k*dx, k = 0..M-1."""

    m: int

    def __post_init__(self):
        if self.m < 4:
            raise ValueError(f"Grid: need at least 4 points, got {self.m}")

    @property
    def dx(self) -> float:
        return TWO_PI / self.m

    @property
    def points(self) -> np.ndarray:
        return -np.pi + self.dx * np.arange(self.m)


@dataclass(frozen=True)
class Field:
    """Real-valued function sampled on a Grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.m,):
            raise ValueError(f"Field: expected {self.grid.m} samples, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Field: non-finite samples")
        object.__setattr__(self, "values", v)


def _check_same_grid(*fields: Field):
    m = fields[0].grid.m
    for f in fields[1:]:
        if f.grid.m != m:
            raise ValueError("grid mismatch between fields")


def integrate(f: Field) -> float:
    """Total integral over the circle (periodic trapezoid = rectangle rule)."""
    return float(np.sum(f.values) * f.grid.dx)


def cumulative_integral(f: Field) -> Field:
    """Running integral from -pi: F[k] = int_{-pi}^{x_k} f dy, F[0] = 0.

    Trapezoid between consecutive nodes, so cumulative_integral is the exact
    inverse of a trapezoid-consistent derivative for linear segments.
    """
    v = f.values
    inner = 0.5 * (v[:-1] + v[1:]) * f.grid.dx
    return Field(f.grid, np.concatenate(([0.0], np.cumsum(inner))))


def derivative(f: Field) -> Field:
    """Second-order central difference with periodic wraparound."""
    v = f.values
    return Field(f.grid, (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * f.grid.dx))


def _lag_samples(kernel: Field) -> np.ndarray:
    """Reorder grid samples K(points[k]) into lag samples K(wrap(d*dx)).

    The Riemann sum of the convolution integral, out[k] = dx * sum_j
    K(wrap(x_k - x_j)) f(x_j), is a cyclic convolution against the kernel
    indexed by the *lag* d = k - j, not by grid position; since points start
    at -pi the two orderings differ by a half-period rotation.  Convolving
    with grid-ordered samples would silently evaluate K(x - y - pi).
    """
    m = kernel.grid.m
    if m % 2:
        raise ValueError("circular_convolution: grid size must be even")
    return np.roll(kernel.values, -(m // 2))


def circular_convolution(kernel: Field, f: Field) -> Field:
    """Circular convolution (kernel * f)(x) = int kernel(x - y) f(y) dy.

    FFT path; the direct O(M^2) sum is kept in the test-suite as an oracle.
    """
    _check_same_grid(kernel, f)
    lag = _lag_samples(kernel)
    out = np.fft.irfft(np.fft.rfft(lag) * np.fft.rfft(f.values), n=f.grid.m)
    return Field(f.grid, out * f.grid.dx)


def convolve_rows(kernel: Field, rows: np.ndarray) -> np.ndarray:
    """Circular convolution of one kernel against a stack of sample rows.

    Batched form of :func:`circular_convolution` used in the per-agent control
    pipeline; returns an array of the same shape as ``rows``.
    """
    m = kernel.grid.m
    if rows.shape[-1] != m:
        raise ValueError("convolve_rows: row length does not match kernel grid")
    lag = _lag_samples(kernel)
    out = np.fft.irfft(np.fft.rfft(lag) * np.fft.rfft(rows, axis=-1), n=m, axis=-1)
    return out * kernel.grid.dx


def interp_periodic(f: Field, x) -> float:
    """Linear interpolation of a gridded field at angle(s) x, periodic seam.

    Between points[M-1] and points[0] the interpolant wraps around.  Exact at
    grid nodes and for fields linear between nodes.
    """
    vals = interp_rows(f.grid, f.values, np.atleast_1d(np.asarray(x, dtype=float)))
    if np.ndim(x) == 0:
        return float(vals[0])
    return vals


def interp_rows(grid: Grid, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Periodic linear interpolation, vectorized over query points.

    ``rows`` is either one field (M,) sampled at every x, or a stack (N, M)
    where row i is sampled at x[i].  Used to evaluate each agent's own control
    field at its own position in one shot.
    """
    x = wrap(np.atleast_1d(x))
    s = (x + np.pi) / grid.dx
    k0 = np.floor(s).astype(int) % grid.m
    k1 = (k0 + 1) % grid.m
    w = s - np.floor(s)
    if rows.ndim == 1:
        return (1.0 - w) * rows[k0] + w * rows[k1]
    idx = np.arange(rows.shape[0])
    return (1.0 - w) * rows[idx, k0] + w * rows[idx, k1]
