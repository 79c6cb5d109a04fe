"""Closed-form kernels and target densities.

The interaction kernel is a periodized exponential repulsion with a sign
change at the origin; the smoothing kernel is the Von Mises density (the
circular Gaussian).  Targets are mono- or bimodal Von Mises profiles carrying
total mass N, plus the piecewise-linear moving-mean schedule used by the
tracking experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import Field, Grid, wrap


@dataclass(frozen=True)
class InteractionParams:
    """Repulsion length scale L > 0 (radians)."""

    length: float = np.pi / 4

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("InteractionParams: length must be positive")


@dataclass(frozen=True)
class SmoothingParams:
    """KDE bandwidth h > 0."""

    h: float = 0.7

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("SmoothingParams: h must be positive")


@dataclass(frozen=True)
class TargetParams:
    """Target density family: one or two Von Mises modes with total mass n."""

    kind: str  # "bimodal-von-mises" | "monomodal-von-mises"
    mu1: float
    mu2: float
    kappa: float
    n: float

    def __post_init__(self):
        if self.kind not in ("bimodal-von-mises", "monomodal-von-mises"):
            raise ValueError(f"TargetParams: unknown kind {self.kind!r}")
        if not self.kappa > 0:
            raise ValueError("TargetParams: kappa must be positive")
        if not self.n > 0:
            raise ValueError("TargetParams: n must be positive")
        object.__setattr__(self, "mu1", wrap(self.mu1))
        object.__setattr__(self, "mu2", wrap(self.mu2))


def bessel_i0(z: float) -> float:
    """Modified Bessel function I0 by power series.

    I0(z) = sum_k ((z/2)^2k / (k!)^2.  Terms are added until the running term
    drops below 1e-16 of the accumulated sum; for the arguments used here
    (z <~ 4) a handful of terms suffice.
    """
    z = float(z)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= (z * z / 4.0) / (k * k)
        total += term
        if term < 1e-16 * total:
            return total


def interaction_kernel(x, p: InteractionParams):
    """Odd repulsive kernel f(x) = sgn(x) exp(-|x|/L) on the wrapped argument.

    Periodization is realized by always evaluating at wrapped relative
    positions, so f carries a jump across the seam x = +-pi; f(0) = 0.
    """
    xw = wrap(x)
    return np.sign(xw) * np.exp(-np.abs(xw) / p.length)


def interaction_kernel_field(p: InteractionParams, grid: Grid) -> Field:
    """Interaction kernel sampled on the grid, for use in convolutions.

    The kernel jumps at the seam; the sample at the seam node -pi is set to
    the jump midpoint (zero, by oddness), the value the Fourier series of f
    converges to there.  Keeping the one-sided value instead would leak a
    spurious even component into every convolution.
    """
    vals = interaction_kernel(grid.points, p)
    vals[0] = 0.0
    return Field(grid, vals)


def von_mises_kernel(x, p: SmoothingParams):
    """Unit-mass Von Mises kernel K_h(x) = exp(cos(x)/h^2) / (2 pi I0(1/h^2))."""
    conc = 1.0 / (p.h * p.h)
    return np.exp(np.cos(x) * conc) / (2.0 * np.pi * bessel_i0(conc))


def von_mises_kernel_field(p: SmoothingParams, grid: Grid) -> Field:
    return Field(grid, von_mises_kernel(grid.points, p))


def target_density(params: TargetParams, grid: Grid) -> Field:
    """Target profile rho_d on the grid, total mass n.

    Bimodal: n/(4 pi I0(kappa)) * [exp(kappa cos(x-mu1)) + exp(kappa cos(x-mu2))].
    Monomodal: n/(2 pi I0(kappa)) * exp(kappa cos(x-mu1)).
    """
    x = grid.points
    i0 = bessel_i0(params.kappa)
    if params.kind == "bimodal-von-mises":
        vals = (np.exp(params.kappa * np.cos(x - params.mu1))
                + np.exp(params.kappa * np.cos(x - params.mu2)))
        vals *= params.n / (4.0 * np.pi * i0)
    else:
        vals = np.exp(params.kappa * np.cos(x - params.mu1))
        vals *= params.n / (2.0 * np.pi * i0)
    return Field(grid, vals)


def tracking_mean(t: float) -> float:
    """Moving-mean schedule for the tracking experiment.

    Holds at 0 until t = 2, then ramps at unit rate up to pi/3, down to
    -pi/3, and back up to 0, where it stays.  Continuous and piecewise linear.
    """
    if t < 0:
        raise ValueError("tracking_mean: negative time")
    third = np.pi / 3.0
    if t <= 2.0:
        return 0.0
    s = t - 2.0
    if s <= third:                       # rising to the peak
        return s
    s -= third
    if s <= 2.0 * third:                 # falling through zero to the trough
        return third - s
    s -= 2.0 * third
    if s <= third:                       # recovering to zero
        return -third + s
    return 0.0
