"""Continuification control on the circle.

The mass-balance picture: the swarm density obeys rho_t + [rho V]_x = q with
V the repulsion field f * rho, and the source q is the control.  Choosing
q = K_p e + [rho V]_x - [rho_d V_d]_x closes the error dynamics to
e_t = -K_p e when the reference density is transported by its own velocity
field; ``simulate_macroscopic`` verifies that decay rate directly at the PDE
level.  The microscopic control field U is recovered from q by spatial
integration and division by the density, and each agent samples U (or its
locally estimated counterpart) at its own position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import (Field, circular_convolution, convolve_rows, cumulative_integral,
                     derivative, integrate, interp_periodic, interp_rows)
from .density import l2_norm
from .kernels import InteractionParams, interaction_kernel_field


@dataclass(frozen=True)
class ControlGains:
    """Proportional gain K_p > 0 and the density floor regularizing 1/rho."""

    k_p: float = 1.0
    rho_floor: float = 0.0

    def __post_init__(self):
        if not self.k_p > 0:
            raise ValueError("ControlGains: k_p must be positive")
        if self.rho_floor < 0:
            raise ValueError("ControlGains: rho_floor must be nonnegative")


def velocity_field(rho: Field, p: InteractionParams) -> Field:
    """Interaction velocity V = f * rho by circular convolution."""
    return circular_convolution(interaction_kernel_field(p, rho.grid), rho)


def control_source(rho: Field, rho_d: Field, v: Field, v_d: Field,
                   gains: ControlGains) -> Field:
    """Closed-loop source q = K_p (rho_d - rho) + [rho V]_x - [rho_d V_d]_x."""
    fb = gains.k_p * (rho_d.values - rho.values)
    flux = derivative(Field(rho.grid, rho.values * v.values)).values
    flux_d = derivative(Field(rho.grid, rho_d.values * v_d.values)).values
    return Field(rho.grid, fb + flux - flux_d)


def macroscopic_control(q: Field, rho: Field, gains: ControlGains,
                        include_boundary_term: bool = True) -> Field:
    """Recover the control field U = -(int_{-pi}^x q dy + q(-pi)) / rho.

    The additive q(-pi) term is implemented as printed; passing
    ``include_boundary_term=False`` drops it (see ``seam_jump`` for why one
    might).  The denominator is clamped to rho_floor so transiently small or
    negative densities cannot blow up the field.
    """
    accum = cumulative_integral(q).values
    if include_boundary_term:
        accum = accum + q.values[0]
    denom = np.maximum(rho.values, gains.rho_floor)
    return Field(q.grid, -accum / denom)


def seam_jump(q: Field, rho: Field, gains: ControlGains) -> float:
    """Periodic defect of the recovered control field at the seam.

    The running integral of q around the full circle generally does not
    return to zero, so U as integrated is discontinuous across +-pi; the jump
    magnitude |int_Omega q dx| / rho(-pi) is recorded as a diagnostic.
    """
    denom = max(rho.values[0], gains.rho_floor)
    return abs(integrate(q)) / denom


def local_control_field(rho_hat_i: Field, rho_d: Field, v_d: Field,
                        p: InteractionParams, gains: ControlGains,
                        include_boundary_term: bool = True) -> Field:
    """Per-agent control field from that agent's density estimate.

    The agent substitutes its clamped estimate for the true density
    everywhere the centralized law uses rho — in the error, in the advection
    flux, and in the recovery division — while the reference data rho_d, V_d
    are known to all agents.
    """
    est = Field(rho_hat_i.grid, np.maximum(rho_hat_i.values, 0.0))
    v_hat = velocity_field(est, p)
    q_hat = control_source(est, rho_d, v_hat, v_d, gains)
    return macroscopic_control(q_hat, est, gains, include_boundary_term)


def local_control_rows(estimates: np.ndarray, rho_d: Field, v_d: Field,
                       p: InteractionParams, gains: ControlGains,
                       include_boundary_term: bool = True) -> np.ndarray:
    """All N per-agent control fields at once, rows = agents.

    Vectorized restatement of :func:`local_control_field`; kept in lockstep
    with it (the consistency is pinned by a test).
    """
    grid = rho_d.grid
    est = np.maximum(np.asarray(estimates, dtype=float), 0.0)
    kern = interaction_kernel_field(p, grid)
    v_hat = convolve_rows(kern, est)
    flux = est * v_hat
    dflux = (np.roll(flux, -1, axis=1) - np.roll(flux, 1, axis=1)) / (2.0 * grid.dx)
    flux_d = derivative(Field(grid, rho_d.values * v_d.values)).values
    q_hat = gains.k_p * (rho_d.values[None, :] - est) + dflux - flux_d[None, :]
    inner = 0.5 * (q_hat[:, :-1] + q_hat[:, 1:]) * grid.dx
    accum = np.concatenate([np.zeros((est.shape[0], 1)), np.cumsum(inner, axis=1)], axis=1)
    if include_boundary_term:
        accum = accum + q_hat[:, :1]
    return -accum / np.maximum(est, gains.rho_floor)


def sample_control(u_field: Field, x_i: float) -> float:
    """Agent-level input: the control field evaluated at the agent position."""
    return interp_periodic(u_field, x_i)


def sample_control_rows(grid, u_rows: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Each agent's own control field sampled at its own position."""
    return interp_rows(grid, u_rows, positions)


def fit_decay_rate(times: np.ndarray, errors: np.ndarray,
                   floor: float = 1e-10) -> float:
    """Least-squares slope of -log error against time.

    Samples at or below ``floor`` are excluded so a fully converged tail
    cannot drag the fit.
    """
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > floor
    if keep.sum() < 2:
        raise ValueError("fit_decay_rate: not enough samples above the floor")
    slope = np.polyfit(times[keep], np.log(errors[keep]), 1)[0]
    return float(-slope)


def simulate_macroscopic(rho0: Field, rho_d: Field, gains: ControlGains,
                         p: InteractionParams, dt: float, t_final: float,
                         apply_control: bool = True):
    """Integrate the controlled mass-balance PDE and record the error norm.

    Both the density and the reference are advanced with RK4 and central
    differences: the reference is transported by its own velocity field,
    which is exactly the regime in which the control law closes the error
    dynamics to e_t = -K_p e.  Returns (times, error_norms, mass_history).
    """
    grid = rho0.grid
    if rho_d.grid.m != grid.m:
        raise ValueError("simulate_macroscopic: grid mismatch")
    mass0, mass_d = integrate(rho0), integrate(rho_d)
    if abs(mass0 - mass_d) > 1e-6 * max(abs(mass_d), 1.0):
        raise ValueError(f"simulate_macroscopic: mass mismatch {mass0:.6g} vs {mass_d:.6g}")
    kern = interaction_kernel_field(p, grid)

    v0 = np.abs(convolve_rows(kern, np.vstack([rho0.values, rho_d.values]))).max()
    if v0 > 0 and dt > 0.5 * grid.dx / v0:
        raise ValueError(f"simulate_macroscopic: dt={dt} violates the advective "
                         f"stability bound {0.5 * grid.dx / v0:.3e}")

    def rhs(state):
        rho, ref = state
        rows = convolve_rows(kern, state)
        flux = state * rows
        dflux = (np.roll(flux, -1, axis=1) - np.roll(flux, 1, axis=1)) / (2.0 * grid.dx)
        d_rho = -dflux[0]
        d_ref = -dflux[1]
        if apply_control:
            d_rho = d_rho + gains.k_p * (ref - rho) + dflux[0] - dflux[1]
        return np.vstack([d_rho, d_ref])

    steps = int(round(t_final / dt))
    state = np.vstack([rho0.values, rho_d.values])
    times = [0.0]
    errors = [l2_norm(state[1] - state[0], grid)]
    masses = [integrate(Field(grid, state[0]))]
    for k in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * dt * k1)
        k3 = rhs(state + 0.5 * dt * k2)
        k4 = rhs(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise RuntimeError(f"simulate_macroscopic: integration diverged at step {k + 1}")
        times.append((k + 1) * dt)
        errors.append(l2_norm(state[1] - state[0], grid))
        masses.append(integrate(Field(grid, state[0])))
    return np.array(times), np.array(errors), np.array(masses)
