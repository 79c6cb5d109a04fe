import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringswarm.circle import Field, Grid, integrate
from ringswarm.control import (
    ControlGains,
    control_source,
    fit_decay_rate,
    local_control_field,
    local_control_rows,
    macroscopic_control,
    sample_control,
    sample_control_rows,
    seam_jump,
    simulate_macroscopic,
    velocity_field,
)
from ringswarm.kernels import InteractionParams, TargetParams, target_density

GRID = Grid(256)
TARGET = target_density(
    TargetParams("bimodal-von-mises", -np.pi / 2, np.pi / 2, 2.0, 50), GRID)


class TestVelocityField:
    def test_uniform_density_gives_no_drift(self):
        rho = Field(GRID, np.full(GRID.m, 50 / (2 * np.pi)))
        v = velocity_field(rho, InteractionParams())
        assert np.abs(v.values).max() < 1e-10

    def test_agents_flee_a_bump(self):
        vals = np.full(GRID.m, 1.0)
        bump = np.exp(np.cos(GRID.points) / 0.25)
        rho = Field(GRID, vals + bump / bump.max())
        v = velocity_field(rho, InteractionParams())
        # velocity points away from the bump at 0: positive ahead, negative behind
        quarter = GRID.m // 4
        assert v.values[GRID.m // 2 + quarter // 2] > 0  # x ~ +pi/4
        assert v.values[GRID.m // 2 - quarter // 2] < 0  # x ~ -pi/4

    @given(st.floats(min_value=0.2, max_value=3.0))
    @settings(max_examples=20, deadline=None)
    def test_mean_velocity_vanishes(self, scale):
        # odd kernel: total momentum injected into the swarm is zero
        rho = Field(GRID, scale * (1.5 + np.cos(GRID.points)))
        v = velocity_field(rho, InteractionParams())
        assert abs(integrate(Field(GRID, v.values * rho.values))) < 1e-6


class TestControlSource:
    def test_zero_when_density_matches_target(self):
        v = velocity_field(TARGET, InteractionParams())
        q = control_source(TARGET, TARGET, v, v, ControlGains())
        assert np.abs(q.values).max() < 1e-12

    def test_pure_feedback_when_transport_is_off(self):
        rho = Field(GRID, np.full(GRID.m, 50 / (2 * np.pi)))
        zero = Field(GRID, np.zeros(GRID.m))
        q = control_source(rho, TARGET, zero, zero, ControlGains(k_p=2.0))
        assert np.abs(q.values - 2.0 * (TARGET.values - rho.values)).max() < 1e-12

    def test_source_integrates_to_feedback_only(self):
        # flux-divergence terms are exact circle derivatives: zero net mass
        rho = Field(GRID, np.full(GRID.m, 50 / (2 * np.pi)))
        v = velocity_field(rho, InteractionParams())
        v_d = velocity_field(TARGET, InteractionParams())
        q = control_source(rho, TARGET, v, v_d, ControlGains())
        feedback_mass = integrate(Field(GRID, TARGET.values - rho.values))
        assert integrate(q) == pytest.approx(feedback_mass, abs=1e-10)


class TestMacroscopicControl:
    def test_constant_source_pinned_form(self):
        c = 0.7
        q = Field(GRID, np.full(GRID.m, c))
        rho = Field(GRID, np.ones(GRID.m))
        u = macroscopic_control(q, rho, ControlGains(1.0, 0.0))
        want = -(c * (GRID.points + np.pi) + c)
        assert np.abs(u.values - want).max() < 1e-10

    def test_boundary_term_optional(self):
        c = 0.7
        q = Field(GRID, np.full(GRID.m, c))
        rho = Field(GRID, np.ones(GRID.m))
        u = macroscopic_control(q, rho, ControlGains(1.0, 0.0),
                                include_boundary_term=False)
        want = -c * (GRID.points + np.pi)
        assert np.abs(u.values - want).max() < 1e-10

    def test_floor_bounds_field_where_density_vanishes(self):
        q = Field(GRID, np.ones(GRID.m))
        rho = Field(GRID, np.zeros(GRID.m))
        floor = 1e-3
        u = macroscopic_control(q, rho, ControlGains(1.0, floor))
        assert np.isfinite(u.values).all()
        assert np.abs(u.values).max() <= (2 * np.pi + 1) / floor + 1e-9

    def test_seam_jump_diagnostic(self):
        q = Field(GRID, np.full(GRID.m, 0.5))
        rho = Field(GRID, np.ones(GRID.m))
        assert seam_jump(q, rho, ControlGains(1.0, 0.0)) == pytest.approx(np.pi)

    def test_sampling_matches_interp(self):
        u = Field(GRID, np.sin(GRID.points))
        assert sample_control(u, 0.4) == pytest.approx(np.sin(0.4), abs=1e-3)
        rows = np.vstack([u.values, 2 * u.values])
        got = sample_control_rows(GRID, rows, np.array([0.4, 0.4]))
        assert got[1] == pytest.approx(2 * got[0])


class TestLocalControl:
    def test_perfect_estimate_matches_centralized(self):
        rho = Field(GRID, 0.9 * TARGET.values + 0.1 * 50 / (2 * np.pi))
        v_d = velocity_field(TARGET, InteractionParams())
        gains = ControlGains(1.0, 1e-3)
        central = local_control_field(rho, TARGET, v_d, InteractionParams(), gains)
        rows = local_control_rows(np.vstack([rho.values, rho.values]),
                                  TARGET, v_d, InteractionParams(), gains)
        assert np.abs(rows[0] - central.values).max() < 1e-12
        assert np.abs(rows[1] - rows[0]).max() == 0.0

    def test_negative_estimates_are_clamped(self):
        bad = TARGET.values.copy()
        bad[:10] = -5.0
        v_d = velocity_field(TARGET, InteractionParams())
        rows = local_control_rows(bad[None, :], TARGET, v_d,
                                  InteractionParams(), ControlGains(1.0, 1e-3))
        assert np.isfinite(rows).all()


class TestFitDecayRate:
    def test_recovers_synthetic_exponent(self):
        times = np.linspace(0, 5, 200)
        errors = 8.0 * np.exp(-1.7 * times)
        assert fit_decay_rate(times, errors) == pytest.approx(1.7, rel=1e-10)

    def test_ignores_floor_noise(self):
        times = np.linspace(0, 5, 200)
        errors = np.maximum(8.0 * np.exp(-3.0 * times), 1e-12)
        rate = fit_decay_rate(times, errors)
        assert rate == pytest.approx(3.0, rel=0.05)


class TestSimulateMacroscopic:
    def test_mass_conserved(self):
        rho0 = Field(GRID, np.full(GRID.m, 50 / (2 * np.pi)))
        _, _, masses = simulate_macroscopic(
            rho0, TARGET, ControlGains(1.0, 0.0), InteractionParams(), 1e-3, 5.0)
        assert np.abs(masses - masses[0]).max() / masses[0] < 1e-8

    def test_error_decays_at_gain_rate(self):
        rho0 = Field(GRID, np.full(GRID.m, 50 / (2 * np.pi)))
        times, errors, _ = simulate_macroscopic(
            rho0, TARGET, ControlGains(1.5, 0.0), InteractionParams(), 1e-3, 3.0)
        rate = fit_decay_rate(times, errors)
        assert rate == pytest.approx(1.5, rel=1e-6)

    def test_starting_at_target_stays_there(self):
        times, errors, _ = simulate_macroscopic(
            TARGET, TARGET, ControlGains(1.0, 0.0), InteractionParams(), 1e-3, 1.0)
        assert errors.max() < 1e-8

    def test_cfl_violation_rejected(self):
        # the bimodal profile advects itself fast enough that dt = 0.5 is unstable
        with pytest.raises(ValueError):
            simulate_macroscopic(TARGET, TARGET, ControlGains(1.0, 0.0),
                                 InteractionParams(), 0.5, 1.0)


class TestGains:
    def test_nonpositive_kp_rejected(self):
        with pytest.raises(ValueError):
            ControlGains(0.0, 0.0)

    def test_negative_floor_rejected(self):
        with pytest.raises(ValueError):
            ControlGains(1.0, -1.0)
