"""Tests for the slow-time relaxing solver, its fast-time twin and the sampling loop."""

import math

import numpy as np
import pytest

from app.diagnostics.oracles import linear_mode_fields
from app.errors import PositivityError, SolverError, StepSizeError
from app.models.base import GasConstants, IntegrationScheme, TorusGrid
from app.models.state import PerturbationState, StepControl
from app.numerics.spectral import SpectralField, l2_norm_sq, spectral_ops
from app.physics.eos import zeta_from_eos
from app.solvers.base_solver import StateRecorder, sample_schedule
from app.solvers.relaxing import (
    DampedEulerOperator,
    FastTimeOperator,
    FastTimeSolver,
    RelaxingOperator,
    RelaxingSolver,
    choose_step_control,
    evolve_relaxing,
    relaxing_rhs,
    relaxing_tangent,
    step_relaxing,
)


@pytest.fixture
def grid():
    return TorusGrid(dim=1, n_per_dim=32)


@pytest.fixture
def constants():
    return GasConstants(gamma=1.4)


def smooth_state(grid: TorusGrid, t: float = 0.0) -> PerturbationState:
    return PerturbationState(
        t=t,
        xi=SpectralField.from_function(grid, lambda x: 0.05 * np.sin(x)),
        vel=(SpectralField.from_function(grid, lambda x: 0.05 * np.sin(x) - 0.03 * np.cos(2 * x)),),
        phi=SpectralField.from_function(grid, lambda x: 0.02 * np.cos(x)),
    )


def l2_distance(a: PerturbationState, b: PerturbationState) -> float:
    total = l2_norm_sq(a.xi - b.xi) + l2_norm_sq(a.phi - b.phi)
    total += sum(l2_norm_sq(x - y) for x, y in zip(a.vel, b.vel))
    return math.sqrt(total)


class TestSampleSchedule:
    def test_regular_grid(self):
        assert sample_schedule(0.0, 1.0, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_partial_last_interval(self):
        assert sample_schedule(0.0, 0.3, 0.25) == [0.0, 0.25, 0.3]

    def test_no_sampling_interval(self):
        assert sample_schedule(0.5, 1.0, None) == [0.5, 1.0]

    def test_empty_when_no_time_elapses(self):
        assert sample_schedule(1.0, 1.0, 0.1) == []

    def test_backwards_rejected(self):
        with pytest.raises(ValueError):
            sample_schedule(1.0, 0.5, 0.1)


class TestRelaxingSolver:
    """Stepping, exact damping and step-size control."""

    @pytest.mark.parametrize("scheme", list(IntegrationScheme))
    def test_equilibrium_is_fixed(self, grid, constants, scheme):
        solver = RelaxingSolver(grid, constants, 0.25, StepControl(dt=1e-3, scheme=scheme))
        state = PerturbationState.equilibrium(grid)
        for _ in range(5):
            state = solver.step(state)
        for field in (state.xi, *state.vel, state.phi):
            assert np.all(field.values == 0.0)
        assert state.t == pytest.approx(5e-3)

    @pytest.mark.parametrize("scheme", list(IntegrationScheme))
    def test_uniform_velocity_decays_exactly(self, grid, constants, scheme):
        tau = 0.25
        dt = 5.0 * tau**2 / 1000.0
        zero = SpectralField.zeros(grid)
        state = PerturbationState(t=0.0, xi=zero, vel=(SpectralField.constant(grid, 0.1),), phi=zero)
        solver = RelaxingSolver(grid, constants, tau, StepControl(dt=dt, scheme=scheme))
        for _ in range(1000):
            state = solver.step(state)
        expected = 0.1 * math.exp(-5.0)
        np.testing.assert_allclose(state.vel[0].values, expected, rtol=1e-12)
        np.testing.assert_allclose(state.xi.values, 0.0, atol=1e-14)

    def test_linear_mode_matches_exact_solution(self, grid, constants):
        k = [1]
        xi0, vel0 = linear_mode_fields(grid, k, 1.0, constants, 1e-6, 0.0)
        state0 = PerturbationState(t=0.0, xi=xi0, vel=vel0, phi=SpectralField.zeros(grid))
        final = evolve_relaxing(state0, 1.0, constants, StepControl(dt=1e-3), 1.0).final
        xi_t, vel_t = linear_mode_fields(grid, k, 1.0, constants, 1e-6, 1.0)
        exact = PerturbationState(t=1.0, xi=xi_t, vel=vel_t, phi=SpectralField.zeros(grid))
        assert l2_distance(final, exact) <= 1e-9

    def test_schemes_agree_on_smooth_data(self, grid, constants):
        state0 = smooth_state(grid)
        ctrl = choose_step_control(state0, 0.5, constants, max_dt=1e-3)
        strang = evolve_relaxing(state0, 0.5, constants, ctrl, 0.05).final
        etd = evolve_relaxing(
            state0, 0.5, constants, ctrl.model_copy(update={"scheme": IntegrationScheme.ETDRK4}), 0.05
        ).final
        assert l2_distance(strang, etd) <= 1e-6

    def test_step_above_acoustic_limit_rejected(self, grid, constants):
        solver = RelaxingSolver(grid, constants, 0.25, StepControl(dt=0.5))
        with pytest.raises(StepSizeError) as exc:
            solver.step(smooth_state(grid))
        assert exc.value.dt == 0.5
        assert exc.value.limit < 0.5

    def test_evolve_annotates_failure_time(self, grid, constants):
        solver = RelaxingSolver(grid, constants, 0.25, StepControl(dt=0.5))
        with pytest.raises(SolverError) as exc:
            solver.evolve(smooth_state(grid, t=0.125), 2.0)
        assert exc.value.t == pytest.approx(0.125)
        assert isinstance(exc.value.cause, StepSizeError)

    def test_positivity_violation(self, grid, constants):
        zero = SpectralField.zeros(grid)
        state = PerturbationState(t=0.0, xi=SpectralField.constant(grid, -0.95), vel=(zero,), phi=zero)
        with pytest.raises(PositivityError):
            step_relaxing(state, 0.5, constants, StepControl(dt=1e-3))

    def test_choose_step_control_respects_limits(self, grid, constants):
        state = smooth_state(grid)
        ctrl = choose_step_control(state, 0.1, constants, cfl_acoustic=0.5)
        assert ctrl.dt <= 0.5 * 0.1 * grid.dx / constants.k2 * (1 + 1e-12)
        capped = choose_step_control(state, 1.0, constants, max_dt=1e-4)
        assert capped.dt == 1e-4

    def test_evolve_lands_on_sample_times(self, grid, constants):
        recorder = StateRecorder()
        ctrl = StepControl(dt=0.003)
        evolution = evolve_relaxing(smooth_state(grid), 0.5, constants, ctrl, 0.05, [recorder], sample_dt=0.01)
        assert recorder.times == sample_schedule(0.0, 0.05, 0.01)
        assert evolution.final.t == 0.05

    def test_second_order_in_time(self, grid, constants):
        state0 = smooth_state(grid)
        finals = [
            evolve_relaxing(state0, 0.5, constants, StepControl(dt=dt), 0.2).final for dt in (2e-3, 1e-3, 5e-4)
        ]
        coarse = l2_distance(finals[0], finals[1])
        fine = l2_distance(finals[1], finals[2])
        assert fine > 0.0
        assert 3.4 <= coarse / fine <= 4.6

    def test_split_evolve_matches_whole(self, grid, constants):
        solver = RelaxingSolver(grid, constants, 0.5, StepControl(dt=1e-3))
        whole = solver.evolve(smooth_state(grid), 0.1).final
        half = solver.evolve(smooth_state(grid), 0.05).final
        split = solver.evolve(half, 0.1).final
        assert split.t == whole.t
        assert l2_distance(split, whole) <= 1e-13

    def test_density_obeys_continuity(self, grid, constants):
        tau, h = 0.5, 1e-3
        recorder = StateRecorder()
        evolve_relaxing(smooth_state(grid), tau, constants, StepControl(dt=1e-4), 0.052, [recorder], sample_dt=h)
        before, mid, after = recorder.states[49:52]
        k1 = constants.k1
        ops = spectral_ops(grid)

        zeta = zeta_from_eos(mid.xi, mid.phi, constants).values
        rho = zeta + constants.rho_bar
        v = mid.vel[0].values
        continuity = -k1 * (v * ops.grad(zeta)[0] + rho * ops.grad(v)[0])
        rate = (
            zeta_from_eos(after.xi, after.phi, constants) - zeta_from_eos(before.xi, before.phi, constants)
        ).values / (after.t - before.t)
        assert np.max(np.abs(rate - continuity)) <= 1e-5

    def test_entropy_range_is_transported(self, grid, constants):
        recorder = StateRecorder()
        state0 = smooth_state(grid)
        evolve_relaxing(state0, 0.5, constants, StepControl(dt=5e-4), 0.5, [recorder], sample_dt=0.05)
        phi0 = state0.phi.values
        slack = 1e-6 * np.max(np.abs(phi0))
        for state in recorder.states:
            assert np.max(state.phi.values) <= np.max(phi0) + slack
            assert np.min(state.phi.values) >= np.min(phi0) - slack

    def test_status(self, grid, constants):
        solver = RelaxingSolver(grid, constants, 0.5, StepControl(dt=1e-3, scheme=IntegrationScheme.ETDRK4))
        solver.evolve(smooth_state(grid), 0.01)
        status = solver.get_status()
        assert status["name"] == "Relaxing Solver"
        assert status["steps_taken"] == 10
        assert "etdrk4" in status["description"]


class TestLinearization:
    def test_tangent_matches_central_difference(self, grid, constants):
        tau, eps = 0.5, 1e-6
        state = smooth_state(grid)
        direction = PerturbationState(
            t=0.0,
            xi=SpectralField.from_function(grid, lambda x: np.cos(2 * x)),
            vel=(SpectralField.from_function(grid, np.sin),),
            phi=SpectralField.from_function(grid, lambda x: np.sin(3 * x)),
        )

        def shifted(sign: float) -> PerturbationState:
            return PerturbationState(
                t=0.0,
                xi=state.xi + sign * eps * direction.xi,
                vel=(state.vel[0] + sign * eps * direction.vel[0],),
                phi=state.phi + sign * eps * direction.phi,
            )

        plus = relaxing_rhs(shifted(1.0), tau, constants)
        minus = relaxing_rhs(shifted(-1.0), tau, constants)
        tangent = relaxing_tangent(state, direction, tau, constants)

        np.testing.assert_allclose(tangent[0].values, (plus[0] - minus[0]).values / (2 * eps), atol=1e-6)
        np.testing.assert_allclose(
            tangent[1][0].values, (plus[1][0] - minus[1][0]).values / (2 * eps), atol=1e-5
        )
        np.testing.assert_allclose(tangent[2].values, (plus[2] - minus[2]).values / (2 * eps), atol=1e-6)


class TestFastTime:
    def test_fast_and_slow_runs_agree(self, grid, constants):
        tau = 0.25
        state0 = smooth_state(grid)
        ctrl = choose_step_control(state0, tau, constants, scheme=IntegrationScheme.ETDRK4)
        slow = RelaxingSolver(grid, constants, tau, ctrl).evolve(state0, 0.25).final

        fast_solver = FastTimeSolver(grid, constants, tau, ctrl.model_copy(update={"dt": ctrl.dt / tau}))
        fast = fast_solver.evolve(fast_solver.from_slow(state0), 0.25 / tau).final
        mapped = fast_solver.to_slow(fast)
        assert mapped.t == pytest.approx(0.25)
        assert l2_distance(slow, mapped) <= 1e-8

    def test_from_slow_round_trip(self, grid, constants):
        solver = FastTimeSolver(grid, constants, 0.5, StepControl(dt=1e-3))
        state = smooth_state(grid, t=0.2)
        back = solver.to_slow(solver.from_slow(state))
        assert back.t == pytest.approx(0.2)
        assert l2_distance(back, state) <= 1e-14

    def test_fast_operator_has_no_tangent(self, grid, constants):
        solver = FastTimeSolver(grid, constants, 0.5, StepControl(dt=1e-3))
        assert isinstance(solver.operator, FastTimeOperator)
        assert isinstance(solver.operator, DampedEulerOperator)
        assert not isinstance(solver.operator, RelaxingOperator)
        assert not hasattr(solver.operator, "tangent")
        assert solver.operator.rates == [0.0, 2.0, 0.0]

    def test_damped_operator_is_abstract(self, grid, constants):
        with pytest.raises(TypeError):
            DampedEulerOperator(grid, constants, 0.5, 2.0)
