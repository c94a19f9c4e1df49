"""Analytic-oracle checks of both solvers (backs the ``oracle-check`` command)."""

import logging
import math
from typing import Callable

import numpy as np

from app.diagnostics.oracles import heat_mode_factor, linear_mode_fields
from app.harness.scenario import synthesize_modes
from app.models.base import GasConstants, IntegrationScheme, TorusGrid
from app.models.reports import OracleCheck
from app.models.scenario import ModeSpec
from app.models.state import PerturbationState, RelaxedState, StepControl
from app.numerics.spectral import SpectralField, l2_norm_sq
from app.solvers.relaxed import RelaxedSolver
from app.solvers.relaxing import FastTimeSolver, RelaxingSolver, choose_step_control

logger = logging.getLogger(__name__)


def _unit_mode(grid: TorusGrid) -> list[int]:
    return [1] + [0] * (grid.dim - 1)


def _l2_distance(a: PerturbationState, b: PerturbationState) -> float:
    total = l2_norm_sq(a.xi - b.xi) + l2_norm_sq(a.phi - b.phi)
    total += sum(l2_norm_sq(x - y) for x, y in zip(a.vel, b.vel))
    return math.sqrt(total)


def check_linear_mode(grid: TorusGrid, c: GasConstants) -> float:
    """Single acoustic mode, amplitude 1e-6, tau=1, T=1, dt=1e-3."""
    k = _unit_mode(grid)
    xi0, vel0 = linear_mode_fields(grid, k, 1.0, c, 1e-6, 0.0)
    state0 = PerturbationState(t=0.0, xi=xi0, vel=vel0, phi=SpectralField.zeros(grid))
    final = RelaxingSolver(grid, c, 1.0, StepControl(dt=1e-3)).evolve(state0, 1.0).final
    xi_t, vel_t = linear_mode_fields(grid, k, 1.0, c, 1e-6, 1.0)
    exact = PerturbationState(t=1.0, xi=xi_t, vel=vel_t, phi=SpectralField.zeros(grid))
    return float(_l2_distance(final, exact))


def check_exact_damping(grid: TorusGrid, c: GasConstants) -> float:
    """Uniform velocity over 1000 steps for tau in {1, 1/4, 1/16}; worst relative error."""
    worst = 0.0
    v0 = 0.1
    for tau in (1.0, 0.25, 0.0625):
        acoustic = 0.5 * tau * grid.dx / c.k2
        dt = min(5.0 * tau**2 / 1000.0, acoustic)
        zero = SpectralField.zeros(grid)
        state = PerturbationState(
            t=0.0, xi=zero, vel=(SpectralField.constant(grid, v0),) + (zero,) * (grid.dim - 1), phi=zero
        )
        solver = RelaxingSolver(grid, c, tau, StepControl(dt=dt))
        for _ in range(1000):
            state = solver.step(state)
        expected = v0 * math.exp(-1000 * dt / tau**2)
        worst = max(worst, float(np.max(np.abs(state.vel[0].values - expected))) / expected)
    return float(worst)


def check_heat_mode(grid: TorusGrid, c: GasConstants) -> float:
    """Relaxed linear-regime mode against exp(-k2^2 |k|^2 t) at T=0.1."""
    k = _unit_mode(grid)
    xi0 = SpectralField(grid, synthesize_modes(grid, [ModeSpec(k=k, amplitude=1e-6)]))
    state0 = RelaxedState(t=0.0, xi=xi0, phi=SpectralField.zeros(grid))
    final = RelaxedSolver(grid, c, 1e-3).evolve(state0, 0.1).final
    index = (1,) + (0,) * (grid.dim - 1)
    ratio = abs(final.xi.coeffs[index]) / abs(xi0.coeffs[index])
    k_norm = 2.0 * math.pi / grid.length
    expected = heat_mode_factor(k_norm, c, 0.1)
    return float(abs(ratio - expected) / expected)


def check_rescaling(grid: TorusGrid, c: GasConstants) -> float:
    """Slow-time run against the fast-time run mapped back, tau=1/4, T=0.25."""
    tau, t_end = 0.25, 0.25
    k = _unit_mode(grid)
    xi = synthesize_modes(grid, [ModeSpec(k=k, amplitude=0.05)])
    phi = synthesize_modes(grid, [ModeSpec(k=k, amplitude=0.02, phase=math.pi / 2)])
    offset = synthesize_modes(grid, [ModeSpec(k=k, amplitude=0.05)])
    zero = np.zeros(grid.shape)
    state0 = PerturbationState(
        t=0.0,
        xi=SpectralField(grid, xi),
        vel=(SpectralField(grid, offset),) + tuple(SpectralField(grid, zero) for _ in range(grid.dim - 1)),
        phi=SpectralField(grid, phi),
    )
    ctrl = choose_step_control(state0, tau, c, scheme=IntegrationScheme.ETDRK4)
    slow = RelaxingSolver(grid, c, tau, ctrl).evolve(state0, t_end).final

    fast_ctrl = ctrl.model_copy(update={"dt": ctrl.dt / tau})
    fast_solver = FastTimeSolver(grid, c, tau, fast_ctrl)
    fast = fast_solver.evolve(fast_solver.from_slow(state0), t_end / tau).final
    return float(_l2_distance(slow, fast_solver.to_slow(fast)))


CHECKS: list[tuple[str, str, Callable[[TorusGrid, GasConstants], float], float]] = [
    ("linear_mode", "acoustic mode vs exact linear solution (L2)", check_linear_mode, 1e-9),
    ("exact_damping", "uniform velocity decay vs exp(-t/tau^2) (relative)", check_exact_damping, 1e-12),
    ("heat_mode", "relaxed mode factor vs exp(-k2^2 k^2 t) (relative)", check_heat_mode, 1e-5),
    ("rescaling", "slow-time vs rescaled fast-time run (L2)", check_rescaling, 1e-8),
]


def run_oracle_checks(grid: TorusGrid, c: GasConstants) -> list[OracleCheck]:
    """Run every oracle check; a check that raises is reported as failed."""
    results = []
    for name, description, check, tolerance in CHECKS:
        try:
            error = float(check(grid, c))
        except Exception as e:
            logger.error(f"Oracle check {name} raised: {e}")
            error = float("inf")
        passed = bool(error <= tolerance)
        results.append(OracleCheck(name=name, description=description, error=error, tolerance=tolerance, passed=passed))
        logger.info(f"Oracle check {name}: error={error:.3e} tol={tolerance:.0e} {'PASS' if passed else 'FAIL'}")
    return results
