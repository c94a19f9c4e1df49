"""Relaxed limit in parabolic-hyperbolic form.

    xi_t  = (gamma p / (a rho)) lap xi + (p / (a rho)) grad xi . grad phi
    phi_t = (1 / (a rho)) grad xi . grad phi

with p = xi + p_bar and rho from the equation of state. The limit velocity
is slaved: v = -grad xi / (k1 rho).
"""

import logging
from typing import Optional, Sequence

import numpy as np

from app.errors import StepSizeError
from app.models.base import GasConstants, TorusGrid
from app.models.state import RelaxedState
from app.numerics.spectral import SpectralField, spectral_ops
from app.physics.eos import check_positivity, perturbed_density
from app.solvers.base_solver import BaseSolver, Evolution, Observer

logger = logging.getLogger(__name__)

DRIFT_SAFETY = 0.5
STEP_TOLERANCE = 1e-12


class RelaxedOperator:
    """Right-hand side of the relaxed system on one grid."""

    def __init__(self, grid: TorusGrid, constants: GasConstants):
        self.grid = grid
        self.constants = constants
        self.ops = spectral_ops(grid)

    def diffusivity(self, xi: np.ndarray, phi: np.ndarray) -> np.ndarray:
        c = self.constants
        rho = check_positivity(xi, phi, c)
        return c.gamma * (xi + c.p_bar) / (c.a_const * rho)

    def rhs(self, xi: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c = self.constants
        ops = self.ops
        rho = check_positivity(xi, phi, c)
        p = xi + c.p_bar
        grad_xi = ops.grad(xi)
        grad_phi = ops.grad(phi)
        coupling = sum(a * b for a, b in zip(grad_xi, grad_phi))
        xi_t = ops.dealias(
            c.gamma * p / (c.a_const * rho) * ops.laplacian(xi) + p / (c.a_const * rho) * coupling
        )
        phi_t = ops.dealias(coupling / (c.a_const * rho))
        return xi_t, phi_t

    def max_drift(self, xi: np.ndarray, phi: np.ndarray) -> float:
        """Largest transport speed of either equation."""
        c = self.constants
        rho = check_positivity(xi, phi, c)
        p = xi + c.p_bar
        grad_xi = self.ops.grad(xi)
        grad_phi = self.ops.grad(phi)
        phi_drift = np.sqrt(sum(g**2 for g in grad_xi)) / (c.a_const * rho)
        xi_drift = p * np.sqrt(sum(g**2 for g in grad_phi)) / (c.a_const * rho)
        return float(max(np.max(phi_drift), np.max(xi_drift)))


class RelaxedSolver(BaseSolver[RelaxedState]):
    """Integrating-factor midpoint scheme.

    The constant-coefficient part D_bar lap xi, with D_bar the grid maximum
    of gamma p / (a rho) at the start of the step, is integrated exactly in
    Fourier space; the remainder is explicit with a midpoint correction.
    """

    def __init__(self, grid: TorusGrid, constants: GasConstants, dt: float):
        super().__init__(dt)
        self.operator = RelaxedOperator(grid, constants)

    @property
    def name(self) -> str:
        return "Relaxed Solver"

    @property
    def description(self) -> str:
        return "Parabolic-hyperbolic relaxed limit, integrating-factor midpoint"

    def step(self, state: RelaxedState, dt: Optional[float] = None) -> RelaxedState:
        h = self.dt if dt is None else dt
        op = self.operator
        ops = op.ops
        xi, phi = state.xi.values, state.phi.values

        drift = op.max_drift(xi, phi)
        if drift > 0.0:
            limit = DRIFT_SAFETY * state.grid.dx / drift
            if h > limit * (1.0 + STEP_TOLERANCE):
                raise StepSizeError(f"dt={h:.6g} exceeds the drift limit {limit:.6g}", dt=h, limit=limit)

        d_bar = float(np.max(op.diffusivity(xi, phi)))
        half = np.exp(-d_bar * ops.k_squared * (h / 2.0))
        full = half * half

        def remainder(x: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            x_t, f_t = op.rhs(x, f)
            return x_t - d_bar * ops.laplacian(x), f_t

        r_xi, r_phi = remainder(xi, phi)
        xi_mid = ops.inverse(half * ops.forward(xi + 0.5 * h * r_xi))
        phi_mid = phi + 0.5 * h * r_phi

        r_xi, r_phi = remainder(xi_mid, phi_mid)
        xi_next = ops.inverse(full * ops.forward(xi) + h * half * ops.forward(r_xi))
        phi_next = phi + h * r_phi

        check_positivity(xi_next, phi_next, op.constants)
        return RelaxedState(
            t=state.t + h,
            xi=SpectralField(state.grid, xi_next),
            phi=SpectralField(state.grid, phi_next),
        )


def relaxed_rhs(state: RelaxedState, c: GasConstants) -> tuple[SpectralField, SpectralField]:
    """(xi_t, phi_t) of the relaxed system."""
    xi_t, phi_t = RelaxedOperator(state.grid, c).rhs(state.xi.values, state.phi.values)
    return SpectralField(state.grid, xi_t), SpectralField(state.grid, phi_t)


def step_relaxed(state: RelaxedState, c: GasConstants, dt: float) -> RelaxedState:
    return RelaxedSolver(state.grid, c, dt).step(state)


def limit_velocity(state: RelaxedState, c: GasConstants) -> tuple[SpectralField, ...]:
    """v = -grad xi / (k1 rho), pointwise."""
    ops = spectral_ops(state.grid)
    rho = perturbed_density(state.xi.values, state.phi.values, c)
    return tuple(
        SpectralField(state.grid, -g / (c.k1 * rho)) for g in ops.grad(state.xi.values)
    )


def limit_velocity_rate(state: RelaxedState, c: GasConstants) -> tuple[SpectralField, ...]:
    """Slow-time derivative of the limit velocity along the relaxed flow."""
    ops = spectral_ops(state.grid)
    xi, phi = state.xi.values, state.phi.values
    xi_t, phi_t = RelaxedOperator(state.grid, c).rhs(xi, phi)
    rho = perturbed_density(xi, phi, c)
    rho_t = rho / (c.gamma * (xi + c.p_bar)) * xi_t - (rho / c.gamma) * phi_t
    return tuple(
        SpectralField(state.grid, -gt / (c.k1 * rho) + g * rho_t / (c.k1 * rho**2))
        for g, gt in zip(ops.grad(xi), ops.grad(xi_t))
    )


def evolve_relaxed(
    state0: RelaxedState,
    c: GasConstants,
    dt: float,
    t_end: float,
    observers: Sequence[Observer] = (),
    sample_dt: Optional[float] = None,
) -> Evolution[RelaxedState]:
    return RelaxedSolver(state0.grid, c, dt).evolve(state0, t_end, observers, sample_dt)
