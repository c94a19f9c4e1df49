"""Slow-time relaxing system and its fast-time counterpart.

Slow time, variables (xi, v, phi) with v = u / k1:

    xi_t  = -k2 div v - gamma k1 xi div v - k1 v . grad xi
    v_t   = -(1/tau^2) (v + grad xi / (k1 rho)) - k1 (v . grad) v
    phi_t = -k1 v . grad phi

The damping -v/tau^2 is integrated exactly; everything else is the
explicit remainder, with every product dealiased.
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from app.errors import StepSizeError
from app.models.base import GasConstants, IntegrationScheme, TorusGrid, check_tau
from app.models.state import PerturbationState, StepControl
from app.numerics.spectral import SpectralField, spectral_ops
from app.physics.eos import FlowSnapshot, check_positivity, rescale_fast_to_slow, rescale_slow_to_fast
from app.solvers.base_solver import BaseSolver, Evolution, Observer
from app.solvers.integrators import Components, etdrk4_step, strang_step

logger = logging.getLogger(__name__)

FieldTriple = tuple[SpectralField, tuple[SpectralField, ...], SpectralField]

EXPENSIVE_TAU = 1e-3
STEP_TOLERANCE = 1e-12


def pack_state(state: PerturbationState) -> Components:
    return [state.xi.values, *(v.values for v in state.vel), state.phi.values]


def unpack_state(grid: TorusGrid, u: Components, t: float) -> PerturbationState:
    return PerturbationState(
        t=t,
        xi=SpectralField(grid, u[0]),
        vel=tuple(SpectralField(grid, v) for v in u[1:-1]),
        phi=SpectralField(grid, u[-1]),
    )


def _as_triple(grid: TorusGrid, u: Components) -> FieldTriple:
    return (
        SpectralField(grid, u[0]),
        tuple(SpectralField(grid, v) for v in u[1:-1]),
        SpectralField(grid, u[-1]),
    )


def _dot(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> np.ndarray:
    return sum(x * y for x, y in zip(a, b))


class DampedEulerOperator(ABC):
    """Damped Euler system on one grid: exact linear velocity damping plus an explicit remainder.

    rates holds the damping rate of each packed component (xi, v..., phi).
    """

    def __init__(self, grid: TorusGrid, constants: GasConstants, tau: float, damping: float):
        self.grid = grid
        self.constants = constants
        self.tau = tau
        self.ops = spectral_ops(grid)
        self.rates = [0.0] + [damping] * grid.dim + [0.0]

    @abstractmethod
    def remainder(self, u: Components) -> Components:
        """Everything except the exact damping term."""
        pass

    @abstractmethod
    def step_limits(self, u: Components, cfl_acoustic: float, cfl_advective: float) -> tuple[float, float]:
        """(acoustic, advective) step limits in the operator's time variable."""
        pass

    def rhs(self, u: Components) -> Components:
        rem = self.remainder(u)
        return [r - rate * ui for r, rate, ui in zip(rem, self.rates, u)]


class RelaxingOperator(DampedEulerOperator):
    """Right-hand side, remainder and linearization of the slow-time system."""

    def __init__(self, grid: TorusGrid, constants: GasConstants, tau: float):
        tau = check_tau(tau)
        super().__init__(grid, constants, tau, 1.0 / tau**2)
        self.inv_tau2 = 1.0 / tau**2

    def remainder(self, u: Components) -> Components:
        """Everything except the exact damping term -v/tau^2."""
        c = self.constants
        ops = self.ops
        k1, k2, gamma = c.k1, c.k2, c.gamma
        xi, vel, phi = u[0], u[1:-1], u[-1]
        rho = check_positivity(xi, phi, c)

        grad_xi = ops.grad(xi)
        grad_phi = ops.grad(phi)
        grad_v = [ops.grad(vi) for vi in vel]
        div_v = sum(grad_v[i][i] for i in range(self.grid.dim))

        xi_t = -k2 * div_v - ops.dealias(gamma * k1 * xi * div_v + k1 * _dot(vel, grad_xi))
        slack = 1.0 / c.rho_bar - 1.0 / rho
        vel_t = [
            -self.inv_tau2 * k2 * grad_xi[i]
            + ops.dealias((self.inv_tau2 / k1) * slack * grad_xi[i] - k1 * _dot(vel, grad_v[i]))
            for i in range(self.grid.dim)
        ]
        phi_t = -k1 * ops.dealias(_dot(vel, grad_phi))
        return [xi_t, *vel_t, phi_t]

    def tangent(self, u: Components, du: Components) -> Components:
        """Directional derivative of rhs at u along du."""
        c = self.constants
        ops = self.ops
        k1, k2, gamma = c.k1, c.k2, c.gamma
        dim = self.grid.dim
        xi, vel, phi = u[0], u[1:-1], u[-1]
        dxi, dvel, dphi = du[0], du[1:-1], du[-1]
        rho = check_positivity(xi, phi, c)
        p = xi + c.p_bar
        drho = rho / (gamma * p) * dxi - (rho / gamma) * dphi

        grad_xi, grad_dxi = ops.grad(xi), ops.grad(dxi)
        grad_phi, grad_dphi = ops.grad(phi), ops.grad(dphi)
        grad_v = [ops.grad(vi) for vi in vel]
        grad_dv = [ops.grad(vi) for vi in dvel]
        div_v = sum(grad_v[i][i] for i in range(dim))
        div_dv = sum(grad_dv[i][i] for i in range(dim))

        dxi_t = -k2 * div_dv - ops.dealias(
            gamma * k1 * (dxi * div_v + xi * div_dv)
            + k1 * (_dot(dvel, grad_xi) + _dot(vel, grad_dxi))
        )
        slack = 1.0 / c.rho_bar - 1.0 / rho
        dvel_t = [
            -self.inv_tau2 * (dvel[i] + k2 * grad_dxi[i])
            + ops.dealias(
                (self.inv_tau2 / k1) * (slack * grad_dxi[i] + drho / rho**2 * grad_xi[i])
                - k1 * (_dot(dvel, grad_v[i]) + _dot(vel, grad_dv[i]))
            )
            for i in range(dim)
        ]
        dphi_t = -k1 * ops.dealias(_dot(dvel, grad_phi) + _dot(vel, grad_dphi))
        return [dxi_t, *dvel_t, dphi_t]

    def step_limits(self, u: Components, cfl_acoustic: float, cfl_advective: float) -> tuple[float, float]:
        dx = self.grid.dx
        acoustic = cfl_acoustic * self.tau * dx / self.constants.k2
        speed = self.constants.k1 * float(np.sqrt(np.max(sum(v**2 for v in u[1:-1]))))
        advective = cfl_advective * dx / speed if speed > 0.0 else float("inf")
        return acoustic, advective


class FastTimeOperator(DampedEulerOperator):
    """Fast-time damped Euler system in (xi, u_hat, phi):

        xi_t'    = -u_hat . grad xi - gamma p div u_hat
        u_hat_t' = -(u_hat . grad) u_hat - grad xi / rho - u_hat / tau
        phi_t'   = -u_hat . grad phi
    """

    def __init__(self, grid: TorusGrid, constants: GasConstants, tau: float):
        tau = check_tau(tau)
        super().__init__(grid, constants, tau, 1.0 / tau)

    def remainder(self, u: Components) -> Components:
        c = self.constants
        ops = self.ops
        gamma = c.gamma
        xi, vel, phi = u[0], u[1:-1], u[-1]
        rho = check_positivity(xi, phi, c)

        grad_xi = ops.grad(xi)
        grad_phi = ops.grad(phi)
        grad_v = [ops.grad(vi) for vi in vel]
        div_v = sum(grad_v[i][i] for i in range(self.grid.dim))

        xi_t = -gamma * c.p_bar * div_v - ops.dealias(gamma * xi * div_v + _dot(vel, grad_xi))
        slack = 1.0 / c.rho_bar - 1.0 / rho
        vel_t = [
            -grad_xi[i] / c.rho_bar + ops.dealias(slack * grad_xi[i] - _dot(vel, grad_v[i]))
            for i in range(self.grid.dim)
        ]
        phi_t = -ops.dealias(_dot(vel, grad_phi))
        return [xi_t, *vel_t, phi_t]

    def step_limits(self, u: Components, cfl_acoustic: float, cfl_advective: float) -> tuple[float, float]:
        dx = self.grid.dx
        acoustic = cfl_acoustic * dx / self.constants.k2
        speed = float(np.sqrt(np.max(sum(v**2 for v in u[1:-1]))))
        advective = cfl_advective * dx / speed if speed > 0.0 else float("inf")
        return acoustic, advective


class RelaxingSolver(BaseSolver[PerturbationState]):
    """Slow-time integrator for the relaxing system."""

    def __init__(self, grid: TorusGrid, constants: GasConstants, tau: float, control: StepControl):
        super().__init__(control.dt)
        self.control = control
        self.operator = self._make_operator(grid, constants, tau)
        self.tau = self.operator.tau
        if self.tau < EXPENSIVE_TAU:
            logger.warning(
                f"tau={self.tau:g} < {EXPENSIVE_TAU:g}: the acoustic CFL forces dt <= "
                f"{control.cfl_acoustic * self.tau * grid.dx / constants.k2:.3g}, runs will be expensive"
            )

    def _make_operator(self, grid: TorusGrid, constants: GasConstants, tau: float) -> DampedEulerOperator:
        return RelaxingOperator(grid, constants, tau)

    @property
    def name(self) -> str:
        return "Relaxing Solver"

    @property
    def description(self) -> str:
        return f"Slow-time damped Euler, tau={self.tau:g}, scheme={self.control.scheme.value}"

    def step(self, state: PerturbationState, dt: Optional[float] = None) -> PerturbationState:
        h = self.dt if dt is None else dt
        u = pack_state(state)
        acoustic, advective = self.operator.step_limits(
            u, self.control.cfl_acoustic, self.control.cfl_advective
        )
        limit = min(acoustic, advective)
        if h > limit * (1.0 + STEP_TOLERANCE):
            kind = "acoustic" if acoustic <= advective else "advective"
            raise StepSizeError(f"dt={h:.6g} exceeds the {kind} CFL limit {limit:.6g}", dt=h, limit=limit)

        if self.control.scheme == IntegrationScheme.ETDRK4:
            u_next = etdrk4_step(u, h, self.operator.rates, self.operator.remainder)
        else:
            u_next = strang_step(u, h, self.operator.rates, self.operator.remainder)
        # Guard the accepted state too, not only the stage values.
        check_positivity(u_next[0], u_next[-1], self.operator.constants)
        return unpack_state(state.grid, u_next, state.t + h)


class FastTimeSolver(RelaxingSolver):
    """Fast-time integrator; states carry t' and u_hat in place of t and v."""

    def _make_operator(self, grid: TorusGrid, constants: GasConstants, tau: float) -> DampedEulerOperator:
        return FastTimeOperator(grid, constants, tau)

    @property
    def name(self) -> str:
        return "Fast-Time Solver"

    @property
    def description(self) -> str:
        return f"Fast-time damped Euler, tau={self.tau:g}, scheme={self.control.scheme.value}"

    def to_slow(self, fast_state: PerturbationState) -> PerturbationState:
        """Map (t', xi, u_hat, phi) to slow time (t, xi, v = u_hat / (tau k1), phi)."""
        k1 = self.operator.constants.k1
        snapshot = rescale_fast_to_slow(
            FlowSnapshot(t=fast_state.t, p=fast_state.xi, u=fast_state.vel, s=fast_state.phi), self.tau
        )
        return PerturbationState(
            t=snapshot.t,
            xi=snapshot.p,
            vel=tuple(component / k1 for component in snapshot.u),
            phi=snapshot.s,
        )

    def from_slow(self, state: PerturbationState) -> PerturbationState:
        k1 = self.operator.constants.k1
        snapshot = rescale_slow_to_fast(
            FlowSnapshot(t=state.t, p=state.xi, u=tuple(v * k1 for v in state.vel), s=state.phi), self.tau
        )
        return PerturbationState(t=snapshot.t, xi=snapshot.p, vel=snapshot.u, phi=snapshot.s)


def relaxing_rhs(state: PerturbationState, tau: float, c: GasConstants) -> FieldTriple:
    """(xi_t, v_t, phi_t) of the slow-time relaxing system."""
    operator = RelaxingOperator(state.grid, c, tau)
    return _as_triple(state.grid, operator.rhs(pack_state(state)))


def relaxing_tangent(
    state: PerturbationState,
    direction: PerturbationState | FieldTriple,
    tau: float,
    c: GasConstants,
) -> FieldTriple:
    """Linearization of relaxing_rhs at state, applied to direction."""
    if isinstance(direction, PerturbationState):
        du = pack_state(direction)
    else:
        dxi, dvel, dphi = direction
        du = [dxi.values, *(v.values for v in dvel), dphi.values]
    operator = RelaxingOperator(state.grid, c, tau)
    return _as_triple(state.grid, operator.tangent(pack_state(state), du))


def choose_step_control(
    state: PerturbationState,
    tau: float,
    c: GasConstants,
    cfl_acoustic: float = 0.5,
    cfl_advective: float = 0.5,
    scheme: IntegrationScheme = IntegrationScheme.STRANG,
    max_dt: Optional[float] = None,
    advective_margin: float = 0.5,
) -> StepControl:
    """Largest step the CFL limits allow at state, with a margin on the advective limit."""
    operator = RelaxingOperator(state.grid, c, tau)
    acoustic, advective = operator.step_limits(pack_state(state), cfl_acoustic, cfl_advective)
    dt = min(acoustic, advective_margin * advective)
    if max_dt is not None:
        dt = min(dt, max_dt)
    return StepControl(dt=dt, cfl_acoustic=cfl_acoustic, cfl_advective=cfl_advective, scheme=scheme)


def step_relaxing(state: PerturbationState, tau: float, c: GasConstants, ctrl: StepControl) -> PerturbationState:
    """One step of size ctrl.dt."""
    return RelaxingSolver(state.grid, c, tau, ctrl).step(state)


def evolve_relaxing(
    state0: PerturbationState,
    tau: float,
    c: GasConstants,
    ctrl: StepControl,
    t_end: float,
    observers: Sequence[Observer] = (),
    sample_dt: Optional[float] = None,
) -> Evolution[PerturbationState]:
    """Evolve to t_end, landing exactly on every sample time and on t_end."""
    return RelaxingSolver(state0.grid, c, tau, ctrl).evolve(state0, t_end, observers, sample_dt)
