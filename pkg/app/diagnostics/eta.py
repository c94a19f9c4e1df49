"""Distance to the relaxed manifold: eta = v + grad(xi) / (k1 rho).

eta obeys a damped transport equation

    eta_t + k1 v . grad eta + eta / tau^2 = F

where F collects first and second derivatives of (xi, v) only; in particular
F contains no tau. The residual of this identity certifies the relaxing
right-hand side.
"""

import logging
import math
from typing import Optional

import numpy as np

from app.models.base import GasConstants, NormConvention, check_tau
from app.models.scenario import LayerSample
from app.models.state import EtaSnapshot, PerturbationState, RelaxedState
from app.numerics.spectral import SpectralField, sobolev_norm_sq, spectral_ops, vector_sup_norm
from app.physics.eos import perturbed_density
from app.solvers.relaxed import limit_velocity, limit_velocity_rate
from app.solvers.relaxing import FieldTriple, relaxing_rhs

logger = logging.getLogger(__name__)


def _eta_arrays(state: PerturbationState, c: GasConstants) -> list[np.ndarray]:
    ops = spectral_ops(state.grid)
    rho = perturbed_density(state.xi.values, state.phi.values, c)
    return [v.values + g / (c.k1 * rho) for v, g in zip(state.vel, ops.grad(state.xi.values))]


def compute_eta(state: PerturbationState, c: GasConstants) -> EtaSnapshot:
    """eta with its H^2 norm (Fourier-multiplier convention) and sup norm."""
    eta = tuple(SpectralField(state.grid, e) for e in _eta_arrays(state, c))
    h2 = sum(sobolev_norm_sq(e, 2, NormConvention.FOURIER_MULTIPLIER) for e in eta)
    return EtaSnapshot(t=state.t, eta=eta, h2_norm_sq=h2, sup_norm=vector_sup_norm(eta))


def eta_time_derivative(
    state: PerturbationState,
    state_rhs: FieldTriple,
    c: GasConstants,
) -> list[np.ndarray]:
    """eta_t assembled from (xi_t, v_t, phi_t) and the equation-of-state chain rule."""
    ops = spectral_ops(state.grid)
    xi, phi = state.xi.values, state.phi.values
    xi_t, vel_t, phi_t = state_rhs
    rho = perturbed_density(xi, phi, c)
    p = xi + c.p_bar
    rho_t = rho / (c.gamma * p) * xi_t.values - (rho / c.gamma) * phi_t.values
    grad_xi = ops.grad(xi)
    grad_xi_t = ops.grad(xi_t.values)
    return [
        vt.values + gt / (c.k1 * rho) - rho_t * g / (c.k1 * rho**2)
        for vt, g, gt in zip(vel_t, grad_xi, grad_xi_t)
    ]


def eta_forcing(state: PerturbationState, c: GasConstants) -> list[np.ndarray]:
    """Forcing of the eta transport equation, evaluated pointwise without dealiasing."""
    ops = spectral_ops(state.grid)
    dim = state.grid.dim
    xi, phi = state.xi.values, state.phi.values
    vel = [v.values for v in state.vel]
    rho = perturbed_density(xi, phi, c)
    p = xi + c.p_bar
    gamma = c.gamma

    grad_xi = ops.grad(xi)
    grad_v = [ops.grad(v) for v in vel]
    div_v = sum(grad_v[i][i] for i in range(dim))
    grad_div_v = ops.grad(div_v)
    grad_inv_rho = ops.grad(1.0 / rho)
    grad_rho = ops.grad(rho)
    v_grad_inv_rho = sum(v * g for v, g in zip(vel, grad_inv_rho))
    v_grad_rho = sum(v * g for v, g in zip(vel, grad_rho))

    forcing = []
    for i in range(dim):
        strain = sum(grad_v[j][i] * grad_xi[j] for j in range(dim))
        forcing.append(
            v_grad_inv_rho * grad_xi[i]
            - strain / rho
            - (gamma / rho) * grad_xi[i] * div_v
            - (gamma * p / rho) * grad_div_v[i]
            + (v_grad_rho + rho * div_v) * grad_xi[i] / rho**2
        )
    return forcing


def eta_residual(
    state: PerturbationState,
    state_rhs: FieldTriple,
    tau: float,
    c: GasConstants,
) -> float:
    """Sup norm of eta_t + k1 v . grad eta + eta / tau^2 - F."""
    tau = check_tau(tau)
    ops = spectral_ops(state.grid)
    eta = _eta_arrays(state, c)
    eta_t = eta_time_derivative(state, state_rhs, c)
    forcing = eta_forcing(state, c)
    vel = [v.values for v in state.vel]

    squared = np.zeros(state.grid.shape)
    for e, e_t, f in zip(eta, eta_t, forcing):
        transport = sum(v * g for v, g in zip(vel, ops.grad(e)))
        defect = e_t + c.k1 * transport + e / tau**2 - f
        squared = squared + defect**2
    return float(np.sqrt(np.max(squared)))


def eta_velocity_identity(
    state: PerturbationState,
    tau: float,
    c: GasConstants,
    state_rhs: Optional[FieldTriple] = None,
) -> float:
    """Sup norm of eta + tau^2 (v_t + k1 (v . grad) v), which vanishes identically."""
    tau = check_tau(tau)
    if state_rhs is None:
        state_rhs = relaxing_rhs(state, tau, c)
    ops = spectral_ops(state.grid)
    vel = [v.values for v in state.vel]
    _, vel_t, _ = state_rhs
    squared = np.zeros(state.grid.shape)
    for e, v_i, vt in zip(_eta_arrays(state, c), vel, vel_t):
        advection = ops.dealias(sum(v * g for v, g in zip(vel, ops.grad(v_i))))
        defect = e + tau**2 * (vt.values + c.k1 * advection)
        squared = squared + defect**2
    return float(np.sqrt(np.max(squared)))


def eta_time_derivative_h1_sq(
    state: PerturbationState,
    tau: float,
    c: GasConstants,
    state_rhs: Optional[FieldTriple] = None,
) -> float:
    """||eta_t||^2 in H^1 (Fourier-multiplier convention)."""
    if state_rhs is None:
        state_rhs = relaxing_rhs(state, tau, c)
    return sum(
        sobolev_norm_sq(SpectralField(state.grid, e_t), 1, NormConvention.FOURIER_MULTIPLIER)
        for e_t in eta_time_derivative(state, state_rhs, c)
    )


def quasi_steady_eta(state: PerturbationState, tau: float, c: GasConstants) -> list[np.ndarray]:
    """eta on the slow manifold through (xi, phi): -tau^2 (v~_t + k1 (v~ . grad) v~).

    v~ is the limit velocity of (xi, phi) and v~_t its rate along the relaxed
    flow. The relaxing eta approaches this field after the initial layer, up
    to O(tau^4).
    """
    tau = check_tau(tau)
    ops = spectral_ops(state.grid)
    relaxed = RelaxedState(t=state.t, xi=state.xi, phi=state.phi)
    vel = [v.values for v in limit_velocity(relaxed, c)]
    vel_t = [v.values for v in limit_velocity_rate(relaxed, c)]
    out = []
    for v_i, vt in zip(vel, vel_t):
        advection = ops.dealias(sum(v * g for v, g in zip(vel, ops.grad(v_i))))
        out.append(-(tau**2) * (vt + c.k1 * advection))
    return out


def layer_sample(state: PerturbationState, tau: float, c: GasConstants) -> LayerSample:
    """||eta||, ||quasi-steady eta|| and ||eta - quasi-steady eta|| in H^2 (amplitudes)."""
    grid = state.grid
    eta = _eta_arrays(state, c)
    steady = quasi_steady_eta(state, tau, c)

    def h2(arrays: list[np.ndarray]) -> float:
        total = sum(sobolev_norm_sq(SpectralField(grid, a), 2, NormConvention.FOURIER_MULTIPLIER) for a in arrays)
        return math.sqrt(total)

    return LayerSample(
        t=state.t,
        eta_h2=h2(eta),
        quasi_steady_h2=h2(steady),
        layer_h2=h2([e - s for e, s in zip(eta, steady)]),
    )
