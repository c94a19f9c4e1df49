"""Energy functionals of the relaxing (E family) and relaxed (F family) solutions.

Every functional is a sum of squared L2 norms of mixed space/time
derivatives in the multi-index convention. Time derivatives are obtained by
applying the right-hand side to itself (and the equation-of-state chain rule
for zeta), never by differencing snapshots.
"""

import logging
from typing import Sequence

import numpy as np

from app.models.base import GasConstants, NormConvention, check_tau
from app.models.reports import EnergyReport
from app.models.state import PerturbationState, RelaxedState
from app.numerics.spectral import SpectralField, l2_norm_sq, sobolev_norm_sq, spectral_ops
from app.physics.eos import density_derivatives, perturbed_density
from app.solvers.relaxed import relaxed_rhs
from app.solvers.relaxing import RelaxingOperator, pack_state

logger = logging.getLogger(__name__)

ENERGY_ORDER = 4
MAX_TIME_ORDER = 2

# jet[l][i]: l-th time derivative of component i
Jet = list[list[SpectralField]]


class TimeJets:
    """(xi, v, phi, zeta) and their slow-time derivatives up to a fixed order."""

    def __init__(self, xi: Jet, vel: Jet, phi: Jet, zeta: Jet):
        self.xi = xi
        self.vel = vel
        self.phi = phi
        self.zeta = zeta

    @property
    def order(self) -> int:
        return len(self.xi) - 1


def time_derivatives(
    state: PerturbationState,
    tau: float,
    c: GasConstants,
    order: int = MAX_TIME_ORDER,
) -> TimeJets:
    """Jets up to the given order (0, 1 or 2) by right-hand-side recursion."""
    if not 0 <= order <= MAX_TIME_ORDER:
        raise ValueError(f"time-derivative order must be in [0, {MAX_TIME_ORDER}], got {order}")
    grid = state.grid
    operator = RelaxingOperator(grid, c, check_tau(tau))
    u = pack_state(state)
    levels = [u]
    if order >= 1:
        levels.append(operator.rhs(u))
    if order >= 2:
        levels.append(operator.tangent(u, levels[1]))

    xi, phi = u[0], u[-1]
    rho = perturbed_density(xi, phi, c)
    d = density_derivatives(rho, xi + c.p_bar, c.gamma)
    zeta = [rho - c.rho_bar]
    if order >= 1:
        xi_t, phi_t = levels[1][0], levels[1][-1]
        zeta.append(d["p"] * xi_t + d["s"] * phi_t)
    if order >= 2:
        xi_tt, phi_tt = levels[2][0], levels[2][-1]
        zeta.append(
            d["p"] * xi_tt
            + d["s"] * phi_tt
            + d["pp"] * xi_t**2
            + 2.0 * d["ps"] * xi_t * phi_t
            + d["ss"] * phi_t**2
        )

    def wrap(arrays: Sequence[np.ndarray]) -> list[SpectralField]:
        return [SpectralField(grid, a) for a in arrays]

    return TimeJets(
        xi=[wrap([lv[0]]) for lv in levels],
        vel=[wrap(lv[1:-1]) for lv in levels],
        phi=[wrap([lv[-1]]) for lv in levels],
        zeta=[wrap([z]) for z in zeta],
    )


def jet_energy(jet: Jet, total_order: int = ENERGY_ORDER) -> float:
    """sum over l, components of ||d_t^l f||^2 in H^{total_order - l}."""
    return sum(
        sobolev_norm_sq(component, total_order - level, NormConvention.MULTI_INDEX)
        for level, components in enumerate(jet)
        for component in components
    )


def energy_report(state: PerturbationState, tau: float, c: GasConstants) -> EnergyReport:
    """E[xi], E[tau v], E[v], E[phi], E[zeta] and E_X[xi] at the state's time."""
    tau = check_tau(tau)
    jets = time_derivatives(state, tau, c)
    e_xi = jet_energy(jets.xi)
    e_v = jet_energy(jets.vel)
    return EnergyReport(
        t=state.t,
        e_xi=e_xi,
        e_v=e_v,
        e_tau_v=tau**2 * e_v,
        e_phi=jet_energy(jets.phi),
        e_zeta=jet_energy(jets.zeta),
        e_x_xi=max(e_xi - l2_norm_sq(state.xi), 0.0),
    )


def _f_energy(
    fields: Sequence[SpectralField],
    rates: Sequence[SpectralField],
    space_order: int = 4,
    rate_order: int = 2,
) -> float:
    total = sum(sobolev_norm_sq(f, space_order, NormConvention.MULTI_INDEX) for f in fields)
    return total + sum(sobolev_norm_sq(f, rate_order, NormConvention.MULTI_INDEX) for f in rates)


def relaxed_energy_report(state: RelaxedState, c: GasConstants) -> EnergyReport:
    """F family on a relaxed state.

    F[f] = sum_{|a|<=4} ||D^a f||^2 + sum_{|a|<=2} ||D^a f_t||^2; the tilde
    variant uses orders 5 and 3.
    """
    grid = state.grid
    ops = spectral_ops(grid)
    xi, phi = state.xi.values, state.phi.values
    xi_t_field, phi_t_field = relaxed_rhs(state, c)
    xi_t, phi_t = xi_t_field.values, phi_t_field.values

    rho = perturbed_density(xi, phi, c)
    d = density_derivatives(rho, xi + c.p_bar, c.gamma)
    rho_t = d["p"] * xi_t + d["s"] * phi_t
    grad_xi = ops.grad(xi)
    grad_xi_t = ops.grad(xi_t)
    vel = [SpectralField(grid, -g / (c.k1 * rho)) for g in grad_xi]
    vel_t = [
        SpectralField(grid, -gt / (c.k1 * rho) + g * rho_t / (c.k1 * rho**2))
        for g, gt in zip(grad_xi, grad_xi_t)
    ]
    zeta = SpectralField(grid, rho - c.rho_bar)
    zeta_t = SpectralField(grid, rho_t)

    f_xi = _f_energy([state.xi], [xi_t_field])
    family = {
        "f_xi": f_xi,
        "f_tilde_xi": _f_energy([state.xi], [xi_t_field], 5, 3),
        "f_x_xi": max(f_xi - l2_norm_sq(state.xi), 0.0),
        "f_v": _f_energy(vel, vel_t),
        "f_phi": _f_energy([state.phi], [phi_t_field]),
        "f_zeta": _f_energy([zeta], [zeta_t]),
    }
    return EnergyReport(t=state.t, f_family=family)
