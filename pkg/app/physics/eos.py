"""Ideal-gas equation of state and the perturbation variables built on it.

rho = A^(-1/gamma) * p^(1/gamma) * exp(-S/gamma)

The solvers work with xi = p - p_bar and phi = S - s_bar. Densities of
perturbed states are evaluated relative to rho_bar so that the equilibrium
xi = phi = 0 maps to rho_bar and zeta = 0 exactly.
"""

import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.errors import PositivityError
from app.models.base import GasConstants, check_tau
from app.numerics.spectral import SpectralField

logger = logging.getLogger(__name__)

MIN_PRESSURE_FRACTION = 0.1
MIN_DENSITY_FRACTION = 0.5


def make_constants(gamma: float, bigA: float = 1.0, p_bar: float = 1.0, s_bar: float = 0.0) -> GasConstants:
    """Build validated gas constants; rho_bar, k1, k2 follow from them."""
    constants = GasConstants(gamma=gamma, bigA=bigA, p_bar=p_bar, s_bar=s_bar)
    logger.debug(f"Gas constants {constants.model_dump()} derived {constants.derived()}")
    return constants


def eos_density(p, s, constants: GasConstants):
    """Density from pressure and entropy; accepts scalars or arrays."""
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(p_arr <= 0.0):
        raise PositivityError(
            "equation of state requires p > 0",
            min_pressure=float(np.min(p_arr)),
        )
    gamma = constants.gamma
    rho = constants.bigA ** (-1.0 / gamma) * np.power(p_arr, 1.0 / gamma) * np.exp(-np.asarray(s) / gamma)
    if np.ndim(rho) == 0:
        return float(rho)
    return rho


def perturbed_density(xi: np.ndarray, phi: np.ndarray, constants: GasConstants) -> np.ndarray:
    """rho(p_bar + xi, s_bar + phi) written relative to rho_bar."""
    ratio = 1.0 + xi / constants.p_bar
    if np.any(ratio <= 0.0):
        raise PositivityError(
            "pressure p_bar + xi must stay positive",
            min_pressure=float(np.min(ratio)) * constants.p_bar,
        )
    gamma = constants.gamma
    return constants.rho_bar * np.exp(np.log(ratio) / gamma - phi / gamma)


def check_positivity(xi: np.ndarray, phi: np.ndarray, constants: GasConstants) -> np.ndarray:
    """Guard used by every solver stage; returns the density on success.

    Requires min(p) >= 0.1 p_bar and min(rho) >= 0.5 rho_bar.
    """
    min_pressure = float(np.min(xi)) + constants.p_bar
    if min_pressure < MIN_PRESSURE_FRACTION * constants.p_bar:
        raise PositivityError(
            f"pressure fell below {MIN_PRESSURE_FRACTION} p_bar",
            min_pressure=min_pressure,
        )
    rho = perturbed_density(xi, phi, constants)
    min_density = float(np.min(rho))
    if min_density < MIN_DENSITY_FRACTION * constants.rho_bar:
        raise PositivityError(
            f"density fell below {MIN_DENSITY_FRACTION} rho_bar",
            min_pressure=min_pressure,
            min_density=min_density,
        )
    return rho


def zeta_from_eos(xi: SpectralField, phi: SpectralField, constants: GasConstants) -> SpectralField:
    """Density perturbation zeta = rho(p_bar + xi, s_bar + phi) - rho_bar."""
    rho = perturbed_density(xi.values, phi.values, constants)
    return SpectralField(xi.grid, rho - constants.rho_bar)


def density_derivatives(rho: np.ndarray, p: np.ndarray, gamma: float) -> dict[str, np.ndarray]:
    """First and second partials of rho(p, S) evaluated pointwise."""
    return {
        "p": rho / (gamma * p),
        "s": -rho / gamma,
        "pp": (1.0 / gamma) * (1.0 / gamma - 1.0) * rho / p**2,
        "ps": -rho / (gamma**2 * p),
        "ss": rho / gamma**2,
    }


class FlowSnapshot(BaseModel):
    """Physical (p, u, S) at one time; values may be scalars, arrays or fields."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    p: Any
    u: Any
    s: Any


def rescale_fast_to_slow(snapshot: FlowSnapshot, tau: float) -> FlowSnapshot:
    """Fast time t' and velocity u_hat to slow time t = tau t' and u = u_hat / tau."""
    tau = check_tau(tau)
    u = tuple(c / tau for c in snapshot.u) if isinstance(snapshot.u, tuple) else snapshot.u / tau
    return FlowSnapshot(t=tau * snapshot.t, p=snapshot.p, u=u, s=snapshot.s)


def rescale_slow_to_fast(snapshot: FlowSnapshot, tau: float) -> FlowSnapshot:
    """Inverse of rescale_fast_to_slow."""
    tau = check_tau(tau)
    u = tuple(c * tau for c in snapshot.u) if isinstance(snapshot.u, tuple) else snapshot.u * tau
    return FlowSnapshot(t=snapshot.t / tau, p=snapshot.p, u=u, s=snapshot.s)
