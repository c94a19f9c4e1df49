"""Initial data synthesis from scenario mode lists."""

import logging
import math
from typing import Sequence

import numpy as np

from app.diagnostics.eta import compute_eta
from app.models.base import GasConstants, Preparation, TorusGrid, check_tau
from app.models.scenario import ModeSpec, Scenario
from app.models.state import PerturbationState, RelaxedState
from app.numerics.spectral import SpectralField, spectral_ops
from app.physics.eos import check_positivity

logger = logging.getLogger(__name__)


def synthesize_modes(grid: TorusGrid, modes: Sequence[ModeSpec]) -> np.ndarray:
    """sum of amplitude * sin(k . x + phase) over the grid."""
    values = np.zeros(grid.shape)
    coords = grid.coordinates()
    scale = 2.0 * math.pi / grid.length
    for mode in modes:
        phase = sum(scale * m * x for m, x in zip(mode.k, coords))
        values = values + mode.amplitude * np.sin(phase + mode.phase)
    return values


def well_prepared_velocity(xi: np.ndarray, phi: np.ndarray, grid: TorusGrid, c: GasConstants) -> list[np.ndarray]:
    """v = -grad xi / (k1 rho), the relaxed-manifold velocity."""
    rho = check_positivity(xi, phi, c)
    return [-g / (c.k1 * rho) for g in spectral_ops(grid).grad(xi)]


def build_initial_state(sc: Scenario, tau: float) -> PerturbationState:
    """Fields from the mode lists; the preparation rule fixes v0.

    The profiles do not depend on tau; tau is validated only.
    """
    check_tau(tau)
    grid = sc.grid
    xi = synthesize_modes(grid, sc.xi0)
    phi = synthesize_modes(grid, sc.phi0)
    vel = well_prepared_velocity(xi, phi, grid, sc.constants)
    if sc.preparation == Preparation.ILL:
        for mode in sc.offset:
            vel[mode.component] = vel[mode.component] + synthesize_modes(grid, [mode])
    return PerturbationState(
        t=0.0,
        xi=SpectralField(grid, xi),
        vel=tuple(SpectralField(grid, v) for v in vel),
        phi=SpectralField(grid, phi),
    )


def build_relaxed_state(sc: Scenario) -> RelaxedState:
    """Relaxed data: the same (xi0, phi0) profiles."""
    return RelaxedState(
        t=0.0,
        xi=SpectralField(sc.grid, synthesize_modes(sc.grid, sc.xi0)),
        phi=SpectralField(sc.grid, synthesize_modes(sc.grid, sc.phi0)),
    )


def classify_preparation(state: PerturbationState, c: GasConstants, tolerance: float = 1e-10) -> Preparation:
    """WELL when ||eta||_{H^2} <= tolerance, else ILL."""
    norm = math.sqrt(compute_eta(state, c).h2_norm_sq)
    return Preparation.WELL if norm <= tolerance else Preparation.ILL
