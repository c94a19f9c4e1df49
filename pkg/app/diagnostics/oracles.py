"""Closed-form solutions used as ground truth for the solvers."""

import cmath
import logging
import math
from typing import Sequence

import numpy as np
import scipy.linalg

from app.models.base import GasConstants, TorusGrid, check_tau
from app.numerics.spectral import SpectralField

logger = logging.getLogger(__name__)

# Below this discriminant the eigenvectors are nearly parallel; use expm instead.
DEGENERACY_TOLERANCE = 1e-10


def _wavenumber(k: Sequence[int], length: float) -> float:
    return 2.0 * math.pi / length * math.sqrt(sum(m * m for m in k))


def linear_mode_eigenvalues(k_norm: float, tau: float, c: GasConstants) -> tuple[complex, complex]:
    """Roots of tau^2 lambda^2 + lambda + k2^2 |k|^2 = 0, ordered (+sqrt, -sqrt)."""
    tau = check_tau(tau)
    disc = 1.0 - 4.0 * tau**2 * c.k2**2 * k_norm**2
    root = cmath.sqrt(disc)
    return (-1.0 + root) / (2.0 * tau**2), (-1.0 - root) / (2.0 * tau**2)


def _mode_matrix(k_norm: float, tau: float, c: GasConstants) -> np.ndarray:
    # (xi_hat, w_hat), w the velocity component along k
    coupling = 1j * c.k2 * k_norm
    return np.array([[0.0, -coupling], [-coupling / tau**2, -1.0 / tau**2]], dtype=complex)


def linear_mode_oracle(
    k: Sequence[int],
    tau: float,
    c: GasConstants,
    amplitude: float,
    t: float,
    vel_amplitude: complex = 0.0,
    length: float = 2.0 * math.pi,
) -> tuple[complex, complex]:
    """Exact (xi_hat, w_hat) of the linearized relaxing system for one Fourier mode.

    w_hat is the velocity amplitude along k. Initial amplitudes are
    (amplitude, vel_amplitude).
    """
    tau = check_tau(tau)
    y0 = np.array([amplitude, vel_amplitude], dtype=complex)
    if t == 0.0:
        return complex(y0[0]), complex(y0[1])
    k_norm = _wavenumber(k, length)
    matrix = _mode_matrix(k_norm, tau, c)
    disc = 1.0 - 4.0 * tau**2 * c.k2**2 * k_norm**2
    if abs(disc) < DEGENERACY_TOLERANCE:
        y = scipy.linalg.expm(matrix * t) @ y0
    else:
        eigenvalues, vectors = np.linalg.eig(matrix)
        y = vectors @ (np.exp(eigenvalues * t) * np.linalg.solve(vectors, y0))
    return complex(y[0]), complex(y[1])


def linear_mode_fields(
    grid: TorusGrid,
    k: Sequence[int],
    tau: float,
    c: GasConstants,
    amplitude: float,
    t: float,
) -> tuple[SpectralField, tuple[SpectralField, ...]]:
    """Physical (xi, v) of the exact linear solution from xi0 = amplitude cos(k.x), v0 = 0."""
    if len(k) != grid.dim:
        raise ValueError(f"wavevector {list(k)} does not match dim={grid.dim}")
    xi_hat, w_hat = linear_mode_oracle(k, tau, c, amplitude, t, length=grid.length)
    scale = 2.0 * math.pi / grid.length
    phase = sum(scale * m * x for m, x in zip(k, grid.coordinates()))
    carrier = np.exp(1j * phase)
    xi = SpectralField(grid, (xi_hat * carrier).real)
    k_norm = math.sqrt(sum(m * m for m in k))
    if k_norm == 0.0:
        zero = SpectralField.zeros(grid)
        return xi, (zero,) * grid.dim
    w = (w_hat * carrier).real
    return xi, tuple(SpectralField(grid, w * m / k_norm) for m in k)


def heat_mode_factor(k_norm: float, c: GasConstants, t: float) -> float:
    """Decay factor exp(-k2^2 |k|^2 t) of a linearized relaxed mode."""
    return math.exp(-c.k2**2 * k_norm**2 * t)


def layer_profile_oracle(eta0, z: float):
    """Leading-order layer profile eta0 * exp(-z) at fast time z >= 0.

    eta0 may be a field, a tuple of fields or an array.
    """
    if z < 0.0:
        raise ValueError(f"fast time must be non-negative, got {z}")
    factor = math.exp(-z)
    if isinstance(eta0, tuple):
        return tuple(component * factor for component in eta0)
    return eta0 * factor
