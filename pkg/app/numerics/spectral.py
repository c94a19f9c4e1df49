"""Periodic fields on the torus: FFT transforms, spectral derivatives,
2/3-rule dealiasing and Sobolev norms.

Coefficients use the real-FFT layout (``rfftn``) normalised by 1/N so that
the zero mode is the spatial mean. Wavenumbers are 2*pi/length times the
integer mode numbers.
"""

import itertools
import logging
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from app.models.base import NormConvention, TorusGrid

logger = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 5


class SpectralOps:
    """Transforms and wavenumber tables bound to one grid."""

    def __init__(self, grid: TorusGrid):
        self.grid = grid
        self.shape = grid.shape
        self.axes = tuple(range(grid.dim))
        n = grid.n_per_dim
        self.coeff_shape = (n,) * (grid.dim - 1) + (n // 2 + 1,)

        scale = 2.0 * np.pi / grid.length
        self.modes: list[np.ndarray] = []
        self.wavenumbers: list[np.ndarray] = []
        self.nyquist: list[np.ndarray] = []
        for axis in range(grid.dim):
            if axis == grid.dim - 1:
                m = np.fft.rfftfreq(n, d=1.0 / n)
            else:
                m = np.fft.fftfreq(n, d=1.0 / n)
            bshape = [1] * grid.dim
            bshape[axis] = m.size
            m = m.reshape(bshape)
            self.modes.append(m)
            self.wavenumbers.append(scale * m)
            self.nyquist.append(np.abs(m) == n // 2)

        self.k_squared = np.zeros(self.coeff_shape)
        for k in self.wavenumbers:
            self.k_squared = self.k_squared + k**2

        self.dealias_mask = np.ones(self.coeff_shape, dtype=bool)
        for m in self.modes:
            self.dealias_mask = self.dealias_mask & (np.abs(m) <= n / 3.0)

        # Parseval: every rfft column except the zero and Nyquist columns stands for a conjugate pair.
        last = np.full(n // 2 + 1, 2.0)
        last[0] = 1.0
        last[-1] = 1.0
        self.parseval_weights = np.broadcast_to(
            last.reshape((1,) * (grid.dim - 1) + (n // 2 + 1,)), self.coeff_shape
        )
        self._norm_weights: dict[tuple[int, NormConvention], np.ndarray] = {}

    def forward(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(values, axes=self.axes, norm="forward")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(coeffs, s=self.shape, axes=self.axes, norm="forward")

    def derivative_multiplier(self, axis: int, order: int) -> np.ndarray:
        if not 0 <= axis < self.grid.dim:
            raise ValueError(f"axis {axis} out of range for dim={self.grid.dim}")
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE_ORDER}], got {order}")
        factor = (1j * self.wavenumbers[axis]) ** order
        if order % 2:
            factor = np.where(self.nyquist[axis], 0.0, factor)
        return factor

    def diff(self, values: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
        return self.inverse(self.derivative_multiplier(axis, order) * self.forward(values))

    def grad(self, values: np.ndarray) -> list[np.ndarray]:
        coeffs = self.forward(values)
        return [
            self.inverse(self.derivative_multiplier(axis, 1) * coeffs)
            for axis in self.axes
        ]

    def div(self, components: Sequence[np.ndarray]) -> np.ndarray:
        total = np.zeros(self.coeff_shape, dtype=complex)
        for axis, component in enumerate(components):
            total = total + self.derivative_multiplier(axis, 1) * self.forward(component)
        return self.inverse(total)

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(-self.k_squared * self.forward(values))

    def dealias(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(self.dealias_mask * self.forward(values))

    def norm_weights(self, s: int, convention: NormConvention) -> np.ndarray:
        key = (s, convention)
        if key not in self._norm_weights:
            if convention == NormConvention.FOURIER_MULTIPLIER:
                weights = (1.0 + self.k_squared) ** s
            else:
                weights = np.zeros(self.coeff_shape)
                squares = [k**2 for k in self.wavenumbers]
                for alpha in itertools.product(range(s + 1), repeat=self.grid.dim):
                    if sum(alpha) > s:
                        continue
                    term = np.ones(self.coeff_shape)
                    for k2, a in zip(squares, alpha):
                        term = term * k2**a
                    weights = weights + term
            self._norm_weights[key] = weights
        return self._norm_weights[key]

    def norm_sq_coeffs(self, coeffs: np.ndarray, s: int, convention: NormConvention) -> float:
        weights = self.norm_weights(s, convention) * self.parseval_weights
        return float(self.grid.volume * np.sum(weights * np.abs(coeffs) ** 2))


@lru_cache(maxsize=16)
def spectral_ops(grid: TorusGrid) -> SpectralOps:
    """Shared operator tables for a grid."""
    logger.debug(f"Building spectral tables for dim={grid.dim} n={grid.n_per_dim}")
    return SpectralOps(grid)


class SpectralField:
    """Real scalar field sampled on a TorusGrid.

    Values are read-only; Fourier coefficients are computed on first use and
    cached, so the two representations never drift apart.
    """

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: TorusGrid, values):
        arr = np.array(values, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"field shape {arr.shape} does not match grid shape {grid.shape}")
        arr.setflags(write=False)
        self.grid = grid
        self._values = arr
        self._coeffs: np.ndarray | None = None

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "SpectralField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: TorusGrid, fn: Callable[..., np.ndarray]) -> "SpectralField":
        """Sample ``fn(x0, x1, ...)`` on the grid."""
        return cls(grid, np.broadcast_to(fn(*grid.coordinates()), grid.shape))

    @classmethod
    def from_coeffs(cls, grid: TorusGrid, coeffs: np.ndarray) -> "SpectralField":
        field = cls(grid, spectral_ops(grid).inverse(coeffs))
        return field

    @property
    def ops(self) -> SpectralOps:
        return spectral_ops(self.grid)

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            coeffs = self.ops.forward(self._values)
            coeffs.setflags(write=False)
            self._coeffs = coeffs
        return self._coeffs

    def _other(self, other):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._values - self._other(other))

    def __rsub__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._other(other) - self._values)

    def __mul__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SpectralField":
        return SpectralField(self.grid, self._values / self._other(other))

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self._values)

    def __repr__(self) -> str:
        return f"SpectralField(dim={self.grid.dim}, n={self.grid.n_per_dim})"


def derivative(field: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Spectral derivative of the given order along one axis.

    Odd orders zero the Nyquist mode along that axis so the result stays real.
    """
    multiplier = field.ops.derivative_multiplier(axis, order)
    return SpectralField.from_coeffs(field.grid, multiplier * field.coeffs)


def gradient(field: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(derivative(field, axis) for axis in range(field.grid.dim))


def divergence(components: Sequence[SpectralField]) -> SpectralField:
    grid = components[0].grid
    return SpectralField(grid, spectral_ops(grid).div([c.values for c in components]))


def laplacian(field: SpectralField) -> SpectralField:
    return SpectralField.from_coeffs(field.grid, -field.ops.k_squared * field.coeffs)


def dealias(field: SpectralField) -> SpectralField:
    """Zero every mode with some |m_i| > n/3."""
    return SpectralField.from_coeffs(field.grid, field.ops.dealias_mask * field.coeffs)


def sobolev_norm_sq(
    field: SpectralField,
    s: int,
    convention: NormConvention = NormConvention.MULTI_INDEX,
) -> float:
    """Squared H^s norm computed exactly in Fourier space."""
    if s < 0:
        raise ValueError(f"Sobolev index must be non-negative, got {s}")
    return field.ops.norm_sq_coeffs(field.coeffs, s, convention)


def l2_norm_sq(field: SpectralField) -> float:
    return sobolev_norm_sq(field, 0)


def sup_norm(field: SpectralField) -> float:
    return float(np.max(np.abs(field.values)))


def vector_sup_norm(components: Sequence[SpectralField]) -> float:
    """Max over the grid of the Euclidean magnitude of a vector field."""
    squared = sum(c.values**2 for c in components)
    return float(np.sqrt(np.max(squared)))
