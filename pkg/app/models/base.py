"""Base models and enums for the relaxation laboratory."""

import math
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Preparation(str, Enum):
    """Classification of the initial velocity relative to the relaxed manifold."""
    WELL = "well"
    ILL = "ill"


class IntegrationScheme(str, Enum):
    """Time integrators available for the relaxing system."""
    STRANG = "strang"
    ETDRK4 = "etdrk4"


class NormConvention(str, Enum):
    """How Sobolev norms are weighted in Fourier space.

    MULTI_INDEX sums ||D^alpha f||^2 over every multi-index with |alpha| <= s.
    FOURIER_MULTIPLIER uses the weight (1 + |k|^2)^s. The two are equivalent
    norms but not equal numbers; never compare values across conventions.
    """
    MULTI_INDEX = "multi-index"
    FOURIER_MULTIPLIER = "fourier-multiplier"


class GasConstants(BaseModel):
    """Ideal-gas constants and the background state (p_bar, s_bar, rho_bar).

    Only the four inputs are fields; the derived constants are properties so
    that a dumped model validates back unchanged.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(gt=1.0)
    bigA: float = Field(default=1.0, gt=0.0)
    p_bar: float = Field(default=1.0, gt=0.0)
    s_bar: float = 0.0

    @property
    def rho_bar(self) -> float:
        """Background density from the equation of state."""
        return (
            self.bigA ** (-1.0 / self.gamma)
            * self.p_bar ** (1.0 / self.gamma)
            * math.exp(-self.s_bar / self.gamma)
        )

    @property
    def k1(self) -> float:
        return math.sqrt(1.0 / (self.gamma * self.rho_bar * self.p_bar))

    @property
    def k2(self) -> float:
        return math.sqrt(self.gamma * self.p_bar / self.rho_bar)

    @property
    def a_const(self) -> float:
        # Forced to 1 by comparing the relaxed pressure equation with k1*rho*v + grad(xi) = 0.
        return 1.0

    def derived(self) -> dict[str, float]:
        """Derived constants as a plain dict (for reports and the HTTP layer)."""
        return {
            "rho_bar": self.rho_bar,
            "k1": self.k1,
            "k2": self.k2,
            "a_const": self.a_const,
        }


class RelaxationParameter(BaseModel):
    """Relaxation time tau in (0, 1]."""
    model_config = ConfigDict(frozen=True)

    tau: float = Field(gt=0.0, le=1.0)


def check_tau(tau: float) -> float:
    """Validate a raw relaxation time and return it."""
    return RelaxationParameter(tau=tau).tau


class TorusGrid(BaseModel):
    """Uniform grid on the periodic d-torus [0, length)^dim."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: Literal[1, 2, 3] = 1
    n_per_dim: int = Field(default=256, ge=16)
    length: float = Field(default=2.0 * math.pi, gt=0.0)

    @field_validator("n_per_dim")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"n_per_dim must be a power of two, got {value}")
        return value

    @property
    def dx(self) -> float:
        return self.length / self.n_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_dim,) * self.dim

    @property
    def total_points(self) -> int:
        return self.n_per_dim ** self.dim

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    def coordinates(self) -> tuple:
        """Grid coordinates, one broadcast array per axis (ij indexing)."""
        points = self.dx * np.arange(self.n_per_dim)
        return tuple(np.meshgrid(*([points] * self.dim), indexing="ij"))
