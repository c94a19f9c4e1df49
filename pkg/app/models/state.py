"""Field-carrying states: relaxing, relaxed, step control and eta snapshots."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.base import IntegrationScheme, TorusGrid
from app.numerics.spectral import SpectralField


class PerturbationState(BaseModel):
    """(xi, v, phi) at one slow time.

    xi = p - p_bar, v = u / k1 (one component per dimension), phi = S - s_bar.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float = Field(ge=0.0)
    xi: SpectralField
    vel: tuple[SpectralField, ...]
    phi: SpectralField

    @model_validator(mode="after")
    def _consistent_grid(self) -> "PerturbationState":
        grid = self.xi.grid
        if len(self.vel) != grid.dim:
            raise ValueError(f"expected {grid.dim} velocity components, got {len(self.vel)}")
        for field in (*self.vel, self.phi):
            if field.grid != grid:
                raise ValueError("all state fields must share one grid")
        return self

    @property
    def grid(self) -> TorusGrid:
        return self.xi.grid

    @classmethod
    def equilibrium(cls, grid: TorusGrid, t: float = 0.0) -> "PerturbationState":
        zero = SpectralField.zeros(grid)
        return cls(t=t, xi=zero, vel=(zero,) * grid.dim, phi=zero)

    def at_time(self, t: float) -> "PerturbationState":
        return self.model_copy(update={"t": t})


class RelaxedState(BaseModel):
    """(xi, phi) of the relaxed limit at one time."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float = Field(ge=0.0)
    xi: SpectralField
    phi: SpectralField

    @model_validator(mode="after")
    def _consistent_grid(self) -> "RelaxedState":
        if self.phi.grid != self.xi.grid:
            raise ValueError("xi and phi must share one grid")
        return self

    @property
    def grid(self) -> TorusGrid:
        return self.xi.grid

    @classmethod
    def equilibrium(cls, grid: TorusGrid, t: float = 0.0) -> "RelaxedState":
        zero = SpectralField.zeros(grid)
        return cls(t=t, xi=zero, phi=zero)

    def at_time(self, t: float) -> "RelaxedState":
        return self.model_copy(update={"t": t})


class StepControl(BaseModel):
    """Time step and CFL safety factors for the relaxing solver."""
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0.0)
    cfl_advective: float = Field(default=0.5, gt=0.0, le=1.0)
    cfl_acoustic: float = Field(default=0.5, gt=0.0, le=1.0)
    scheme: IntegrationScheme = IntegrationScheme.STRANG


class EtaSnapshot(BaseModel):
    """eta = v + grad(xi) / (k1 rho) with its norms (H^2 in the Fourier-multiplier convention)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    eta: tuple[SpectralField, ...]
    h2_norm_sq: float = Field(ge=0.0)
    sup_norm: float = Field(ge=0.0)
