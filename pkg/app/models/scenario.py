"""Scenario, per-tau run records and sweep results."""

import math
from datetime import datetime
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.base import GasConstants, IntegrationScheme, Preparation, TorusGrid
from app.models.reports import ConvergenceFit, EnergyReport, LayerReport


class ModeSpec(BaseModel):
    """One Fourier mode amplitude * sin(k . x + phase), k in integer mode numbers."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: list[int]
    amplitude: float
    phase: float = 0.0


class OffsetMode(ModeSpec):
    """Velocity offset mode added to one velocity component."""
    component: int = Field(default=0, ge=0)


class Scenario(BaseModel):
    """A complete experiment definition: data, tau sweep, sampling and scheme."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "default"
    grid: TorusGrid = Field(default_factory=TorusGrid)
    constants: GasConstants = Field(default_factory=lambda: GasConstants(gamma=1.4))
    xi0: list[ModeSpec] = Field(default_factory=list)
    phi0: list[ModeSpec] = Field(default_factory=list)
    preparation: Preparation = Preparation.WELL
    offset: list[OffsetMode] = Field(default_factory=list)
    tau_list: list[float] = Field(default_factory=lambda: [0.25, 0.125, 0.0625, 0.03125])
    t_end: float = Field(default=0.5, gt=0.0)
    sample_dt: float = Field(default=1.0 / 256.0, gt=0.0)
    scheme: IntegrationScheme = IntegrationScheme.ETDRK4
    cfl_acoustic: float = Field(default=0.5, gt=0.0, le=1.0)
    cfl_advective: float = Field(default=0.5, gt=0.0, le=1.0)
    relaxed_dt: float = Field(default=1e-3, gt=0.0)
    t_layer: float = Field(default=0.1, ge=0.0)
    threshold_ratio: float = Field(default=0.01, gt=0.0, lt=1.0)

    @field_validator("tau_list")
    @classmethod
    def _decreasing_taus(cls, value: list[float]) -> list[float]:
        for tau in value:
            if not 0.0 < tau <= 1.0:
                raise ValueError(f"tau must lie in (0, 1], got {tau}")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("tau_list must be strictly decreasing")
        return value

    @model_validator(mode="after")
    def _modes_fit_grid(self) -> "Scenario":
        dim = self.grid.dim
        for mode in (*self.xi0, *self.phi0, *self.offset):
            if len(mode.k) != dim:
                raise ValueError(f"mode wavevector {mode.k} does not match dim={dim}")
        for mode in self.offset:
            if mode.component >= dim:
                raise ValueError(f"offset component {mode.component} out of range for dim={dim}")
        if self.preparation == Preparation.ILL and not any(m.amplitude != 0.0 for m in self.offset):
            raise ValueError("ill-prepared scenarios need a nonzero velocity offset")
        return self


def default_scenario(preparation: Preparation = Preparation.ILL) -> Scenario:
    """Desk-scale acceptance scenario on the 1-torus."""
    offset = [OffsetMode(k=[1], amplitude=0.05)] if preparation == Preparation.ILL else []
    return Scenario(
        name=f"default-{preparation.value}",
        xi0=[ModeSpec(k=[1], amplitude=0.05)],
        phi0=[ModeSpec(k=[1], amplitude=0.02, phase=math.pi / 2)],
        preparation=preparation,
        offset=offset,
    )


class ErrorSample(BaseModel):
    """Relaxing-minus-relaxed norms at one shared sample time."""
    t: float
    err_xi_l2: float
    err_phi_l2: float
    err_zeta_l2: float
    err_v_l2: float
    err_v_sup: float


class EtaSample(BaseModel):
    t: float
    eta_h2_sq: float
    eta_sup: float


class LayerSample(BaseModel):
    """H^2 amplitudes of eta, of its quasi-steady part and of their difference."""
    t: float
    eta_h2: float
    quasi_steady_h2: float
    layer_h2: float


class EtaRateSample(BaseModel):
    t: float
    eta_t_h1_sq: float
    int_eta_t_h1_sq_to_t: float = 0.0


class FinalSummary(BaseModel):
    """Coarse description of the state at the end of a run."""
    t: float
    xi_sup: float
    v_sup: float
    phi_sup: float
    min_pressure: float


class TauRunRecord(BaseModel):
    """Everything measured for one relaxation time."""
    tau: float
    config_hash: str
    success: bool = True
    error: Optional[str] = None
    dt: float = 0.0
    layer_dt: float = 0.0
    steps: int = 0
    errors: list[ErrorSample] = Field(default_factory=list)
    eta: list[EtaSample] = Field(default_factory=list)
    energy: list[EnergyReport] = Field(default_factory=list)
    int_e_v: list[float] = Field(default_factory=list)
    int_e_v_after_layer: Optional[float] = None
    eta_rate: list[EtaRateSample] = Field(default_factory=list)
    layer_trajectory: list[LayerSample] = Field(default_factory=list)
    layer: Optional[LayerReport] = None
    eta0_h2_sq: float = 0.0
    v_err_sup_after_layer: Optional[float] = None
    v_err_sup_initial: Optional[float] = None
    final: Optional[FinalSummary] = None


class SweepResult(BaseModel):
    """Relaxed reference plus one record per tau, sorted by tau descending."""
    scenario_name: str
    config_hash: str
    sample_times: list[float] = Field(default_factory=list)
    records: list[TauRunRecord] = Field(default_factory=list)
    relaxed_energy: list[EnergyReport] = Field(default_factory=list)
    relaxed_error: Optional[str] = None
    fits: dict[str, ConvergenceFit] = Field(default_factory=dict)
    started_at: datetime = Field(default_factory=datetime.now)
    completed_at: Optional[datetime] = None

    @property
    def success(self) -> bool:
        return self.relaxed_error is None and all(r.success for r in self.records)
