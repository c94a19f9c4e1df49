"""Diagnostic report models."""

from typing import Optional

from pydantic import BaseModel, Field

from app.models.base import NormConvention


class EnergyReport(BaseModel):
    """Energy functionals at one time instant.

    The E family (relaxing runs) sums ||d_t^l D^alpha f||^2 with l <= 2 and
    l + |alpha| <= 4. e_tau_v = tau^2 * e_v. The F family (relaxed runs) is
    carried in f_family and leaves the E fields unset.
    """
    t: float
    e_xi: Optional[float] = Field(default=None, ge=0.0)
    e_v: Optional[float] = Field(default=None, ge=0.0)
    e_tau_v: Optional[float] = Field(default=None, ge=0.0)
    e_phi: Optional[float] = Field(default=None, ge=0.0)
    e_zeta: Optional[float] = Field(default=None, ge=0.0)
    e_x_xi: Optional[float] = Field(default=None, ge=0.0)
    f_family: Optional[dict[str, float]] = None
    convention: NormConvention = NormConvention.MULTI_INDEX


class LayerReport(BaseModel):
    """Initial-layer analysis of an eta-norm trajectory."""
    tau: float = Field(gt=0.0, le=1.0)
    metric: str = "eta_h2_norm"
    eta0_norm: float
    trajectory: list[tuple[float, float]] = Field(default_factory=list)
    fitted_rate: Optional[float] = None
    fit_available: bool = False
    fit_samples: int = 0
    t_star: Optional[float] = None
    crossed: bool = False
    plateau: float = 0.0
    threshold: float = 0.0


class ConvergenceFit(BaseModel):
    """Least-squares slope of log(error) against log(tau)."""
    rate: float
    intercept: float
    r_squared: float
    log2_ratios: list[float] = Field(default_factory=list)
    points: list[tuple[float, float]] = Field(default_factory=list)


class OracleCheck(BaseModel):
    """Outcome of one analytic-oracle comparison."""
    name: str
    description: str
    error: float
    tolerance: float
    passed: bool


class AcceptanceCheck(BaseModel):
    """One sweep-level acceptance criterion evaluated on finished sweeps.

    values holds the measured quantity per tau (or per consecutive tau pair),
    keyed by a short label.
    """
    name: str
    description: str
    values: dict[str, float] = Field(default_factory=dict)
    passed: bool
    note: Optional[str] = None
