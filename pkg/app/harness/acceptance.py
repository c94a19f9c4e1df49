"""Sweep-level acceptance checks: layer shape, plateau scaling, convergence and energy bounds.

Every check reads finished SweepResults; the sweeps themselves come from
SweepRunner. Layer quantities are H^2 amplitudes (Fourier-multiplier
convention). Criteria stated for the asymptotic regime are evaluated on the
sweep members with tau <= ASYMPTOTIC_TAU; at tau = 1/4 the O(tau^2 k2^2 |k|^2)
corrections of the default profiles are already of order one.
"""

import logging
import math
from typing import Callable

import numpy as np

from app.diagnostics.layer import envelope_ratio
from app.harness.scenario import synthesize_modes
from app.harness.sweep import SweepRunner
from app.models.reports import AcceptanceCheck
from app.models.scenario import Scenario, SweepResult, TauRunRecord

logger = logging.getLogger(__name__)

ASYMPTOTIC_TAU = 0.125
ENVELOPE_FACTOR = 1.25
RATE_RANGE = (0.9, 1.1)
WIDTH_RANGE = (0.8, 1.5)
PLATEAU_RATIO_RANGE = (3.0, 5.0)
MIN_CONVERGENCE_RATE = 0.8
OFFSET_MEMORY = 0.9
ENERGY_SPREAD = 0.25
ENERGY_CEILING = 1.5


def _label(tau: float) -> str:
    return f"tau={tau:g}"


def _pair_label(a: float, b: float) -> str:
    return f"tau={a:g}/{b:g}"


def _finished(result: SweepResult) -> list[TauRunRecord]:
    return [r for r in result.records if r.success]


def _asymptotic(result: SweepResult) -> list[TauRunRecord]:
    return [r for r in _finished(result) if r.tau <= ASYMPTOTIC_TAU]


def _strictly_decreasing(values: list[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def eta_trajectory(record: TauRunRecord) -> list[tuple[float, float]]:
    """||eta||_{H^2} at every layer sample of the run."""
    return [(s.t, s.eta_h2) for s in record.layer_trajectory]


def check_layer_envelope(ill: SweepResult) -> AcceptanceCheck:
    values = {}
    for record in _finished(ill):
        layer = record.layer
        if layer is None or not layer.crossed:
            values[_label(record.tau)] = math.inf
            continue
        values[_label(record.tau)] = envelope_ratio(eta_trajectory(record), record.tau, layer.t_star)
    return AcceptanceCheck(
        name="layer_envelope",
        description="max_t ||eta|| / (||eta_0|| e^{-t/tau^2} + P) <= 1.25, P = max ||eta|| after t_star",
        values=values,
        passed=bool(values) and all(v <= ENVELOPE_FACTOR for v in values.values()),
    )


def check_layer_rate(ill: SweepResult) -> AcceptanceCheck:
    values = {}
    for record in _asymptotic(ill):
        layer = record.layer
        fitted = layer.fitted_rate if layer is not None and layer.fit_available else math.nan
        values[_label(record.tau)] = fitted * record.tau**2
    lo, hi = RATE_RANGE
    return AcceptanceCheck(
        name="layer_decay_rate",
        description="fitted decay rate of ||eta - eta_qs|| times tau^2 in [0.9, 1.1]",
        values=values,
        passed=bool(values) and all(lo <= v <= hi for v in values.values()),
    )


def check_layer_width(ill: SweepResult, threshold_ratio: float) -> AcceptanceCheck:
    values = {}
    scale = math.log(1.0 / threshold_ratio)
    for record in _asymptotic(ill):
        layer = record.layer
        t_star = layer.t_star if layer is not None and layer.crossed else math.nan
        values[_label(record.tau)] = t_star / (record.tau**2 * scale)
    lo, hi = WIDTH_RANGE
    return AcceptanceCheck(
        name="layer_width",
        description="t_star / (tau^2 ln(1/threshold_ratio)) in [0.8, 1.5]",
        values=values,
        passed=bool(values) and all(lo <= v <= hi for v in values.values()),
    )


def sup_eta(record: TauRunRecord) -> float:
    """sup_t ||eta||_{H^2} over every recorded sample of the run."""
    coarse = [math.sqrt(s.eta_h2_sq) for s in record.eta]
    fine = [s.eta_h2 for s in record.layer_trajectory]
    return max(coarse + fine)


def check_well_prepared_plateau(well: SweepResult) -> AcceptanceCheck:
    records = _finished(well)
    sups = [sup_eta(r) for r in records]
    values = {
        _pair_label(a.tau, b.tau): sa / sb
        for a, b, sa, sb in zip(records, records[1:], sups, sups[1:])
        if sb > 0.0
    }
    lo, hi = PLATEAU_RATIO_RANGE
    return AcceptanceCheck(
        name="well_prepared_plateau",
        description="sup_t ||eta|| ratio between consecutive (halved) tau in [3, 5]",
        values=values,
        passed=bool(values) and len(values) == len(records) - 1 and all(lo <= v <= hi for v in values.values()),
    )


def check_strong_convergence(ill: SweepResult) -> AcceptanceCheck:
    records = _finished(ill)
    series: dict[str, Callable[[TauRunRecord], float]] = {
        "xi": lambda r: r.errors[-1].err_xi_l2,
        "phi": lambda r: r.errors[-1].err_phi_l2,
        "zeta": lambda r: r.errors[-1].err_zeta_l2,
    }
    values = {}
    passed = len(records) >= 2
    for name, error in series.items():
        errors = [error(r) for r in records]
        passed = passed and _strictly_decreasing(errors)
        fit = ill.fits.get(name)
        rate = fit.rate if fit is not None else math.nan
        values[f"rate_{name}"] = rate
        passed = passed and rate >= MIN_CONVERGENCE_RATE
    return AcceptanceCheck(
        name="strong_convergence",
        description="L2 errors of xi, phi, zeta at T strictly decrease over the sweep; fitted rates >= 0.8",
        values=values,
        passed=passed,
    )


def offset_sup(sc: Scenario) -> float:
    """Grid sup of the velocity offset |sum of offset modes|."""
    components = [np.zeros(sc.grid.shape) for _ in range(sc.grid.dim)]
    for mode in sc.offset:
        components[mode.component] = components[mode.component] + synthesize_modes(sc.grid, [mode])
    return float(np.sqrt(np.max(sum(c**2 for c in components))))


def check_velocity_after_layer(ill_sc: Scenario, ill: SweepResult) -> AcceptanceCheck:
    records = _finished(ill)
    after = [r.v_err_sup_after_layer for r in records]
    initial = [r.v_err_sup_initial for r in records]
    floor = OFFSET_MEMORY * offset_sup(ill_sc)
    values = {f"after_{_label(r.tau)}": v for r, v in zip(records, after) if v is not None}
    values.update({f"initial_{_label(r.tau)}": v for r, v in zip(records, initial) if v is not None})
    passed = (
        len(records) >= 2
        and None not in after
        and None not in initial
        and _strictly_decreasing(after)
        and all(v >= floor for v in initial)
    )
    return AcceptanceCheck(
        name="velocity_after_layer",
        description="sup_{t >= t_layer} ||v - v~||_inf strictly decreases; the t=0 error keeps >= 0.9 of the offset",
        values=values,
        passed=passed,
    )


def check_uniform_energy(well: SweepResult) -> AcceptanceCheck:
    records = [r for r in _finished(well) if r.int_e_v_after_layer is not None]
    integrals = {_label(r.tau): r.int_e_v_after_layer for r in records}
    asymptotic = [r.int_e_v_after_layer for r in records if r.tau <= ASYMPTOTIC_TAU]
    values = dict(integrals)
    passed = len(asymptotic) >= 2
    if passed:
        values["spread"] = max(asymptotic) / min(asymptotic) - 1.0
        largest_tau = records[0].int_e_v_after_layer
        passed = values["spread"] <= ENERGY_SPREAD and all(
            v <= ENERGY_CEILING * largest_tau for v in integrals.values()
        )
    return AcceptanceCheck(
        name="uniform_energy",
        description="int_{t_layer}^T E[v] dt on well-prepared data: spread <= 25% over tau <= 1/8, "
        "never above 1.5x the largest-tau value",
        values=values,
        passed=passed,
    )


def evaluate_acceptance(
    ill_sc: Scenario,
    ill: SweepResult,
    well: SweepResult,
) -> list[AcceptanceCheck]:
    """Every sweep-level criterion on an ill-prepared and a well-prepared sweep."""
    checks = [
        check_layer_envelope(ill),
        check_layer_rate(ill),
        check_layer_width(ill, ill_sc.threshold_ratio),
        check_well_prepared_plateau(well),
        check_strong_convergence(ill),
        check_velocity_after_layer(ill_sc, ill),
        check_uniform_energy(well),
    ]
    for check in checks:
        rendered = ", ".join(f"{k}={v:.4g}" for k, v in check.values.items())
        logger.info(f"Acceptance {check.name}: {'PASS' if check.passed else 'FAIL'} ({rendered})")
    return checks


def run_acceptance(ill_sc: Scenario, well_sc: Scenario, max_workers: int = 1) -> list[AcceptanceCheck]:
    """Run both sweeps and evaluate them."""
    ill = SweepRunner(max_workers=max_workers).run(ill_sc)
    well = SweepRunner(max_workers=max_workers).run(well_sc)
    return evaluate_acceptance(ill_sc, ill, well)
