"""Tau sweeps: one relaxed reference run, then one relaxing run per tau."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.diagnostics.energy import energy_report, relaxed_energy_report
from app.diagnostics.eta import compute_eta, eta_time_derivative_h1_sq, layer_sample
from app.diagnostics.layer import convergence_fit, estimate_layer
from app.harness.config import config_hash
from app.harness.scenario import build_initial_state, build_relaxed_state
from app.models.reports import ConvergenceFit, EnergyReport
from app.models.scenario import (
    ErrorSample,
    EtaRateSample,
    EtaSample,
    FinalSummary,
    LayerSample,
    Scenario,
    SweepResult,
    TauRunRecord,
)
from app.models.state import PerturbationState, RelaxedState, StepControl
from app.numerics.spectral import SpectralField, l2_norm_sq, sup_norm, vector_sup_norm
from app.physics.eos import perturbed_density
from app.solvers.base_solver import sample_schedule
from app.solvers.relaxed import RelaxedSolver, limit_velocity
from app.solvers.relaxing import RelaxingSolver, choose_step_control, relaxing_rhs

logger = logging.getLogger(__name__)

# The layer is resolved with steps of at most tau^2 / LAYER_STEPS_PER_TAU2
# up to the first sample time at or after LAYER_SPAN * tau^2.
LAYER_SPAN = 16.0
LAYER_STEPS_PER_TAU2 = 8.0
LAYER_METRIC = "eta_layer_h2_norm"


class ReferenceSample:
    """Relaxed fields at one sample time, kept as plain arrays."""

    def __init__(self, state: RelaxedState, scenario: Scenario):
        c = scenario.constants
        self.t = state.t
        self.xi = state.xi.values
        self.phi = state.phi.values
        self.zeta = perturbed_density(self.xi, self.phi, c) - c.rho_bar
        self.vel = [v.values for v in limit_velocity(state, c)]


class _ReferenceObserver:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.samples: list[ReferenceSample] = []
        self.energy: list[EnergyReport] = []

    def __call__(self, state: RelaxedState) -> None:
        self.samples.append(ReferenceSample(state, self.scenario))
        self.energy.append(relaxed_energy_report(state, self.scenario.constants))


class _TauObserver:
    """Compares each relaxing sample with the relaxed sample at the same index."""

    def __init__(self, scenario: Scenario, tau: float, reference: list[ReferenceSample], record: TauRunRecord):
        self.scenario = scenario
        self.tau = tau
        self.reference = reference
        self.record = record
        self.index = 0

    def __call__(self, state: PerturbationState) -> None:
        c = self.scenario.constants
        grid = state.grid
        ref = self.reference[self.index]
        self.index += 1

        zeta = perturbed_density(state.xi.values, state.phi.values, c) - c.rho_bar
        dv = [SpectralField(grid, v.values - rv) for v, rv in zip(state.vel, ref.vel)]
        self.record.errors.append(
            ErrorSample(
                t=state.t,
                err_xi_l2=math.sqrt(l2_norm_sq(SpectralField(grid, state.xi.values - ref.xi))),
                err_phi_l2=math.sqrt(l2_norm_sq(SpectralField(grid, state.phi.values - ref.phi))),
                err_zeta_l2=math.sqrt(l2_norm_sq(SpectralField(grid, zeta - ref.zeta))),
                err_v_l2=math.sqrt(sum(l2_norm_sq(d) for d in dv)),
                err_v_sup=vector_sup_norm(dv),
            )
        )

        eta = compute_eta(state, c)
        self.record.eta.append(EtaSample(t=state.t, eta_h2_sq=eta.h2_norm_sq, eta_sup=eta.sup_norm))
        rhs = relaxing_rhs(state, self.tau, c)
        self.record.energy.append(energy_report(state, self.tau, c))
        self.record.eta_rate.append(
            EtaRateSample(t=state.t, eta_t_h1_sq=eta_time_derivative_h1_sq(state, self.tau, c, rhs))
        )


class _LayerObserver:
    """Layer samples in time order; a time already recorded is skipped."""

    def __init__(self, scenario: Scenario, tau: float, samples: list[LayerSample]):
        self.constants = scenario.constants
        self.tau = tau
        self.samples = samples

    def __call__(self, state: PerturbationState) -> None:
        if self.samples and state.t <= self.samples[-1].t:
            return
        self.samples.append(layer_sample(state, self.tau, self.constants))


def _whole_steps(ctrl: StepControl, sample_dt: float, max_dt: float) -> StepControl:
    """Shrink dt to at most max_dt and to a whole number of steps per sample interval."""
    steps_per_sample = math.ceil(sample_dt / min(ctrl.dt, max_dt) - 1e-9)
    return ctrl.model_copy(update={"dt": sample_dt / steps_per_sample})


def _cumulative(times: list[float], values: list[float]) -> list[float]:
    if not times:
        return []
    if len(times) == 1:
        return [0.0]
    return [float(x) for x in cumulative_trapezoid(values, times, initial=0.0)]


def _summarize(state: PerturbationState, p_bar: float) -> FinalSummary:
    return FinalSummary(
        t=state.t,
        xi_sup=sup_norm(state.xi),
        v_sup=vector_sup_norm(state.vel),
        phi_sup=sup_norm(state.phi),
        min_pressure=float(np.min(state.xi.values)) + p_bar,
    )


class SweepRunner:
    """Runs a scenario's tau sweep.

    Per-tau failures are recorded on the run record and the sweep continues.
    Final relaxing states are kept in ``final_states`` keyed by tau.
    """

    def __init__(self, max_workers: int = 1):
        if max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.final_states: dict[float, PerturbationState] = {}
        self.relaxed_final: Optional[RelaxedState] = None

    def run_reference(self, sc: Scenario) -> _ReferenceObserver:
        observer = _ReferenceObserver(sc)
        solver = RelaxedSolver(sc.grid, sc.constants, min(sc.relaxed_dt, sc.sample_dt))
        evolution = solver.evolve(build_relaxed_state(sc), sc.t_end, [observer], sc.sample_dt)
        self.relaxed_final = evolution.final
        logger.info(f"Relaxed reference for '{sc.name}' finished in {evolution.steps} steps")
        return observer

    def run_tau(self, sc: Scenario, tau: float, reference: list[ReferenceSample], chash: str) -> TauRunRecord:
        """One relaxing run compared against the reference samples.

        The run is split at the first sample time past LAYER_SPAN * tau^2:
        the first segment steps at the layer resolution and records a layer
        sample after every step, the second uses the CFL step and records at
        sample times only.
        """
        record = TauRunRecord(tau=tau, config_hash=chash)
        try:
            state0 = build_initial_state(sc, tau)
            ctrl = choose_step_control(
                state0, tau, sc.constants, sc.cfl_acoustic, sc.cfl_advective, sc.scheme, max_dt=sc.sample_dt
            )
            ctrl = _whole_steps(ctrl, sc.sample_dt, sc.sample_dt)
            layer_ctrl = _whole_steps(ctrl, sc.sample_dt, tau**2 / LAYER_STEPS_PER_TAU2)
            record.dt = ctrl.dt
            record.layer_dt = layer_ctrl.dt

            times = sample_schedule(0.0, sc.t_end, sc.sample_dt)
            split = next((i for i, t in enumerate(times) if t >= LAYER_SPAN * tau**2), len(times) - 1)
            layer_observer = _LayerObserver(sc, tau, record.layer_trajectory)
            observers = [_TauObserver(sc, tau, reference, record), layer_observer]

            evolution = RelaxingSolver(sc.grid, sc.constants, tau, layer_ctrl).evolve_through(
                state0, times[: split + 1], observers, [layer_observer]
            )
            final, steps = evolution.final, evolution.steps
            if split < len(times) - 1:
                evolution = RelaxingSolver(sc.grid, sc.constants, tau, ctrl).evolve_through(
                    final, times[split:], observers, observe_start=False
                )
                final, steps = evolution.final, steps + evolution.steps

            record.steps = steps
            self.final_states[tau] = final
            record.final = _summarize(final, sc.constants.p_bar)
            logger.info(
                f"tau={tau:g}: {steps} steps, dt={layer_ctrl.dt:.3g} up to t={times[split]:.3g} then {ctrl.dt:.3g}"
            )
        except Exception as e:
            logger.error(f"tau={tau:g} failed: {e}")
            record.success = False
            record.error = str(e)

        self._finish_record(sc, record)
        return record

    def _finish_record(self, sc: Scenario, record: TauRunRecord) -> None:
        times = [s.t for s in record.energy]
        record.int_e_v = _cumulative(times, [s.e_v for s in record.energy])
        late = [s for s in record.energy if s.t >= sc.t_layer]
        if len(late) >= 2:
            record.int_e_v_after_layer = float(trapezoid([s.e_v for s in late], [s.t for s in late]))
        rate_times = [s.t for s in record.eta_rate]
        integral = _cumulative(rate_times, [s.eta_t_h1_sq for s in record.eta_rate])
        for sample, value in zip(record.eta_rate, integral):
            sample.int_eta_t_h1_sq_to_t = value

        if record.eta:
            record.eta0_h2_sq = record.eta[0].eta_h2_sq
        if len(record.layer_trajectory) >= 2:
            trajectory = [(s.t, s.layer_h2) for s in record.layer_trajectory]
            record.layer = estimate_layer(trajectory, record.tau, sc.threshold_ratio, metric=LAYER_METRIC)
        if record.errors:
            record.v_err_sup_initial = record.errors[0].err_v_sup
            after = [s.err_v_sup for s in record.errors if s.t >= sc.t_layer]
            record.v_err_sup_after_layer = max(after) if after else None

    def run(self, sc: Scenario) -> SweepResult:
        """Relaxed reference once, then every tau (in parallel when max_workers > 1)."""
        chash = config_hash(sc)
        logger.info(f"Starting sweep '{sc.name}' over tau={sc.tau_list} (hash {chash[:12]})")
        result = SweepResult(
            scenario_name=sc.name,
            config_hash=chash,
            sample_times=sample_schedule(0.0, sc.t_end, sc.sample_dt),
        )

        try:
            reference = self.run_reference(sc)
        except Exception as e:
            logger.error(f"Relaxed reference failed: {e}")
            result.relaxed_error = str(e)
            result.records = [
                TauRunRecord(tau=tau, config_hash=chash, success=False, error=f"relaxed reference failed: {e}")
                for tau in sc.tau_list
            ]
            result.completed_at = datetime.now()
            return result
        result.relaxed_energy = reference.energy

        if self.max_workers > 1:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                futures = [pool.submit(self.run_tau, sc, tau, reference.samples, chash) for tau in sc.tau_list]
                records = [f.result() for f in futures]
        else:
            records = [self.run_tau(sc, tau, reference.samples, chash) for tau in sc.tau_list]

        result.records = sorted(records, key=lambda r: r.tau, reverse=True)
        result.fits = self._fit_errors(result)
        result.completed_at = datetime.now()
        failed = sum(1 for r in result.records if not r.success)
        logger.info(f"Sweep '{sc.name}' finished: {len(result.records) - failed} ok, {failed} failed")
        return result

    def _fit_errors(self, result: SweepResult) -> dict[str, ConvergenceFit]:
        fits: dict[str, ConvergenceFit] = {}
        finished = [r for r in result.records if r.success and r.errors]
        if len(finished) < 2:
            return fits
        series = {
            "xi": [(r.tau, r.errors[-1].err_xi_l2) for r in finished],
            "phi": [(r.tau, r.errors[-1].err_phi_l2) for r in finished],
            "zeta": [(r.tau, r.errors[-1].err_zeta_l2) for r in finished],
            "v_after_layer": [(r.tau, r.v_err_sup_after_layer or 0.0) for r in finished],
        }
        for name, points in series.items():
            if all(err > 0.0 for _, err in points):
                fits[name] = convergence_fit(points)
        return fits


def run_sweep(sc: Scenario, max_workers: int = 1) -> SweepResult:
    """Convenience wrapper around SweepRunner.run."""
    return SweepRunner(max_workers=max_workers).run(sc)
