"""Initial-layer estimation and convergence-rate fits."""

import logging
import math
from typing import Sequence

import numpy as np
import scipy.stats

from app.models.base import check_tau
from app.models.reports import ConvergenceFit, LayerReport

logger = logging.getLogger(__name__)

PLATEAU_FACTOR = 4.0
FIT_WINDOW_FACTOR = 10.0
MIN_FIT_SAMPLES = 5


def estimate_layer(
    traj: Sequence[tuple[float, float]],
    tau: float,
    threshold_ratio: float = 0.01,
    metric: str = "eta_h2_norm",
) -> LayerReport:
    """Layer width, decay rate and plateau of a decaying trajectory.

    plateau is the median of the samples in the final quarter of the time
    span (not of the sample count; layer trajectories are dense early).
    t_star is the first sample time (from the start of the series) whose
    value is at most max(threshold_ratio * value_0, 4 * plateau). The decay
    rate is the negated least-squares slope of log(value) over the initial
    run of samples with value >= 10 * plateau.
    """
    tau = check_tau(tau)
    if not 0.0 < threshold_ratio < 1.0:
        raise ValueError(f"threshold_ratio must lie in (0, 1), got {threshold_ratio}")
    if len(traj) < 2:
        raise ValueError("a layer estimate needs at least two samples")
    times = np.array([t for t, _ in traj], dtype=float)
    values = np.array([v for _, v in traj], dtype=float)
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("trajectory times must be strictly increasing")
    if np.any(values < 0.0):
        raise ValueError("trajectory values must be non-negative")

    t0 = times[0]
    value0 = float(values[0])
    tail = values[times >= t0 + 0.75 * (times[-1] - t0)]
    plateau = float(np.median(tail))
    threshold = max(threshold_ratio * value0, PLATEAU_FACTOR * plateau)

    t_star = None
    crossed = False
    if value0 > threshold:
        below = np.nonzero(values <= threshold)[0]
        if below.size:
            crossed = True
            t_star = float(times[below[0]] - t0)
    if not crossed:
        logger.warning(f"tau={tau:g}: {metric} never crossed the layer threshold {threshold:.3g}")

    window = 0
    while window < len(values) and values[window] >= FIT_WINDOW_FACTOR * plateau and values[window] > 0.0:
        window += 1

    fitted_rate = None
    fit_available = False
    if window >= MIN_FIT_SAMPLES:
        fit = scipy.stats.linregress(times[:window] - t0, np.log(values[:window]))
        if fit.slope < 0.0:
            fitted_rate = float(-fit.slope)
            fit_available = True
    if not fit_available:
        logger.warning(f"tau={tau:g}: decay-rate fit unavailable ({window} samples in window)")

    return LayerReport(
        tau=tau,
        metric=metric,
        eta0_norm=value0,
        trajectory=[(float(t), float(v)) for t, v in zip(times, values)],
        fitted_rate=fitted_rate,
        fit_available=fit_available,
        fit_samples=window,
        t_star=t_star,
        crossed=crossed,
        plateau=plateau,
        threshold=threshold,
    )


def post_layer_ceiling(traj: Sequence[tuple[float, float]], t_star: float) -> float:
    """Largest value at or after t0 + t_star: the measured floor the layer decays onto."""
    t0 = traj[0][0]
    after = [v for t, v in traj if t - t0 >= t_star]
    if not after:
        raise ValueError(f"no samples at or after t_star={t_star}")
    return max(after)


def envelope_ratio(traj: Sequence[tuple[float, float]], tau: float, t_star: float) -> float:
    """max over samples of value(t) / (value_0 e^{-t/tau^2} + P), P the post-layer ceiling.

    Values are amplitudes. A ratio <= 1.25 is the sampled form of the layer
    estimate |eta(t)| <= |eta_0| e^{-t/tau^2} + C tau^2.
    """
    tau = check_tau(tau)
    ceiling = post_layer_ceiling(traj, t_star)
    t0, value0 = traj[0]
    worst = 0.0
    for t, value in traj:
        bound = value0 * math.exp(-(t - t0) / tau**2) + ceiling
        if bound > 0.0:
            worst = max(worst, value / bound)
        elif value > 0.0:
            return float("inf")
    return worst


def convergence_fit(errors: Sequence[tuple[float, float]]) -> ConvergenceFit:
    """Slope of log(error) against log(tau) plus pairwise log2 ratios."""
    if len(errors) < 2:
        raise ValueError("a convergence fit needs at least two points")
    taus = [tau for tau, _ in errors]
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau values must be strictly decreasing")
    if any(err <= 0.0 for _, err in errors):
        raise ValueError("errors must be positive")

    x = [math.log(tau) for tau, _ in errors]
    y = [math.log(err) for _, err in errors]
    if len(set(y)) == 1:
        slope, intercept, r = 0.0, y[0], 0.0
    else:
        slope, intercept, r, _, _ = scipy.stats.linregress(x, y)
    ratios = [
        math.log2(e0 / e1) / math.log2(t0 / t1)
        for (t0, e0), (t1, e1) in zip(errors, errors[1:])
    ]
    return ConvergenceFit(
        rate=float(slope),
        intercept=float(intercept),
        r_squared=float(r**2),
        log2_ratios=ratios,
        points=[(float(t), float(e)) for t, e in errors],
    )
