"""Exponential integrators for du/dt = -rate * u + N(u) with a per-component rate.

States are lists of real grid arrays. Each component carries a scalar
damping rate (0 for undamped components), so the stiff part is diagonal and
integrated exactly.
"""

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

Components = list[np.ndarray]
Remainder = Callable[[Components], Components]

CONTOUR_POINTS = 32


@lru_cache(maxsize=256)
def etdrk4_coefficients(h: float, rate: float) -> tuple[float, float, float, float, float, float]:
    """(e^{-rate h/2}, e^{-rate h}, f0, f1, f2, f3) for step h.

    The phi-function weights come from a contour mean over a unit circle
    around z = -rate*h, which avoids the cancellation of the closed forms for
    small |z|. rate == 0 gives the classical RK4 weights exactly.
    """
    if rate == 0.0:
        return 1.0, 1.0, h / 2.0, h / 6.0, h / 6.0, h / 6.0
    z = -rate * h
    roots = np.exp(1j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
    lr = z + roots
    exp_lr = np.exp(lr)
    f0 = h * float(np.mean((np.exp(lr / 2.0) - 1.0) / lr).real)
    f1 = h * float(np.mean((-4.0 - lr + exp_lr * (4.0 - 3.0 * lr + lr**2)) / lr**3).real)
    f2 = h * float(np.mean((2.0 + lr + exp_lr * (lr - 2.0)) / lr**3).real)
    f3 = h * float(np.mean((-4.0 - 3.0 * lr - lr**2 + exp_lr * (4.0 - lr)) / lr**3).real)
    return float(np.exp(z / 2.0)), float(np.exp(z)), f0, f1, f2, f3


def etdrk4_step(u: Components, h: float, rates: Sequence[float], remainder: Remainder) -> Components:
    """Cox-Matthews ETDRK4 step."""
    coeffs = [etdrk4_coefficients(h, r) for r in rates]
    n0 = remainder(u)
    a = [c[0] * ui + c[2] * ni for c, ui, ni in zip(coeffs, u, n0)]
    na = remainder(a)
    b = [c[0] * ui + c[2] * ni for c, ui, ni in zip(coeffs, u, na)]
    nb = remainder(b)
    cc = [c[0] * ai + c[2] * (2.0 * nbi - n0i) for c, ai, nbi, n0i in zip(coeffs, a, nb, n0)]
    nc = remainder(cc)
    return [
        c[1] * ui + c[3] * n0i + 2.0 * c[4] * (nai + nbi) + c[5] * nci
        for c, ui, n0i, nai, nbi, nci in zip(coeffs, u, n0, na, nb, nc)
    ]


def rk4_step(u: Components, h: float, remainder: Remainder) -> Components:
    """Classical explicit RK4 on the remainder only."""
    k1 = remainder(u)
    k2 = remainder([ui + 0.5 * h * ki for ui, ki in zip(u, k1)])
    k3 = remainder([ui + 0.5 * h * ki for ui, ki in zip(u, k2)])
    k4 = remainder([ui + h * ki for ui, ki in zip(u, k3)])
    return [
        ui + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for ui, a, b, c, d in zip(u, k1, k2, k3, k4)
    ]


def strang_step(u: Components, h: float, rates: Sequence[float], remainder: Remainder) -> Components:
    """Exact half-step damping, RK4 on the remainder, exact half-step damping."""
    half = [float(np.exp(-r * h / 2.0)) for r in rates]
    u = [f * ui for f, ui in zip(half, u)]
    u = rk4_step(u, h, remainder)
    return [f * ui for f, ui in zip(half, u)]
