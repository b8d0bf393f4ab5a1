"""x-averaged (k = 0) dynamics and the damped-wave closed form for alpha_0."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .dynamics import FlowParams


@dataclass(frozen=True)
class ZeroModeState:
    eta: float
    rho0: complex
    alpha0: complex
    omega0: complex
    theta0: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.rho0, self.alpha0, self.omega0, self.theta0], dtype=np.complex128)


def zero_mode_rhs(state: ZeroModeState, params: FlowParams):
    eta2 = state.eta * state.eta
    g, M, nu = params.gamma, params.M, params.nu
    a = state.alpha0
    da = eta2 / (g * M * M) * (state.rho0 + state.theta0) - nu * eta2 * a
    return (-a, da, a, -(g - 1.0) * a)


def damped_wave_roots(eta: float, nu: float, M: float) -> tuple[complex, complex]:
    """Roots of lambda^2 + nu eta^2 lambda + eta^2/M^2, ordered (+sqrt, -sqrt)."""
    b = nu * eta * eta
    c = eta * eta / (M * M)
    disc = cmath.sqrt(b * b - 4.0 * c)
    return (-b + disc) / 2.0, (-b - disc) / 2.0


def alpha0_closed_form(t, state: ZeroModeState, params: FlowParams):
    """alpha_0(t) from the two-root solution of the damped wave equation.

    Initial slope is read off the first-order system, so the result is the
    exact solution of :func:`zero_mode_rhs` for alpha_0.
    """
    t = np.asarray(t, dtype=float)
    a0 = state.alpha0
    da0 = zero_mode_rhs(state, params)[1]
    lp, lm = damped_wave_roots(state.eta, params.nu, params.M)
    gap = lp - lm
    if abs(gap) <= 1e-12 * max(1.0, abs(lp)):
        # repeated root: (c0 + c1 t) e^{lambda t}
        return (a0 + (da0 - lp * a0) * t) * np.exp(lp * t)
    cp = (da0 - lm * a0) / gap
    cm = (lp * a0 - da0) / gap
    return cp * np.exp(lp * t) + cm * np.exp(lm * t)
