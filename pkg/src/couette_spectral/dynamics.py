"""Per-mode linear dynamics in the moving frame.

Full system for one mode (k, eta), k != 0::

    R'     = -A
    A'     = -nu p A + (p'/p) A - (2 k^2/p) Omega + p/(gamma M^2) (R + Theta)
    Omega' =  A
    Theta' = -(gamma - 1) A

With Phi = (R + Theta)/gamma and the conserved R + gamma Omega + Theta the
vorticity is Phi_in + Omega_in - Phi, which closes a two-unknown system in
(Phi, A) forced by Phi_in + Omega_in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .symbols import dt_p_symbol, p_symbol


@dataclass(frozen=True)
class FlowParams:
    gamma: float = 1.4
    nu: float = 0.01
    M: float = 1.0
    s: float = 1.5
    allow_violation: bool = False

    def __post_init__(self):
        if self.allow_violation:
            return
        if not self.gamma > 1:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not 0 < self.nu < 1:
            raise DomainError(f"nu must lie in (0, 1), got {self.nu}")
        if not 0 < self.M <= 1.0 / self.nu:
            raise DomainError(f"M must lie in (0, 1/nu], got {self.M}")
        if self.s < 0:
            raise DomainError(f"s must be nonnegative, got {self.s}")


@dataclass(frozen=True)
class ModeState:
    k: int
    eta: float
    R: complex
    A: complex
    Omega: complex
    Theta: complex

    def __post_init__(self):
        if self.k == 0:
            raise DomainError("ModeState requires k != 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.R, self.A, self.Omega, self.Theta], dtype=np.complex128)


@dataclass(frozen=True)
class ReducedModeState:
    k: int
    eta: float
    Phi: complex
    A: complex

    def __post_init__(self):
        if self.k == 0:
            raise DomainError("ReducedModeState requires k != 0")

    @classmethod
    def from_full(cls, state: ModeState, gamma: float) -> "ReducedModeState":
        return cls(state.k, state.eta, good_unknown(state.R, state.Theta, gamma), state.A)


def good_unknown(R, Theta, gamma):
    return (R + Theta) / gamma


def reconstruct_omega(Phi, Phi_in, Omega_in):
    return Phi_in + Omega_in - Phi


def rhs_full(state: ModeState, t: float, params: FlowParams):
    """Time derivative ``(dR, dA, dOmega, dTheta)`` of one mode."""
    k, eta = state.k, state.eta
    p = p_symbol(t, k, eta)
    dp = dt_p_symbol(t, k, eta)
    g, M, nu = params.gamma, params.M, params.nu
    A = state.A
    dA = (-nu * p * A + (dp / p) * A - (2.0 * k * k / p) * state.Omega
          + p / (g * M * M) * (state.R + state.Theta))
    return (-A, dA, A, -(g - 1.0) * A)


def rhs_reduced(state: ReducedModeState, t: float, params: FlowParams, forcing: complex = 0.0):
    """Time derivative ``(dPhi, dA)``; ``forcing`` is Phi_in + Omega_in of the mode.

    With ``forcing = 0`` this is the system obeyed by data with
    rho_in + gamma omega_in + theta_in = 0.
    """
    k, eta = state.k, state.eta
    p = p_symbol(t, k, eta)
    dp = dt_p_symbol(t, k, eta)
    M, nu = params.M, params.nu
    A = state.A
    c = 2.0 * k * k / p
    dA = -nu * p * A + (dp / p) * A + (p / (M * M) + c) * state.Phi - c * forcing
    return (-A, dA)


def conserved_residuals(state: ModeState, initial: ModeState, gamma: float) -> tuple[float, float]:
    """Drift of (gamma-1) R - Theta and of R + gamma Omega + Theta from their initial values."""
    if (state.k, state.eta) != (initial.k, initial.eta):
        raise DomainError(
            f"mode mismatch: ({state.k}, {state.eta}) vs ({initial.k}, {initial.eta})"
        )
    c1 = (gamma - 1.0) * state.R - state.Theta
    c1_in = (gamma - 1.0) * initial.R - initial.Theta
    c2 = state.R + gamma * state.Omega + state.Theta
    c2_in = initial.R + gamma * initial.Omega + initial.Theta
    return float(abs(c1 - c1_in)), float(abs(c2 - c2_in))
