"""Weighted unknowns, the Lyapunov functional and its exact balance.

For one mode with k != 0 the weighted unknowns are::

    Z1 = (1/M) <k,eta>^s m^-1 p^-1/4 Phi,   Z2 = <k,eta>^s m^-1 p^-3/4 A

and the functional is::

    E = 1/2 (1 + M^2 p'^2/p^3) |Z1|^2 + 1/2 |Z2|^2
        + (M/4) (p'/p^{3/2}) Re(conj(Z1) Z2) - (M nu^{1/3}/4) p^{-1/2} Re(conj(Z1) Z2)

:func:`balance_terms` returns every term of dE/dt.  The seven classical
terms ``D1..D7`` are complemented by ``D8`` (ghost-multiplier cross term) and
``D9`` (direct forcing of |Z2|^2), and ``D7`` pairs the forcing with Z1; with
these the balance is an exact identity.  ``printed=True`` reproduces the
seven-term version, which leaves a residual equal to the omitted terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import FlowParams
from .errors import DomainError
from .grid import GridSpec
from .integrator import REDUCED, advance_mode
from .symbols import dt_p_symbol, ghost_log_rate, ghost_multiplier, gronwall_factor, p_symbol

__all__ = [
    "WeightedPair", "EnergyRecord", "weighted_pair", "energy_functional", "balance_terms",
    "balance_segment", "energy_balance_residual", "coercivity_ratio", "gronwall_factor",
    "energy_density",
]


@dataclass(frozen=True)
class WeightedPair:
    Z1: complex
    Z2: complex


@dataclass(frozen=True)
class EnergyRecord:
    E: float
    coercive_form: float
    cross_transport: float   # (M/4) p'/p^{3/2} Re(conj Z1 Z2)
    cross_ghost: float       # -(M nu^{1/3}/4) p^{-1/2} Re(conj Z1 Z2)


def _weights(t, k, eta, s, nu):
    p = p_symbol(t, k, eta)
    js = (1.0 + np.asarray(k, float) ** 2 + np.asarray(eta, float) ** 2) ** (0.5 * s)
    return js / ghost_multiplier(t, k, eta, nu), p


def weighted_pair(Phi, A, t, k, eta, s, M, nu) -> WeightedPair:
    J, p = _weights(t, k, eta, s, nu)
    return WeightedPair(Z1=J * p**-0.25 * Phi / M, Z2=J * p**-0.75 * A)


def _energy_parts(Z1, Z2, t, k, eta, M, nu):
    p = p_symbol(t, k, eta)
    dp = dt_p_symbol(t, k, eta)
    a = np.abs(Z1) ** 2
    b = np.abs(Z2) ** 2
    X = np.real(np.conj(Z1) * Z2)
    diag = 0.5 * (1.0 + M * M * dp * dp / p**3) * a + 0.5 * b
    ct = 0.25 * M * dp / p**1.5 * X
    cg = -0.25 * M * np.cbrt(nu) / np.sqrt(p) * X
    coercive = 0.25 * ((1.0 + M * M * dp * dp / p**3) * a + b)
    return diag, ct, cg, coercive


def energy_functional(pair: WeightedPair, t, k, eta, M, nu) -> EnergyRecord:
    diag, ct, cg, coercive = _energy_parts(pair.Z1, pair.Z2, t, k, eta, M, nu)
    return EnergyRecord(E=float(diag + ct + cg), coercive_form=float(coercive),
                        cross_transport=float(ct), cross_ghost=float(cg))


def coercivity_ratio(record: EnergyRecord) -> float:
    if not record.coercive_form > 0:
        raise DomainError("degenerate energy record (zero coercive form)")
    return record.E / record.coercive_form


def energy_density(Phi, A, grid: GridSpec, t, params: FlowParams):
    """E for every k != 0 lattice point (zero on the k = 0 row)."""
    k, eta = grid.mesh()
    nz = k != 0
    kk = np.where(nz, k, 1.0)
    Phi = np.where(nz, Phi, 0.0)
    A = np.where(nz, A, 0.0)
    pair = weighted_pair(Phi, A, t, kk, eta, params.s, params.M, params.nu)
    diag, ct, cg, _ = _energy_parts(pair.Z1, pair.Z2, t, kk, eta, params.M, params.nu)
    return np.where(nz, diag + ct + cg, 0.0)


def balance_terms(Phi, A, t, k, eta, params: FlowParams, forcing=0.0, printed=False) -> dict:
    """Every term of dE/dt for one mode.

    Returns a dict with ``damping_Z1`` and ``damping_Z2`` (entering with a minus
    sign) and the source terms ``D1..D9``; ``dEdt`` is the assembled total.
    """
    if k == 0:
        raise DomainError("energy balance needs k != 0")
    M, nu, s = params.M, params.nu, params.s
    c = np.cbrt(nu)
    pair = weighted_pair(Phi, A, t, k, eta, s, M, nu)
    Z1, Z2 = pair.Z1, pair.Z2
    p = p_symbol(t, k, eta)
    dp = dt_p_symbol(t, k, eta)
    mu = ghost_log_rate(t, k, eta, nu)
    J = (1.0 + k * k + eta * eta) ** (0.5 * s) / ghost_multiplier(t, k, eta, nu)
    a = abs(Z1) ** 2
    b = abs(Z2) ** 2
    X = (np.conj(Z1) * Z2).real
    FZ1 = (forcing * np.conj(Z1)).real
    FZ2 = (forcing * np.conj(Z2)).real
    k2 = k * k

    terms = {
        "damping_Z1": (mu + 0.25 * c * (1.0 + 2.0 * M * M * k2 / p**2) + M * M * mu * dp**2 / p**3) * a,
        "damping_Z2": (mu + nu * p) * b,
        "D1": 0.25 * c * b,
        "D2": 0.25 * M * nu * c * np.sqrt(p) * X,
        "D3": -0.25 * nu * M * dp / np.sqrt(p) * X,
        "D4": M * M * (2.5 * k2 * dp / p**3 - 1.75 * dp**3 / p**4) * a,
        "D5": M * (0.125 * c * dp / p**1.5 + 2.5 * k2 / p**1.5 - 1.375 * dp**2 / p**2.5
                   + 0.5 * c * mu / np.sqrt(p)) * X,
        "D6": J * M * c * k2 / (2.0 * p**2.25) * FZ1,
    }
    if printed:
        terms["D7"] = -J * M * k2 * dp / (2.0 * p**3.25) * FZ2
        terms["D8"] = 0.0
        terms["D9"] = 0.0
    else:
        terms["D7"] = -J * M * k2 * dp / (2.0 * p**3.25) * FZ1
        terms["D8"] = -0.5 * M * mu * dp / p**1.5 * X
        terms["D9"] = -J * 2.0 * k2 / p**1.75 * FZ2
    total = -terms["damping_Z1"] - terms["damping_Z2"]
    for i in range(1, 10):
        total += terms[f"D{i}"]
    terms["dEdt"] = total
    return terms


@dataclass
class ModeSegment:
    """Five equispaced samples of one mode around ``t`` (reduced layout)."""

    k: int
    eta: float
    t: float
    h: float
    Phi: np.ndarray
    A: np.ndarray
    forcing: complex

    @property
    def times(self):
        return self.t + self.h * np.arange(-2, 3)


def balance_segment(Phi, A, t, k, eta, params: FlowParams, forcing=0.0, fd_dt=1e-4,
                    n_sub=20) -> ModeSegment:
    """Integrate the reduced system from the state at ``t`` to ``t +- fd_dt, t +- 2 fd_dt``."""
    y = np.array([Phi, A, 0.0, 0.0], dtype=np.complex128)
    phis = np.empty(5, dtype=np.complex128)
    As = np.empty(5, dtype=np.complex128)
    phis[2], As[2] = Phi, A
    for direction in (1, -1):
        cur = y.copy()
        for j in (1, 2):
            t0 = t + direction * (j - 1) * fd_dt
            cur = advance_mode(REDUCED, cur, t0, t0 + direction * fd_dt, k, eta, params,
                               forcing=forcing, n_sub=n_sub)
            phis[2 + direction * j] = cur[0]
            As[2 + direction * j] = cur[1]
    return ModeSegment(k=k, eta=eta, t=t, h=fd_dt, Phi=phis, A=As, forcing=complex(forcing))


def energy_balance_residual(segment: ModeSegment, params: FlowParams, printed=False) -> float:
    """|dE/dt (4th-order central difference) - assembled balance| / (1 + sum |terms|)."""
    if len(segment.Phi) != 5 or len(segment.A) != 5:
        raise DomainError("energy balance needs a five-point segment")
    k, eta, h = segment.k, segment.eta, segment.h
    Es = []
    for tj, phi, a in zip(segment.times, segment.Phi, segment.A):
        pair = weighted_pair(phi, a, tj, k, eta, params.s, params.M, params.nu)
        Es.append(energy_functional(pair, tj, k, eta, params.M, params.nu).E)
    fd = (Es[0] - 8.0 * Es[1] + 8.0 * Es[3] - Es[4]) / (12.0 * h)
    terms = balance_terms(segment.Phi[2], segment.A[2], segment.t, k, eta, params,
                          forcing=segment.forcing, printed=printed)
    scale = 1.0 + sum(abs(v) for name, v in terms.items() if name != "dEdt")
    return float(abs(fd - terms["dEdt"]) / scale)
