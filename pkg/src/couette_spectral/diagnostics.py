"""Norm diagnostics of the Helmholtz components, density and temperature.

Every function takes full-lattice arrays (shape ``grid.shape``) of moving-frame
amplitudes; the shear map preserves L^2, so moving-frame norms equal the
laboratory ones.  Quadrature is the rectangle rule of
:func:`couette_spectral.grid.sobolev_norm`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .grid import GridSpec, SpectralField

RECORD_FIELDS = (
    "t",
    "norm_Pvx",
    "norm_Pvy",
    "norm_Qv",
    "norm_rho",
    "norm_theta",
    "norm_rho_plus_theta",
    "lemma_Q",
    "energy_sum",
    "conserved_r1_max",
    "conserved_r2_max",
)


@dataclass
class DiagnosticsRecord:
    t: float
    norm_Pvx: float
    norm_Pvy: float
    norm_Qv: float
    norm_rho: float
    norm_theta: float
    norm_rho_plus_theta: float
    lemma_Q: float
    energy_sum: float
    conserved_r1_max: float
    conserved_r2_max: float

    def as_dict(self) -> dict:
        return asdict(self)


def _weighted_l2(coeffs, weight, grid: GridSpec) -> float:
    w = weight * np.abs(coeffs)
    return float(np.sqrt(grid.delta_eta * np.sum(w * w)))


def _sheared(grid: GridSpec, t: float):
    k, eta = grid.mesh()
    d = eta - k * t
    p = k * k + d * d
    nonzero = k != 0
    # k = 0 row is excluded from every p-weighted diagnostic
    p = np.where(nonzero, p, 1.0)
    return k, eta, d, p, nonzero


def _require_no_zero_mode(coeffs, grid: GridSpec):
    if np.any(coeffs[grid.K] != 0):
        raise DomainError("field has nonzero k = 0 content")


def incompressible_x_norm(omega, grid: GridSpec, t: float) -> float:
    """||P[v]^x||, weight |eta - k t| / p on Omega."""
    _require_no_zero_mode(omega, grid)
    k, eta, d, p, nz = _sheared(grid, t)
    return _weighted_l2(omega, np.where(nz, np.abs(d) / p, 0.0), grid)


def incompressible_y_norm(omega, grid: GridSpec, t: float) -> float:
    """||P[v]^y||, weight |k| / p on Omega."""
    _require_no_zero_mode(omega, grid)
    k, eta, d, p, nz = _sheared(grid, t)
    return _weighted_l2(omega, np.where(nz, np.abs(k) / p, 0.0), grid)


def compressible_norm(A, grid: GridSpec, t: float) -> float:
    """||Q[v]|| = ||(-Delta_L)^(-1/2) A||."""
    _require_no_zero_mode(A, grid)
    k, eta, d, p, nz = _sheared(grid, t)
    return _weighted_l2(A, np.where(nz, p**-0.5, 0.0), grid)


def reconstruct_thermo(Phi, conserved, gamma: float):
    """Exact mode-wise (rho, theta) from Phi and (gamma - 1) R - Theta."""
    if not gamma > 1:
        raise DomainError("gamma must exceed 1")
    rho = (conserved + gamma * Phi) / gamma
    theta = (-conserved + (gamma - 1.0) * gamma * Phi) / gamma
    return rho, theta


def thermo_norms(Phi, conserved, gamma: float, grid: GridSpec):
    """L^2 norms of rho, theta and rho + theta."""
    rho, theta = reconstruct_thermo(Phi, conserved, gamma)
    one = np.ones(grid.shape)
    return (_weighted_l2(rho, one, grid), _weighted_l2(theta, one, grid),
            _weighted_l2(rho + theta, one, grid))


def lemma_quantity(Phi, A, grid: GridSpec, t: float, s: float, M: float) -> float:
    """(1/M) ||p^(-1/4) Phi||_{H^s} + ||p^(-3/4) A||_{H^s}."""
    _require_no_zero_mode(Phi, grid)
    _require_no_zero_mode(A, grid)
    k, eta, d, p, nz = _sheared(grid, t)
    js = (1.0 + k * k + eta * eta) ** (0.5 * s)
    w1 = np.where(nz, js * p**-0.25, 0.0)
    w2 = np.where(nz, js * p**-0.75, 0.0)
    return _weighted_l2(Phi, w1, grid) / M + _weighted_l2(A, w2, grid)


# Trajectory reduction --------------------------------------------------------

def to_full_lattice(half, zero_row=None):
    """Assemble a ``(2K+1, n_eta)`` array from the k >= 1 rows by conjugate symmetry."""
    half = np.asarray(half)
    K, n_eta = half.shape
    full = np.zeros((2 * K + 1, n_eta), dtype=np.complex128)
    full[K + 1:] = half
    full[:K] = np.conj(half[::-1, ::-1])
    if zero_row is not None:
        full[K] = zero_row
    return full


def mode_fields(states, kind, initial: SpectralField, gamma: float) -> dict:
    """Phi, A, Omega, (gamma-1)R - Theta and conserved drifts on the half lattice.

    ``states`` has shape ``(K, n_eta, 4)`` in the layout of ``kind``.
    """
    from .integrator import FULL, half_lattice_forcing

    K = initial.grid.K
    c = initial.coefficients
    rho0, om0, th0 = c[0, K + 1:], c[2, K + 1:], c[3, K + 1:]
    c1_in = (gamma - 1.0) * rho0 - th0
    c2_in = rho0 + gamma * om0 + th0
    if kind == FULL:
        R, A, Om, Th = (states[..., j] for j in range(4))
        Phi = (R + Th) / gamma
        C = (gamma - 1.0) * R - Th
        r2 = np.abs(R + gamma * Om + Th - c2_in)
        Omega = Om
    else:
        Phi, A, Om_aux, R_aux = (states[..., j] for j in range(4))
        Th = gamma * Phi - R_aux
        C = (gamma - 1.0) * R_aux - Th
        r2 = np.abs(R_aux + gamma * Om_aux + Th - c2_in)
        Omega = half_lattice_forcing(initial, gamma) - Phi
    r1 = np.abs(C - c1_in)
    return dict(Phi=Phi, A=A, Omega=Omega, C=C, r1=r1, r2=r2)


def diagnostics_record(t, grid: GridSpec, Phi, A, Omega, C, params, r1_max=0.0, r2_max=0.0,
                       energy_sum=None) -> DiagnosticsRecord:
    from .energy import energy_density

    if energy_sum is None:
        E = energy_density(Phi, A, grid, t, params)
        energy_sum = float(grid.delta_eta * np.sum(E))
    n_rho, n_theta, n_sum = thermo_norms(Phi, C, params.gamma, grid)
    return DiagnosticsRecord(
        t=float(t),
        norm_Pvx=incompressible_x_norm(Omega, grid, t),
        norm_Pvy=incompressible_y_norm(Omega, grid, t),
        norm_Qv=compressible_norm(A, grid, t),
        norm_rho=n_rho,
        norm_theta=n_theta,
        norm_rho_plus_theta=n_sum,
        lemma_Q=lemma_quantity(Phi, A, grid, t, params.s, params.M),
        energy_sum=energy_sum,
        conserved_r1_max=float(r1_max),
        conserved_r2_max=float(r2_max),
    )


def trajectory_records(traj) -> list[DiagnosticsRecord]:
    """One record per output time, modes folded in fixed lattice order."""
    grid = traj.grid
    out = []
    for i, t in enumerate(traj.times):
        f = mode_fields(traj.states[i], traj.kind, traj.initial, traj.params.gamma)
        full = {name: to_full_lattice(f[name]) for name in ("Phi", "A", "Omega", "C")}
        out.append(diagnostics_record(
            t, grid, full["Phi"], full["A"], full["Omega"], full["C"], traj.params,
            r1_max=float(np.max(f["r1"])), r2_max=float(np.max(f["r2"]))))
    return out
