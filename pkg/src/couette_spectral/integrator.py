"""Mode-parallel time integration with exact integrating factors.

For every mode the divergence amplitude is rescaled over a step starting at
``t0`` as ``B = A exp(V(t0, t)) p(t0) / p(t)`` with ``V`` the exact integral of
``nu p``.  This removes both ``-nu p A`` and ``(p'/p) A`` exactly; the remaining
system is advanced with classical RK4 (a Lawson scheme).  The k = 0 row uses
the factor ``exp(-nu eta^2 (t - t0))`` instead.

Modes are independent, so a run is a data-parallel map over modes.  The
kernels release the GIL and a thread pool hands out fixed interleaved chunks;
each mode writes only its own output slots, so results do not depend on the
thread count.
"""

from __future__ import annotations

import math
import os
import sys
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .dynamics import FlowParams
from .errors import DomainError, IntegrationError
from .grid import GridSpec, SpectralField

FULL = 0      # state (R, A, Omega, Theta)
REDUCED = 1   # state (Phi, A, Omega_aux, R_aux); A forced by Phi_in + Omega_in
ZERO = 2      # state (rho0, alpha0, omega0, theta0) at k = 0

THREADS_ENV = "COUETTE_THREADS"
FORCING_ROUNDOFF = 1e-14  # |Phi_in + Omega_in| below this (relative) counts as unforced


def viscous_phase(t0: float, t1: float, k: int, eta: float, nu: float) -> float:
    """nu * integral of p over [t0, t1]."""
    if k == 0:
        raise DomainError("viscous_phase needs k != 0")
    if t1 < t0:
        raise DomainError("viscous_phase needs t1 >= t0")
    return _viscous_phase(t0, t1 - t0, float(k), float(eta), nu)


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _viscous_phase(t0, h, k, eta, nu):
    # (a^3 - b^3)/(3k) with a - b = k h, written without cancellation
    a = eta - k * t0
    b = eta - k * (t0 + h)
    return nu * h * (k * k + (a * a + a * b + b * b) / 3.0)


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _factor(kind, t0, h, k, eta, nu):
    # A = factor * B over a step from t0 (factor = 1 at h = 0)
    if kind == ZERO:
        return math.exp(-nu * eta * eta * h)
    a = eta - k * t0
    b = eta - k * (t0 + h)
    return math.exp(-_viscous_phase(t0, h, k, eta, nu)) * (k * k + b * b) / (k * k + a * a)


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _coefficients(kind, t, k, eta, M, gamma, forcing):
    """Coefficients of A' = g0 y0 + g2 y2 + g3 y3 + src after the integrating factor."""
    if kind == ZERO:
        g = eta * eta / (gamma * M * M)
        return g, 0.0, g, 0.0j
    d = eta - k * t
    p = k * k + d * d
    c = 2.0 * k * k / p
    if kind == FULL:
        g = p / (gamma * M * M)
        return g, -c, g, 0.0j
    return p / (M * M) + c, 0.0, 0.0, -c * forcing


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _rk4_step(kind, y, t0, h, k, eta, nu, M, gamma, forcing):
    """Advance ``y`` (length-4 complex array) in place from t0 to t0 + h."""
    c3 = -1.0 if kind == REDUCED else -(gamma - 1.0)
    fh = _factor(kind, t0, 0.5 * h, k, eta, nu)
    f1 = _factor(kind, t0, h, k, eta, nu)
    ifh = 1.0 / fh
    if1 = 1.0 / f1
    g0a, g2a, g3a, sa = _coefficients(kind, t0, k, eta, M, gamma, forcing)
    g0b, g2b, g3b, sb = _coefficients(kind, t0 + 0.5 * h, k, eta, M, gamma, forcing)
    g0c, g2c, g3c, sc = _coefficients(kind, t0 + h, k, eta, M, gamma, forcing)
    y0 = y[0]
    b = y[1]
    y2 = y[2]
    y3 = y[3]
    hh = 0.5 * h

    # the non-A slots all move along the A direction: dy_j = c_j A
    a1 = b
    kb1 = g0a * y0 + g2a * y2 + g3a * y3 + sa
    u0 = y0 - hh * a1
    u2 = y2 + hh * a1
    u3 = y3 + hh * c3 * a1
    a2 = fh * (b + hh * kb1)
    kb2 = (g0b * u0 + g2b * u2 + g3b * u3 + sb) * ifh
    u0 = y0 - hh * a2
    u2 = y2 + hh * a2
    u3 = y3 + hh * c3 * a2
    a3 = fh * (b + hh * kb2)
    kb3 = (g0b * u0 + g2b * u2 + g3b * u3 + sb) * ifh
    u0 = y0 - h * a3
    u2 = y2 + h * a3
    u3 = y3 + h * c3 * a3
    a4 = f1 * (b + h * kb3)
    kb4 = (g0c * u0 + g2c * u2 + g3c * u3 + sc) * if1

    w = h / 6.0
    sa_ = w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    y[0] = y0 - sa_
    y[1] = f1 * (b + w * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4))
    y[2] = y2 + sa_
    y[3] = y3 + c3 * sa_


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _step_size(kind, t, k, eta, nu, M, safety, dt_max, visc_cap):
    d = eta - k * t
    p = k * k + d * d
    dt = safety * M / (1.0 + math.sqrt(p))
    if nu * p * dt > visc_cap:
        dt = visc_cap / (nu * p)
    if dt > dt_max:
        dt = dt_max
    return dt


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _finite(y):
    for j in range(4):
        if not (math.isfinite(y[j].real) and math.isfinite(y[j].imag)):
            return False
    return True


@numba.njit(cache=True, nogil=True, error_model="numpy")
def _integrate_modes(kind, idx, ks, etas, y_init, forcing, out_times, nu, M, gamma,
                     safety, dt_max, visc_cap, flush_tol, out, status, fail_t, n_steps):
    y = np.empty(4, dtype=np.complex128)
    for ii in range(idx.shape[0]):
        i = idx[ii]
        k = ks[i]
        eta = etas[i]
        F = forcing[i]
        for j in range(4):
            y[j] = y_init[i, j]
        scale = max(abs(y[0]), abs(y[1]), abs(F))
        flushed = False
        t = 0.0
        steps = 0
        for oi in range(out_times.shape[0]):
            target = out_times[oi]
            while t < target and not flushed:
                dt = _step_size(kind, t, k, eta, nu, M, safety, dt_max, visc_cap)
                last = t + dt >= target
                if last:
                    dt = target - t
                _rk4_step(kind, y, t, dt, k, eta, nu, M, gamma, F)
                steps += 1
                t = target if last else t + dt
                if not _finite(y):
                    status[i] = 1
                    fail_t[i] = t
                    break
                if (flush_tol > 0.0 and abs(F) <= FORCING_ROUNDOFF * scale
                        and max(abs(y[0]), abs(y[1])) < flush_tol * scale):
                    # unforced (up to roundoff) and decayed below any diagnostic: freeze
                    y[0] = 0.0
                    y[1] = 0.0
                    flushed = True
            if status[i] != 0:
                break
            if flushed:
                t = target
            for j in range(4):
                out[oi, i, j] = y[j]
        n_steps[i] = steps


@dataclass
class StepControl:
    t_end: float
    output_times: np.ndarray | None = None
    dt_max: float = 0.1
    safety: float = 0.1
    visc_cap: float = 1.0
    n_outputs: int = 201

    def __post_init__(self):
        if self.t_end < 0:
            raise DomainError("t_end must be nonnegative")
        if not self.dt_max > 0 or not 0 < self.safety <= 1 or not self.visc_cap > 0:
            raise DomainError("dt_max, visc_cap must be positive and safety in (0, 1]")
        if self.output_times is None:
            n = 1 if self.t_end == 0 else max(int(self.n_outputs), 2)
            self.output_times = np.linspace(0.0, self.t_end, n)
        ts = np.asarray(self.output_times, dtype=np.float64)
        if ts.ndim != 1 or ts.size == 0 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise DomainError("output_times must start at 0 and be strictly ascending")
        if ts[-1] > self.t_end:
            raise DomainError("output_times exceed t_end")
        self.output_times = ts


def resolve_threads(threads=None) -> int:
    """Thread count: explicit value, else ``$COUETTE_THREADS``, else 1; ``"auto"`` = CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env:
        threads = env
    if threads is None:
        return 1
    if threads == "auto":
        return os.cpu_count() or 1
    n = int(threads)
    if n < 1:
        raise DomainError("threads must be >= 1")
    return n


def integrate_modes(kind, ks, etas, y_init, forcing, control: StepControl, params: FlowParams,
                    threads=1, flush_tol=0.0):
    """Integrate a batch of independent modes; returns ``(states, n_steps)``.

    ``states`` has shape ``(n_out, n_modes, 4)``.  Raises
    :class:`IntegrationError` naming the first failed mode.
    """
    ks = np.ascontiguousarray(ks, dtype=np.float64)
    etas = np.ascontiguousarray(etas, dtype=np.float64)
    y_init = np.ascontiguousarray(y_init, dtype=np.complex128)
    forcing = np.ascontiguousarray(forcing, dtype=np.complex128)
    n = ks.shape[0]
    out_times = control.output_times
    out = np.zeros((out_times.shape[0], n, 4), dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    fail_t = np.zeros(n, dtype=np.float64)
    n_steps = np.zeros(n, dtype=np.int64)
    args = (ks, etas, y_init, forcing, out_times, params.nu, params.M, params.gamma,
            control.safety, control.dt_max, control.visc_cap, flush_tol, out, status, fail_t, n_steps)
    threads = max(1, min(int(threads), n)) if n else 1
    if threads == 1:
        _integrate_modes(kind, np.arange(n, dtype=np.int64), *args)
    else:
        # interleaved chunks balance the cost, which grows with |k|
        n_chunks = threads * 4
        chunks = [np.arange(c, n, n_chunks, dtype=np.int64) for c in range(n_chunks)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda idx: _integrate_modes(kind, idx, *args), chunks))
    bad = np.flatnonzero(status)
    if bad.size:
        i = int(bad[0])
        raise IntegrationError(
            f"non-finite state in mode k={ks[i]:g}, eta={etas[i]:g} at t={fail_t[i]:.6g}",
            k=ks[i], eta=etas[i], t=fail_t[i])
    return out, n_steps


def advance_mode(kind, y, t0, t1, k, eta, params: FlowParams, forcing=0.0, n_sub=None,
                 safety=0.1, dt_max=0.1, visc_cap=1.0):
    """Single mode from t0 to t1 (either direction); used for short segments and tests.

    With ``n_sub`` given, exactly that many equal steps are taken.
    """
    y = np.array(y, dtype=np.complex128)
    if t1 == t0:
        return y
    if n_sub is None:
        dt = _step_size(kind, t0, float(k), float(eta), params.nu, params.M, safety, dt_max, visc_cap)
        n_sub = max(1, int(math.ceil(abs(t1 - t0) / dt)))
    h = (t1 - t0) / n_sub
    for i in range(n_sub):
        _rk4_step(kind, y, t0 + i * h, h, float(k), float(eta), params.nu, params.M,
                  params.gamma, complex(forcing))
    return y


# Spectral-field level ------------------------------------------------------

@dataclass
class Trajectory:
    """Output of :func:`evolve`.

    ``states`` holds the integrated k >= 1 half lattice, shape
    ``(n_out, K, n_eta, 4)`` in the layout of ``kind``; ``zero_states`` the
    k = 0 row ``(n_out, n_eta, 4)``.  ``records`` are diagnostics rows.
    """

    times: np.ndarray
    grid: GridSpec
    params: FlowParams
    kind: int
    initial: SpectralField
    states: np.ndarray = field(repr=False)
    zero_states: np.ndarray = field(repr=False)
    n_steps: int = 0
    wall_time: float = 0.0
    records: list = field(default_factory=list, repr=False)

    def forcing_half(self) -> np.ndarray:
        return half_lattice_forcing(self.initial, self.params.gamma)

    def zero_mode_max(self) -> np.ndarray:
        return np.max(np.abs(self.zero_states), axis=(1, 2))

    def snapshot(self, i: int) -> SpectralField:
        """Moving-frame (R, A, Omega, Theta) at output index ``i`` on the full lattice."""
        from .diagnostics import mode_fields, to_full_lattice

        f = mode_fields(self.states[i], self.kind, self.initial, self.params.gamma)
        zero = self.zero_states[i]
        g = self.params.gamma
        R = (f["C"] + g * f["Phi"]) / g
        Theta = g * f["Phi"] - R
        out = SpectralField.zeros(self.grid)
        for slot, half in (("rho", R), ("alpha", f["A"]), ("omega", f["Omega"]), ("theta", Theta)):
            out[slot] = to_full_lattice(half, zero[:, ("rho", "alpha", "omega", "theta").index(slot)])
        return out


def half_lattice_initial(initial: SpectralField, kind: int, gamma: float) -> np.ndarray:
    """Initial state of the k >= 1 half lattice, shape ``(K, n_eta, 4)``."""
    K = initial.grid.K
    rho, alpha, omega, theta = (initial.coefficients[i, K + 1:, :] for i in range(4))
    if kind == FULL:
        return np.stack([rho, alpha, omega, theta], axis=-1)
    phi = (rho + theta) / gamma
    return np.stack([phi, alpha, omega, rho], axis=-1)


def half_lattice_forcing(initial: SpectralField, gamma: float) -> np.ndarray:
    K = initial.grid.K
    c = initial.coefficients
    return (c[0, K + 1:, :] + c[3, K + 1:, :]) / gamma + c[2, K + 1:, :]


def evolve(initial: SpectralField, control: StepControl, params: FlowParams, *,
           kind: int = REDUCED, threads=1, flush_tol: float = 0.0, progress: bool = False,
           diagnostics: bool = True) -> Trajectory:
    """Advance every mode of ``initial`` and reduce diagnostics at the output times."""
    if kind not in (FULL, REDUCED):
        raise DomainError("kind must be FULL or REDUCED")
    if not initial.is_hermitian():
        raise DomainError("initial field is not Hermitian-symmetric")
    grid = initial.grid
    K, n_eta = grid.K, grid.n_eta
    threads = resolve_threads(threads)
    start = _time.perf_counter()

    ks_half = np.repeat(np.arange(1, K + 1, dtype=np.float64), n_eta)
    etas_half = np.tile(grid.etas, K)
    y0 = half_lattice_initial(initial, kind, params.gamma).reshape(K * n_eta, 4)
    forcing = half_lattice_forcing(initial, params.gamma).reshape(-1) if kind == REDUCED \
        else np.zeros(K * n_eta, dtype=np.complex128)
    states, steps = integrate_modes(kind, ks_half, etas_half, y0, forcing, control, params,
                                    threads=threads, flush_tol=flush_tol)
    n_out = control.output_times.shape[0]
    states = states.reshape(n_out, K, n_eta, 4)

    zero0 = np.stack([initial.coefficients[i, K, :] for i in range(4)], axis=-1)
    zeta = grid.etas
    nonneg = np.flatnonzero(zeta >= 0)
    zstates, zsteps = integrate_modes(ZERO, np.zeros(nonneg.size), zeta[nonneg], zero0[nonneg],
                                      np.zeros(nonneg.size, dtype=np.complex128), control, params,
                                      threads=threads)
    zero_states = np.zeros((n_out, n_eta, 4), dtype=np.complex128)
    zero_states[:, nonneg, :] = zstates
    neg = np.flatnonzero(zeta < 0)
    zero_states[:, neg, :] = np.conj(zero_states[:, n_eta - 1 - neg, :])

    traj = Trajectory(times=control.output_times.copy(), grid=grid, params=params, kind=kind,
                      initial=initial, states=states, zero_states=zero_states,
                      n_steps=int(steps.sum() + zsteps.sum()),
                      wall_time=_time.perf_counter() - start)
    if progress:
        print(f"evolve: {K * n_eta} modes, {traj.n_steps} steps, {traj.wall_time:.2f} s, "
              f"{threads} thread(s)", file=sys.stderr)
    if diagnostics:
        from .diagnostics import trajectory_records

        traj.records = trajectory_records(traj)
    return traj
