"""Verification routines behind the ``oracle-check``, ``zero-mode-check`` and
``verify-energy`` subcommands.  Each returns a plain dict report."""

from __future__ import annotations

import numpy as np

from .dynamics import FlowParams
from .energy import (balance_segment, coercivity_ratio, energy_balance_residual,
                     energy_functional, weighted_pair)
from .errors import DomainError
from .integrator import FULL, REDUCED, ZERO, StepControl, Trajectory, evolve, integrate_modes
from .diagnostics import mode_fields
from .grid import SpectralField
from .zero_mode import ZeroModeState, alpha0_closed_form


def oracle_check(initial: SpectralField, control: StepControl, params: FlowParams,
                 threads=1) -> dict:
    """Full four-unknown integration against the reduced (Phi, A) path.

    The difference of (Omega, A) is measured per mode relative to the mode's
    largest |Omega| or |A| over the run.
    """
    full = evolve(initial, control, params, kind=FULL, threads=threads, diagnostics=False)
    red = evolve(initial, control, params, kind=REDUCED, threads=threads, diagnostics=False)
    return compare_trajectories(full, red)


def compare_trajectories(full: Trajectory, red: Trajectory) -> dict:
    g = full.params.gamma
    diff = np.zeros(full.states.shape[1:3])
    scale = np.zeros_like(diff)
    for i in range(full.times.size):
        a = mode_fields(full.states[i], FULL, full.initial, g)
        b = mode_fields(red.states[i], REDUCED, red.initial, g)
        d = np.maximum(np.abs(a["Omega"] - b["Omega"]), np.abs(a["A"] - b["A"]))
        diff = np.maximum(diff, d)
        scale = np.maximum(scale, np.maximum(np.abs(a["Omega"]), np.abs(a["A"])))
    live = scale > 0
    rel = np.where(live, diff / np.where(live, scale, 1.0), 0.0)
    i, j = np.unravel_index(np.argmax(rel), rel.shape)
    return dict(max_rel_diff=float(rel[i, j]), argmax_k=int(i + 1),
                argmax_eta=float(full.grid.etas[j]), n_modes=int(live.sum()),
                n_times=int(full.times.size))


def zero_mode_check(etas=(0.5, 1.0, 3.0), t_end=20.0, params: FlowParams | None = None,
                    safety=0.01, n_outputs=201, state=(1.0, 0.5, 0.0, -0.3)) -> dict:
    """Closed-form alpha_0 against direct integration of the k = 0 system."""
    params = params or FlowParams()
    control = StepControl(t_end=t_end, safety=safety, n_outputs=n_outputs)
    etas = np.asarray(etas, dtype=float)
    y0 = np.tile(np.asarray(state, dtype=np.complex128), (etas.size, 1))
    out, _ = integrate_modes(ZERO, np.zeros(etas.size), etas, y0,
                             np.zeros(etas.size, dtype=np.complex128), control, params)
    per_eta = {}
    for j, eta in enumerate(etas):
        zs = ZeroModeState(float(eta), *y0[j])
        exact = alpha0_closed_form(control.output_times, zs, params)
        err = np.abs(out[:, j, 1] - exact) / max(1.0, float(np.max(np.abs(exact))))
        per_eta[float(eta)] = float(np.max(err))
    return dict(max_error=max(per_eta.values()), per_eta=per_eta)


def sample_modes(traj: Trajectory, n: int, seed: int = 0, t_min: float = 0.0):
    """Random (output index, k, eta index) triples over the half lattice."""
    rng = np.random.default_rng(seed)
    times = np.flatnonzero(traj.times >= t_min)
    if times.size == 0:
        raise DomainError("no output times to sample")
    K, n_eta = traj.grid.K, traj.grid.n_eta
    return [(int(rng.choice(times)), int(rng.integers(1, K + 1)), int(rng.integers(n_eta)))
            for _ in range(n)]


ENERGY_SAMPLE_FIELDS = ("t", "k", "eta", "E", "coercive_form", "ratio", "balance_residual")


def energy_samples(traj: Trajectory, n_samples=100, fd_dt=1e-4, seed=0, printed=False) -> list:
    """Energy, coercivity ratio and balance residual at random (mode, output time) samples.

    Rows follow :data:`ENERGY_SAMPLE_FIELDS`; ``ratio`` is NaN for a mode with
    no content.
    """
    if traj.kind != REDUCED:
        raise DomainError("energy check needs a reduced-layout trajectory")
    p = traj.params
    forcing = traj.forcing_half()
    rows = []
    for i, k, j in sample_modes(traj, n_samples, seed):
        t, eta = float(traj.times[i]), float(traj.grid.etas[j])
        Phi, A = traj.states[i, k - 1, j, 0], traj.states[i, k - 1, j, 1]
        rec = energy_functional(weighted_pair(Phi, A, t, k, eta, p.s, p.M, p.nu), t, k, eta,
                                p.M, p.nu)
        ratio = coercivity_ratio(rec) if rec.coercive_form > 0 else float("nan")
        seg = balance_segment(Phi, A, t, k, eta, p, forcing=forcing[k - 1, j], fd_dt=fd_dt)
        rows.append(dict(t=t, k=k, eta=eta, E=rec.E, coercive_form=rec.coercive_form,
                         ratio=ratio, balance_residual=energy_balance_residual(seg, p, printed)))
    return rows


def summarize_energy(rows) -> dict:
    res = np.array([r["balance_residual"] for r in rows])
    ratios = np.array([r["ratio"] for r in rows])
    ratios = ratios[np.isfinite(ratios)]
    return dict(n_samples=len(rows), max_residual=float(res.max()),
                median_residual=float(np.median(res)),
                min_ratio=float(ratios.min()) if ratios.size else float("nan"),
                max_ratio=float(ratios.max()) if ratios.size else float("nan"))


def equivalence_ratios(traj: Trajectory) -> np.ndarray:
    """sqrt(sum of E) / lemma_Q at every output time (both over the full lattice)."""
    out = []
    for r in traj.records:
        out.append(np.sqrt(r.energy_sum) / r.lemma_Q if r.lemma_Q > 0 else np.nan)
    return np.asarray(out)
