"""Admissible initial data: seeded band-limited Gaussian fields with zero x-mean.

Amplitudes are keyed by ``(seed, scalar, k, eta)`` through splitmix64, so a
mode receives the same draw on any lattice that contains it.  The key for
``eta`` is its IEEE-754 bit pattern.
"""

from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .grid import SCALARS, GridSpec, SpectralField, hermitian_project, sobolev_norm

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step; returns ``(next_state, output)``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def _mode_key(seed: int, scalar: int, k: int, eta: float) -> int:
    bits = struct.unpack("<Q", struct.pack("<d", float(eta) + 0.0))[0]  # +0.0 folds -0.0
    state = seed & MASK64
    for word in (scalar, k & MASK64, bits):
        state, out = splitmix64(state ^ word)
        state = out
    return state


def mode_gaussian(seed: int, scalar: int, k: int, eta: float) -> complex:
    """Standard complex Gaussian (E|z|^2 = 1) for one mode, via Box-Muller."""
    state = _mode_key(seed, scalar, k, eta)
    state, o1 = splitmix64(state)
    state, o2 = splitmix64(state)
    u1 = ((o1 >> 11) + 1) * 2.0**-53  # (0, 1]
    u2 = (o2 >> 11) * 2.0**-53
    r = math.sqrt(-math.log(u1))
    return complex(r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2))


@dataclass
class DataSpec:
    seed: int = 42
    k_band: tuple = (1, None)          # None: up to grid K
    eta_band: float | None = None      # None: whole eta range
    spectrum_decay: float = 3.0
    target_norm: float = 1.0
    norm_index: float = 1.5

    def resolved(self, grid: GridSpec) -> tuple[int, int, float]:
        k_min, k_max = self.k_band
        k_max = grid.K if k_max is None else int(k_max)
        eta_b = grid.N * grid.delta_eta if self.eta_band is None else float(self.eta_band)
        if k_min < 1 or k_max < k_min or k_max > grid.K:
            raise DomainError(f"k_band {self.k_band} empty or outside 1..{grid.K}")
        if eta_b < 0 or eta_b > grid.eta_max:
            raise DomainError(f"eta_band {self.eta_band} outside the grid")
        if not self.target_norm > 0:
            raise DomainError("target_norm must be positive")
        return int(k_min), k_max, eta_b

    def as_dict(self) -> dict:
        d = asdict(self)
        d["k_band"] = list(self.k_band)
        return d


def random_field(spec: DataSpec, grid: GridSpec) -> SpectralField:
    k_min, k_max, eta_b = spec.resolved(grid)
    out = SpectralField.zeros(grid)
    etas = grid.etas
    for si in range(len(SCALARS)):
        data = out.coefficients[si]
        for ik, k in enumerate(grid.ks):
            k = int(k)
            if not k_min <= abs(k) <= k_max:
                continue
            for j, eta in enumerate(etas):
                if abs(eta) > eta_b:
                    continue
                shape = (1.0 + k * k + eta * eta) ** (-0.5 * spec.spectrum_decay)
                data[ik, j] = shape * mode_gaussian(spec.seed, si, k, eta)
    out = hermitian_project(out)
    out.coefficients[:, grid.K, :] = 0.0
    return out


def apply_constraint(field_: SpectralField, gamma: float) -> SpectralField:
    """Set omega = -(rho + theta)/gamma mode-wise."""
    if not gamma > 1:
        raise DomainError("gamma must exceed 1")
    out = field_.copy()
    out["omega"] = -(out["rho"] + out["theta"]) / gamma
    return out


def max_norm(field_: SpectralField, s: float) -> float:
    return max(sobolev_norm(field_[name], field_.grid, s) for name in SCALARS)


def normalize(field_: SpectralField, s: float, target: float) -> SpectralField:
    """Common rescaling so that the largest of the four H^s norms equals ``target``."""
    current = max_norm(field_, s)
    if current == 0:
        raise DomainError("cannot normalize a zero field")
    return field_.scaled(target / current)


def build_initial(spec: DataSpec, grid: GridSpec, gamma: float, constraint: bool) -> SpectralField:
    f = random_field(spec, grid)
    if constraint:
        f = apply_constraint(f, gamma)
    return normalize(f, spec.norm_index, spec.target_norm)
