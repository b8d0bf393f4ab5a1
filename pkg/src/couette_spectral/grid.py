"""Truncated frequency lattice for T x R and spectral field storage.

The continuous frequency ``eta`` is replaced by the lattice ``delta_eta * Z``
cut at ``eta_max``; ``k`` runs over ``-K..K``.  Arrays are indexed as
``[k + K, j + N]`` where ``eta = j * delta_eta`` and ``N = floor(eta_max /
delta_eta)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCALARS = ("rho", "alpha", "omega", "theta")


@dataclass(frozen=True)
class GridSpec:
    K: int
    eta_max: float
    delta_eta: float

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if not self.delta_eta > 0:
            raise ValueError(f"delta_eta must be positive, got {self.delta_eta!r}")
        if not self.eta_max >= self.delta_eta:
            raise ValueError(
                f"eta_max ({self.eta_max!r}) must be >= delta_eta ({self.delta_eta!r})"
            )

    @property
    def N(self) -> int:
        # small tolerance so that eta_max = N * delta_eta is not lost to rounding
        return int(math.floor(self.eta_max / self.delta_eta + 1e-9))

    @property
    def n_k(self) -> int:
        return 2 * self.K + 1

    @property
    def n_eta(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_k, self.n_eta)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1, dtype=np.int64)

    @property
    def etas(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1, dtype=np.float64) * self.delta_eta

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(k, eta)`` arrays of shape :attr:`shape` (float64)."""
        k, eta = np.meshgrid(self.ks.astype(np.float64), self.etas, indexing="ij")
        return k, eta

    def index(self, k: int, eta: float) -> tuple[int, int]:
        j = int(round(eta / self.delta_eta))
        if abs(k) > self.K or abs(j) > self.N:
            raise IndexError(f"mode ({k}, {eta}) outside the lattice")
        return k + self.K, j + self.N


def build_grid(K: int, eta_max: float, delta_eta: float) -> GridSpec:
    return GridSpec(K=K, eta_max=float(eta_max), delta_eta=float(delta_eta))


@dataclass
class SpectralField:
    """Complex amplitudes of the four scalars on a lattice.

    ``coefficients`` has shape ``(4, 2K+1, 2N+1)`` in the order of
    :data:`SCALARS`; in the moving frame the same slots hold R, A, Omega,
    Theta.
    """

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.shape != (len(SCALARS),) + self.grid.shape:
            raise ValueError(
                f"coefficients must have shape {(len(SCALARS),) + self.grid.shape}, got {c.shape}"
            )
        self.coefficients = c

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros((len(SCALARS),) + grid.shape, dtype=np.complex128))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.coefficients[SCALARS.index(name)]

    def __setitem__(self, name: str, value) -> None:
        self.coefficients[SCALARS.index(name)] = value

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients.copy())

    def scaled(self, factor: float) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * factor)

    def is_hermitian(self) -> bool:
        c = self.coefficients
        return bool(np.array_equal(c, np.conj(c[:, ::-1, ::-1])))

    def zero_mode_max(self) -> float:
        return float(np.max(np.abs(self.coefficients[:, self.grid.K, :])))


def sobolev_norm(coeffs: np.ndarray, grid: GridSpec, s: float) -> float:
    """H^s norm of one scalar on the lattice (rectangle rule in eta)."""
    coeffs = np.asarray(coeffs)
    k, eta = grid.mesh()
    weight = (1.0 + k * k + eta * eta) ** s
    # C-order sum over (k ascending, eta ascending): fixed for a given grid
    total = np.sum(weight * (coeffs.real**2 + coeffs.imag**2))
    return float(np.sqrt(grid.delta_eta * total))


def hermitian_project(f):
    """Average each coefficient with the conjugate of its mirror ``(-k, -eta)``.

    Accepts a :class:`SpectralField` or a bare array whose last two axes are
    the lattice.
    """
    if isinstance(f, SpectralField):
        return SpectralField(f.grid, hermitian_project(f.coefficients))
    a = np.asarray(f, dtype=np.complex128)
    return 0.5 * (a + np.conj(a[..., ::-1, ::-1]))


def write_field_csv(field_: SpectralField, directory: str | Path, prefix: str = "") -> list[Path]:
    """Write one ``k,eta,re,im`` CSV per scalar; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid = field_.grid
    paths = []
    for name in SCALARS:
        path = directory / f"{prefix}{name}.csv"
        data = field_[name]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "eta", "re", "im"])
            for ik, k in enumerate(grid.ks):
                for j, eta in enumerate(grid.etas):
                    z = data[ik, j]
                    w.writerow([int(k), f"{eta:.17g}", f"{z.real:.17g}", f"{z.imag:.17g}"])
        paths.append(path)
    return paths


def read_field_csv(grid: GridSpec, directory: str | Path, prefix: str = "") -> SpectralField:
    directory = Path(directory)
    out = SpectralField.zeros(grid)
    for name in SCALARS:
        with open(directory / f"{prefix}{name}.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["k", "eta", "re", "im"]:
                raise ValueError(f"{name}.csv: unexpected header {reader.fieldnames}")
            for row in reader:
                ik, j = grid.index(int(row["k"]), float(row["eta"]))
                out[name][ik, j] = complex(float(row["re"]), float(row["im"]))
    return out
