import numpy as np
import pytest
from hypothesis import given, strategies as st

from couette_spectral.grid import (SpectralField, build_grid, hermitian_project, read_field_csv,
                                   sobolev_norm, write_field_csv)


def _pair_field(grid, value=1.0):
    f = SpectralField.zeros(grid)
    f["rho"][grid.index(1, 0.0)] = value
    f["rho"][grid.index(-1, 0.0)] = np.conj(value)
    return f


def test_smallest_grid():
    g = build_grid(1, 0.5, 0.5)
    assert g.shape == (3, 3)
    assert list(g.ks) == [-1, 0, 1]
    assert np.allclose(g.etas, [-0.5, 0.0, 0.5])


def test_default_grid_count():
    g = build_grid(8, 32, 0.25)
    assert g.shape == (17, 257)
    assert g.n_eta == 2 * 128 + 1


@pytest.mark.parametrize("args", [(0, 1.0, 0.5), (1, 1.0, 0.0), (1, 1.0, -0.5), (1, 0.2, 0.5)])
def test_invalid_grids(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_index_roundtrip():
    g = build_grid(3, 2.0, 0.25)
    k, eta = g.mesh()
    ik, j = g.index(-2, 1.25)
    assert k[ik, j] == -2 and eta[ik, j] == 1.25
    with pytest.raises(IndexError):
        g.index(4, 0.0)


def test_sobolev_norm_zero(small_grid):
    assert sobolev_norm(np.zeros(small_grid.shape), small_grid, 1.5) == 0.0


def test_sobolev_norm_single_pair():
    g = build_grid(2, 1.0, 0.25)
    f = _pair_field(g)
    assert sobolev_norm(f["rho"], g, 0.0) == pytest.approx(np.sqrt(0.5), rel=1e-15)
    assert sobolev_norm(f["rho"], g, 1.5) == pytest.approx(np.sqrt(2 * 0.25 * 2**1.5), rel=1e-15)
    assert sobolev_norm(f["rho"], g, 1.5) == pytest.approx(1.1892, abs=1e-4)


def test_hermitian_project_example():
    g = build_grid(1, 0.5, 0.5)
    f = SpectralField.zeros(g)
    f["alpha"][g.index(1, 0.0)] = 1j
    out = hermitian_project(f)
    assert out["alpha"][g.index(1, 0.0)] == 0.5j
    assert out["alpha"][g.index(-1, 0.0)] == -0.5j
    assert out.is_hermitian()


def test_hermitian_project_keeps_real_symmetric():
    g = build_grid(2, 1.0, 0.5)
    a = np.arange(np.prod(g.shape), dtype=float).reshape(g.shape)
    a = a + a[::-1, ::-1]
    assert np.array_equal(hermitian_project(a), a)


def _arrays(shape):
    vals = st.floats(-1e3, 1e3, allow_nan=False)
    return st.lists(st.tuples(vals, vals), min_size=shape[0] * shape[1],
                    max_size=shape[0] * shape[1]).map(
        lambda xs: np.array([complex(a, b) for a, b in xs]).reshape(shape))


@given(_arrays((5, 5)))
def test_hermitian_project_idempotent(a):
    once = hermitian_project(a)
    assert np.array_equal(hermitian_project(once), once)
    assert np.array_equal(once, np.conj(once[::-1, ::-1]))


@given(_arrays((5, 5)), st.floats(0, 3), st.floats(0, 3))
def test_sobolev_norm_monotone_in_s(a, s1, s2):
    g = build_grid(2, 1.0, 0.5)
    lo, hi = sorted((s1, s2))
    assert sobolev_norm(a, g, lo) <= sobolev_norm(a, g, hi) * (1 + 1e-14)


@given(_arrays((5, 5)))
def test_plancherel(a):
    g = build_grid(2, 1.0, 0.5)
    direct = 0.5 * sum(abs(z) ** 2 for z in a.ravel())
    assert sobolev_norm(a, g, 0.0) ** 2 == pytest.approx(direct, rel=1e-13, abs=1e-300)


def test_csv_roundtrip(tmp_path, rng):
    g = build_grid(2, 1.0, 0.5)
    c = rng.normal(size=(4,) + g.shape) + 1j * rng.normal(size=(4,) + g.shape)
    f = SpectralField(g, c)
    paths = write_field_csv(f, tmp_path)
    assert [p.name for p in paths] == ["rho.csv", "alpha.csv", "omega.csv", "theta.csv"]
    assert paths[0].read_text().splitlines()[0] == "k,eta,re,im"
    back = read_field_csv(g, tmp_path)
    assert np.array_equal(back.coefficients, f.coefficients)


def test_field_shape_checked(small_grid):
    with pytest.raises(ValueError):
        SpectralField(small_grid, np.zeros((4, 2, 2)))
