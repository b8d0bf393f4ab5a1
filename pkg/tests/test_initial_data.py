import numpy as np
import pytest

from couette_spectral.errors import DomainError
from couette_spectral.grid import SpectralField, build_grid, sobolev_norm
from couette_spectral.initial_data import (DataSpec, apply_constraint, build_initial, max_norm,
                                           mode_gaussian, normalize, random_field, splitmix64)


def test_splitmix64_reference_values():
    # published splitmix64 outputs for state 0
    state, out = splitmix64(0)
    assert out == 0xE220A8397B1DCDAF
    state, out = splitmix64(state)
    assert out == 0x6E789E6AA1B965F4


def test_mode_gaussian_deterministic_and_sign_of_zero():
    assert mode_gaussian(42, 1, 3, 0.25) == mode_gaussian(42, 1, 3, 0.25)
    assert mode_gaussian(42, 1, 3, 0.0) == mode_gaussian(42, 1, 3, -0.0)
    assert mode_gaussian(42, 1, 3, 0.25) != mode_gaussian(43, 1, 3, 0.25)


def test_mode_gaussian_statistics():
    z = np.array([mode_gaussian(7, 0, k, 0.25 * j) for k in range(1, 21) for j in range(200)])
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 0.1
    assert abs(np.mean(z)) < 0.1


def test_random_field_admissible():
    g = build_grid(4, 8.0, 0.5)
    f = random_field(DataSpec(seed=5), g)
    assert f.is_hermitian()
    assert np.all(f.coefficients[:, g.K, :] == 0)
    again = random_field(DataSpec(seed=5), g)
    assert np.array_equal(f.coefficients, again.coefficients)


def test_bands_respected():
    g = build_grid(4, 8.0, 0.5)
    f = random_field(DataSpec(seed=1, k_band=(2, 3), eta_band=2.0), g)
    k, eta = g.mesh()
    outside = (np.abs(k) < 2) | (np.abs(k) > 3) | (np.abs(eta) > 2.0)
    assert np.all(f.coefficients[:, outside] == 0)
    assert np.any(f.coefficients[:, ~outside] != 0)


@pytest.mark.parametrize("spec", [DataSpec(k_band=(0, 2)), DataSpec(k_band=(3, 2)),
                                  DataSpec(k_band=(1, 9)), DataSpec(eta_band=100.0),
                                  DataSpec(target_norm=0.0)])
def test_bad_specs(spec):
    with pytest.raises(DomainError):
        random_field(spec, build_grid(4, 8.0, 0.5))


def test_constraint_examples():
    g = build_grid(1, 0.5, 0.5)
    f = SpectralField.zeros(g)
    f["rho"][:] = 1.0
    f["theta"][:] = 1.0
    c = apply_constraint(f, 2.0)
    assert np.all(c["omega"] == -1.0)
    assert np.array_equal(apply_constraint(c, 2.0).coefficients, c.coefficients)
    r = random_field(DataSpec(seed=9), build_grid(3, 4.0, 0.5))
    rc = apply_constraint(r, 1.4)
    assert np.max(np.abs(rc["rho"] + 1.4 * rc["omega"] + rc["theta"])) <= 1e-15
    assert np.array_equal(rc["alpha"], r["alpha"])
    with pytest.raises(DomainError):
        apply_constraint(r, 1.0)


def test_normalize_examples():
    g = build_grid(3, 4.0, 0.5)
    f = random_field(DataSpec(seed=2), g)
    n = normalize(f, 1.5, 2.0)
    assert max_norm(n, 1.5) == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(normalize(n, 1.5, 2.0).coefficients, n.coefficients, rtol=1e-14, atol=0)
    assert np.allclose(normalize(f.scaled(5.0), 1.5, 2.0).coefficients, n.coefficients,
                       rtol=1e-14, atol=0)
    with pytest.raises(DomainError):
        normalize(SpectralField.zeros(g), 1.5, 1.0)


def test_constraint_commutes_with_normalize():
    g = build_grid(3, 4.0, 0.5)
    f = random_field(DataSpec(seed=4), g)
    a = normalize(apply_constraint(f, 1.4), 1.5, 1.0)
    b = apply_constraint(normalize(f, 1.5, 1.0), 1.4)
    scale = a["rho"][g.index(1, 0.5)] / b["rho"][g.index(1, 0.5)]
    assert np.allclose(a.coefficients, scale * b.coefficients, rtol=1e-13, atol=1e-17)


def test_build_initial():
    g = build_grid(3, 4.0, 0.5)
    f = build_initial(DataSpec(seed=3, target_norm=0.5), g, 1.4, constraint=True)
    assert max(sobolev_norm(f[n], g, 1.5) for n in ("rho", "alpha", "omega", "theta")) == \
        pytest.approx(0.5, rel=1e-12)
    assert f.is_hermitian()
