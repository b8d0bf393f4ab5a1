import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from couette_spectral.dynamics import FlowParams
from couette_spectral.errors import DomainError, IntegrationError
from couette_spectral.grid import SpectralField, build_grid
from couette_spectral.initial_data import DataSpec, random_field
from couette_spectral.integrator import (FULL, REDUCED, StepControl, _factor, advance_mode,
                                         evolve, integrate_modes, resolve_threads, viscous_phase)
from couette_spectral.symbols import p_symbol


def test_viscous_phase_examples():
    assert viscous_phase(1.5, 1.5, 2, 0.3, 0.1) == 0.0
    assert viscous_phase(0.0, 1.0, 1, 0.0, 0.3) == pytest.approx(0.4, rel=1e-15)
    assert viscous_phase(0.0, 2.0, 1, 1.0, 1.0) == pytest.approx(2 + 2 / 3, rel=1e-15)
    with pytest.raises(DomainError):
        viscous_phase(0.0, 1.0, 0, 1.0, 0.1)
    with pytest.raises(DomainError):
        viscous_phase(1.0, 0.0, 1, 1.0, 0.1)


def test_viscous_phase_matches_quadrature(rng):
    for _ in range(100):
        k = int(rng.integers(1, 9)) * int(rng.choice([-1, 1]))
        eta, t0 = rng.uniform(-32, 32), rng.uniform(0, 100)
        t1 = t0 + rng.uniform(0, 5)
        nu = 10 ** rng.uniform(-3, -1)
        ref = nu * quad(lambda s: p_symbol(s, k, eta), t0, t1, epsabs=0, epsrel=1e-13)[0]
        assert viscous_phase(t0, t1, k, eta, nu) == pytest.approx(ref, rel=1e-12)


def test_integrating_factor_is_exact(rng):
    """Pure-decay subsystem A' = (-nu p + p'/p) A solved by the factor to 1e-12."""
    for _ in range(50):
        k = float(rng.integers(1, 9))
        eta, t0 = rng.uniform(-32, 32), rng.uniform(0, 50)
        h = rng.uniform(0, 0.5)
        nu = 10 ** rng.uniform(-3, -1)
        integral = quad(lambda s: p_symbol(s, k, eta), t0, t0 + h, epsabs=0, epsrel=1e-13)[0]
        exact = p_symbol(t0 + h, k, eta) / p_symbol(t0, k, eta) * math.exp(-nu * integral)
        assert _factor(REDUCED, t0, h, k, eta, nu) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("kind", [FULL, REDUCED])
def test_zero_state_stays_zero(kind, params):
    y = advance_mode(kind, np.zeros(4), 0.0, 3.0, 2, 1.5, params)
    assert np.all(y == 0)


def test_richardson_order_four(params):
    y0 = np.array([0.3 + 0.2j, -0.5j, 0.0, 0.0])
    kw = dict(k=2, eta=3.0, params=params, forcing=0.4 - 0.1j)
    ys = [advance_mode(REDUCED, y0, 0.0, 2.0, n_sub=n, **kw) for n in (40, 80, 160)]
    ratio = np.linalg.norm(ys[0][:2] - ys[1][:2]) / np.linalg.norm(ys[1][:2] - ys[2][:2])
    assert 14 <= ratio <= 18


def test_richardson_full_system(params):
    y0 = np.array([0.3, -0.5j, 0.2, 0.1j])
    ys = [advance_mode(FULL, y0, 0.0, 2.0, 1, -2.0, params, n_sub=n) for n in (40, 80, 160)]
    ratio = np.linalg.norm(ys[0] - ys[1]) / np.linalg.norm(ys[1] - ys[2])
    assert 14 <= ratio <= 18


def test_frozen_coefficients_match_matrix_exponential():
    params = FlowParams(gamma=1.4, nu=0.01, M=0.8)
    k, eta, h = 1, 2.0, 1e-4
    t0 = eta / k - h / 2
    p = float(k * k)
    y0 = np.array([0.7 - 0.2j, 0.3 + 0.5j, 0, 0])
    out = advance_mode(REDUCED, y0, t0, t0 + h, k, eta, params, n_sub=1)
    L = np.array([[0.0, -1.0], [p / params.M**2 + 2 * k * k / p, -params.nu * p]])
    ref = expm(L * h) @ y0[:2]
    assert np.max(np.abs(out[:2] - ref)) <= 1e-10


def test_step_control_defaults_and_validation():
    c = StepControl(t_end=0.0)
    assert list(c.output_times) == [0.0]
    c = StepControl(t_end=10.0)
    assert c.output_times[0] == 0.0 and c.output_times[-1] == 10.0 and len(c.output_times) == 201
    for bad in [dict(t_end=-1.0), dict(t_end=1.0, safety=0.0), dict(t_end=1.0, safety=1.5),
                dict(t_end=1.0, output_times=[0.5, 1.0]), dict(t_end=1.0, output_times=[0, 2.0]),
                dict(t_end=1.0, output_times=[0, 0.5, 0.5])]:
        with pytest.raises(DomainError):
            StepControl(**bad)


def test_output_times_hit_exactly(params):
    ctl = StepControl(t_end=1.0, output_times=np.array([0.0, 0.1234567, 0.5, 1.0]), safety=0.002)
    y0 = np.array([[0.3, 0.1, 0, 0]], dtype=complex)
    out, steps = integrate_modes(REDUCED, np.array([3.0]), np.array([1.0]), y0, np.zeros(1, complex),
                                 ctl, params)
    ref = advance_mode(REDUCED, y0[0], 0.0, 0.1234567, 3, 1.0, params, n_sub=4000)
    assert np.allclose(out[1, 0], ref, rtol=1e-9, atol=1e-12)
    assert steps[0] > 0


def test_integration_failure_names_mode(params):
    y0 = np.array([[0.1, 0, 0, 0], [np.nan, 0, 0, 0]], dtype=complex)
    with pytest.raises(IntegrationError) as exc:
        integrate_modes(REDUCED, np.array([1.0, 2.0]), np.array([0.5, -1.5]), y0,
                        np.zeros(2, complex), StepControl(t_end=1.0), params)
    assert exc.value.k == 2.0 and exc.value.eta == -1.5 and exc.value.t > 0
    assert "k=2" in str(exc.value)


def _field(grid, seed=3):
    return random_field(DataSpec(seed=seed), grid)


def test_t_end_zero_single_record(params):
    g = build_grid(2, 2.0, 0.5)
    traj = evolve(_field(g), StepControl(t_end=0.0), params)
    assert len(traj.records) == 1 and traj.records[0].t == 0.0
    assert np.allclose(traj.snapshot(0).coefficients, _field(g).coefficients, rtol=1e-14, atol=1e-16)


def test_thread_count_does_not_change_output(params):
    g = build_grid(3, 4.0, 0.5)
    ctl = StepControl(t_end=5.0, n_outputs=11)
    a = evolve(_field(g), ctl, params, threads=1)
    b = evolve(_field(g), ctl, params, threads=4)
    assert np.array_equal(a.states, b.states)
    assert [r.as_dict() for r in a.records] == [r.as_dict() for r in b.records]


def test_refining_eta_keeps_shared_modes_bitwise(params):
    coarse, fine = build_grid(2, 2.0, 0.5), build_grid(2, 2.0, 0.25)
    ctl = StepControl(t_end=5.0, n_outputs=6)
    a = evolve(_field(coarse), ctl, params, diagnostics=False)
    b = evolve(_field(fine), ctl, params, diagnostics=False)
    assert np.array_equal(a.states, b.states[:, :, ::2, :])


def test_full_and_reduced_evolve_agree(params):
    g = build_grid(2, 3.0, 0.5)
    ctl = StepControl(t_end=10.0, n_outputs=11)
    f = _field(g)
    a = evolve(f, ctl, params, kind=FULL)
    b = evolve(f, ctl, params, kind=REDUCED)
    for ra, rb in zip(a.records, b.records):
        assert ra.norm_Pvx == pytest.approx(rb.norm_Pvx, rel=1e-8)
        assert ra.norm_Qv == pytest.approx(rb.norm_Qv, rel=1e-8)
        assert ra.norm_rho == pytest.approx(rb.norm_rho, rel=1e-8)


def test_evolve_rejects_non_hermitian(params):
    g = build_grid(1, 1.0, 0.5)
    f = SpectralField.zeros(g)
    f["rho"][g.index(1, 0.5)] = 1.0
    with pytest.raises(DomainError):
        evolve(f, StepControl(t_end=1.0), params)


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("COUETTE_THREADS", raising=False)
    assert resolve_threads(None) == 1
    assert resolve_threads(3) == 3
    assert resolve_threads("auto") >= 1
    monkeypatch.setenv("COUETTE_THREADS", "2")
    assert resolve_threads(1) == 2
    monkeypatch.delenv("COUETTE_THREADS")
    with pytest.raises(DomainError):
        resolve_threads(0)
