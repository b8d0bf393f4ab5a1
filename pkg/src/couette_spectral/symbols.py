"""Fourier symbols of the sheared Laplacian and the ghost multiplier.

All functions broadcast over numpy arrays.  ``k`` must be nonzero
everywhere; the zero mode never carries p-weighted quantities.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def _check_k(k):
    if np.any(np.asarray(k) == 0):
        raise DomainError("k = 0 is outside the domain of the sheared symbols")


def p_symbol(t, k, eta):
    """k^2 + (eta - k t)^2, the symbol of -Delta_L."""
    _check_k(k)
    return np.asarray(k, dtype=float) ** 2 + (eta - np.multiply(k, t)) ** 2


def dt_p_symbol(t, k, eta):
    _check_k(k)
    return -2.0 * np.multiply(k, eta - np.multiply(k, t))


def _ghost_exponent(t, k, eta, nu):
    c = np.cbrt(nu)
    crit = np.divide(eta, k)
    return np.arctan(c * (t - crit)) + np.arctan(c * crit)


def ghost_multiplier(t, k, eta, nu):
    """Closed-form solution of d(log m)/dt = -nu^(1/3) / (1 + nu^(2/3) (t - eta/k)^2), m(0) = 1."""
    _check_k(k)
    return np.exp(-_ghost_exponent(t, k, eta, nu))


def ghost_log_rate(t, k, eta, nu):
    """(dm/dt)/m; always negative."""
    _check_k(k)
    c = np.cbrt(nu)
    return -c / ((c * (t - np.divide(eta, k))) ** 2 + 1.0)


def crucial_property_margin(t, k, eta, nu):
    """nu^(-1/6) (sqrt(-m'/m) + nu^(1/2) |k, eta - k t|).

    Bounded below by a universal constant; equals 1 + |k| nu^(1/3) at the
    critical time.
    """
    rate = -ghost_log_rate(t, k, eta, nu)
    p = p_symbol(t, k, eta)
    return nu ** (-1.0 / 6.0) * (np.sqrt(rate) + np.sqrt(nu) * np.sqrt(p))


def bracket_inequality_margin(t, k, eta):
    """p <k,eta>^2 / <t>^2; at least 1/4 for |k| >= 1."""
    p = p_symbol(t, k, eta)
    return p * (1.0 + np.asarray(k, dtype=float) ** 2 + np.asarray(eta) ** 2) / (1.0 + np.asarray(t) ** 2)


def gronwall_factor(t, k, eta):
    """Integral of k^2/p over [0, t] = arctan(eta/k) - arctan(eta/k - t)."""
    _check_k(k)
    crit = np.divide(eta, k)
    return np.arctan(crit) - np.arctan(crit - t)


def japanese_bracket(*xs):
    return np.sqrt(1.0 + sum(np.asarray(x, dtype=float) ** 2 for x in xs))


# Audit ---------------------------------------------------------------------

AUDIT_INEQUALITIES = (
    "dtp_bound",
    "k_p32_bound",
    "k_p1_bound",
    "bracket",
    "crucial_property",
)


def default_audit_grid(t_max=1e3, n_t=2001, K=8, eta_max=32.0, delta_eta=0.25):
    """Sampling grid for the symbol audit.

    Times are a uniform grid on ``[0, t_max]`` merged with every critical
    time ``eta/k`` of the lattice, where the ghost multiplier does its work.
    """
    ks = np.arange(1, K + 1)
    n = int(np.floor(eta_max / delta_eta + 1e-9))
    etas = np.arange(-n, n + 1) * delta_eta
    crit = (etas[None, :] / ks[:, None]).ravel()
    ts = np.union1d(np.linspace(0.0, t_max, n_t), crit[(crit >= 0) & (crit <= t_max)])
    return ts, ks, etas


def audit_symbols(ts, ks, etas, nus=(1e-2, 1e-3)):
    """Grid minima of the margins of the symbol inequalities.

    Returns a list of dicts ``inequality, min_margin, argmin_t, argmin_k,
    argmin_eta``.  For ``dtp_bound`` and the ``k_p*`` bounds the inequality
    holds iff the margin is nonnegative; for ``bracket`` and
    ``crucial_property`` the minimum is the empirical lower constant
    (the latter minimised over ``nus`` as well).
    """
    ts = np.asarray(ts, dtype=float)
    etas = np.asarray(etas, dtype=float)
    T, E = np.meshgrid(ts, etas, indexing="ij")
    best = {}

    def update(name, m, k):
        i = np.unravel_index(np.argmin(m), m.shape)
        if name not in best or m[i] < best[name]["min_margin"]:
            best[name] = dict(inequality=name, min_margin=float(m[i]), argmin_t=float(T[i]),
                              argmin_k=int(k), argmin_eta=float(E[i]))

    for k in ks:
        k = int(k)
        p = p_symbol(T, k, E)
        sp = np.sqrt(p)
        update("dtp_bound", 2.0 * abs(k) * sp - np.abs(dt_p_symbol(T, k, E)), k)
        update("k_p32_bound", 1.0 - abs(k) * p**-1.5, k)
        update("k_p1_bound", 1.0 - abs(k) / p, k)
        update("bracket", bracket_inequality_margin(T, k, E), k)
        for nu in nus:
            update("crucial_property", crucial_property_margin(T, k, E, nu), k)
    return [best[name] for name in AUDIT_INEQUALITIES]
