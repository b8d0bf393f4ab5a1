"""Power-law and exponential rate extraction from diagnostic time series."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

MIN_POINTS = 5
REL_FLOOR = 1e-14


@dataclass
class FitResult:
    exponent_or_rate: float
    intercept: float
    rms_residual: float
    window: tuple
    n_points: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def bracket(t):
    return np.sqrt(1.0 + np.asarray(t, dtype=float) ** 2)


def _select(t, v, window):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape:
        raise DomainError("times and values differ in length")
    lo, hi = window
    if not hi > lo:
        raise DomainError(f"degenerate window {window}")
    inside = (t >= lo) & (t <= hi)
    tw, vw = t[inside], v[inside]
    if np.any(vw < 0) or not np.all(np.isfinite(vw)):
        raise DomainError("series has negative or non-finite values in the window")
    # drop numerical zeros before taking logs
    keep = vw > REL_FLOOR * (np.max(v) if v.size else 0.0)
    tw, vw = tw[keep], vw[keep]
    if tw.size < MIN_POINTS:
        raise DomainError(f"window {window} holds {tw.size} usable points (< {MIN_POINTS})")
    return tw, vw


def _line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def power_law_slope(t, v, window) -> FitResult:
    """Least-squares slope of log v against log <t>."""
    tw, vw = _select(t, v, window)
    slope, icpt, rms = _line(np.log(bracket(tw)), np.log(vw))
    return FitResult(slope, icpt, rms, (float(window[0]), float(window[1])), int(tw.size))


def exp_rate(t, v, window, detrend_power: float = 0.0) -> FitResult:
    """Decay rate: minus the slope of log v - detrend_power log <t> against t."""
    tw, vw = _select(t, v, window)
    slope, icpt, rms = _line(tw, np.log(vw) - detrend_power * np.log(bracket(tw)))
    return FitResult(-slope, icpt, rms, (float(window[0]), float(window[1])), int(tw.size))


def bound_saturation(t, v, compensating_exponent: float, window_head, window_tail) -> float:
    """max of v <t>^-c over the tail window divided by its max over the head window."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    S = v * bracket(t) ** (-compensating_exponent)
    out = []
    for lo, hi in (window_head, window_tail):
        if not hi > lo:
            raise DomainError(f"degenerate window {(lo, hi)}")
        sel = S[(t >= lo) & (t <= hi)]
        if sel.size == 0:
            raise DomainError(f"no samples in window {(lo, hi)}")
        if np.any(sel < 0):
            raise DomainError("negative values in series")
        out.append(np.max(sel))
    head, tail = out
    if head == 0:
        raise DomainError("series vanishes on the head window")
    return float(tail / head)
