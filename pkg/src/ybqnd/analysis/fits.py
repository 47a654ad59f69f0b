"""Weighted least-squares decay fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import curve_fit


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class DecayFit:
    tau: float
    tau_err: float
    amplitude: float
    offset: float


def _exp(t, a, tau, c):
    return a * np.exp(-t / tau) + c


def _gauss(t, a, tau, c):
    return a * np.exp(-((t / tau) ** 2)) + c


def lifetime_fits(series: Sequence[tuple[float, float, float]],
                  kind: Literal["exponential", "gaussian_contrast"] = "exponential",
                  offset: float | None = 0.0) -> DecayFit:
    """Fit ``A exp(-t/tau) + c`` or ``A exp(-(t/tau)^2) + c`` and return the 1/e time.

    ``series`` holds ``(time, value, err)`` triples; ``err <= 0`` means unit
    weight. ``offset=None`` frees the constant, otherwise it is held fixed.
    """
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 4 or arr.shape[1] != 3:
        raise ValueError("need at least 4 (time, value, err) points")
    t, y, e = arr.T
    sigma = np.where(e > 0, e, 1.0)
    f = {"exponential": _exp, "gaussian_contrast": _gauss}.get(kind)
    if f is None:
        raise ValueError(f"unknown fit kind {kind!r}")
    span = float(t.max() - t.min()) or 1.0
    c0 = 0.0 if offset is None else offset
    y0 = y[np.argmin(t)]
    # initial tau from where the signal crosses 1/e of its range
    target = c0 + (y0 - c0) / math.e
    below = np.flatnonzero((y - target) * (y0 - c0) <= 0)
    tau0 = float(t[below[0]]) if below.size and t[below[0]] > 0 else span
    try:
        if offset is None:
            p, cov = curve_fit(f, t, y, p0=[y0 - c0, tau0, c0], sigma=sigma, absolute_sigma=bool((e > 0).all()),
                               maxfev=20000)
            a, tau, c = p
            err = math.sqrt(cov[1, 1]) if np.isfinite(cov[1, 1]) else float("nan")
        else:
            g = lambda tt, a, tau: f(tt, a, tau, offset)  # noqa: E731
            p, cov = curve_fit(g, t, y, p0=[y0 - c0, tau0], sigma=sigma, absolute_sigma=bool((e > 0).all()),
                               maxfev=20000)
            (a, tau), c = p, offset
            err = math.sqrt(cov[1, 1]) if np.isfinite(cov[1, 1]) else float("nan")
    except RuntimeError as exc:
        raise FitError(f"{kind} fit did not converge: {exc}") from exc
    return DecayFit(abs(float(tau)), float(err), float(a), float(c))


def t1_fit(times: Sequence[float], p_same: Sequence[float], err: Sequence[float] | None = None) -> DecayFit:
    """Exponential relaxation of ``P_same`` towards 1/2."""
    e = np.zeros(len(times)) if err is None else np.asarray(err)
    return lifetime_fits(list(zip(times, p_same, e)), "exponential", offset=0.5)


def fringe_contrast(phases: np.ndarray, signal: np.ndarray) -> float:
    """Peak-to-peak amplitude of ``a + b cos(phase) + c sin(phase)`` by linear least squares."""
    ph = np.asarray(phases, dtype=float)
    X = np.column_stack([np.ones_like(ph), np.cos(ph), np.sin(ph)])
    coef, *_ = np.linalg.lstsq(X, np.asarray(signal, dtype=float), rcond=None)
    return float(2 * math.hypot(coef[1], coef[2]))
