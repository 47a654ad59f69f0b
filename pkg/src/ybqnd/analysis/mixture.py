"""Two-Gaussian count mixture: EM fit, binned cross-check, and threshold choice."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.signal import find_peaks
from scipy.special import ndtr
from scipy.stats import norm


class MixtureFitError(RuntimeError):
    """EM did not converge."""


@dataclass(frozen=True)
class MixtureFit:
    """Weights and Gaussian parameters (photons) of the dark and bright components.

    ``fit_residual`` is the mean negative log-likelihood per sample.
    ``degenerate`` marks data that show a single mode.
    """

    P0: float
    P1: float
    mu0: float
    sigma0: float
    mu1: float
    sigma1: float
    fit_residual: float = float("nan")
    degenerate: bool = False
    iterations: int = 0

    def __post_init__(self) -> None:
        if abs(self.P0 + self.P1 - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ValueError("component widths must be positive")
        if not self.degenerate and self.mu1 <= self.mu0:
            raise ValueError("bright mean must exceed dark mean")

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return self.P0 * norm.pdf(x, self.mu0, self.sigma0) + self.P1 * norm.pdf(x, self.mu1, self.sigma1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        bright = rng.random(n) < self.P1
        return np.where(bright, rng.normal(self.mu1, self.sigma1, n), rng.normal(self.mu0, self.sigma0, n))


@dataclass(frozen=True)
class ThresholdReport:
    theta: float
    F: float
    F0: float
    F1: float


def _initial_modes(x: np.ndarray) -> tuple[float, float] | None:
    """Locations of the two highest well-separated histogram modes, or None."""
    n = x.size
    bins = max(20, min(200, int(2 * n ** (1 / 3))))
    hist, edges = np.histogram(x, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    kernel = np.array([1, 2, 3, 2, 1], dtype=float)
    smooth = np.convolve(hist, kernel / kernel.sum(), mode="same")
    padded = np.concatenate(([0.0], smooth, [0.0]))
    # a mode counts when it rises above the valley to the next taller mode by 10% of its height
    peaks, props = find_peaks(padded, prominence=0.1 * smooth.max() if smooth.max() > 0 else 1.0)
    if len(peaks) < 2:
        return None
    order = np.argsort(props["prominences"])[::-1][:2]
    locs = np.sort(centers[peaks[order] - 1])
    return float(locs[0]), float(locs[1])


def fit_mixture(counts: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> MixtureFit:
    """Unbinned EM fit of a two-component Gaussian mixture.

    Starts from the two dominant histogram modes; stops when the total
    log-likelihood changes by less than ``tol``.
    """
    x = np.asarray(counts, dtype=float)
    if x.size < 100:
        raise ValueError("at least 100 samples are required")
    modes = _initial_modes(x)
    if modes is None:
        mu, sd = float(x.mean()), float(x.std()) or 1.0
        return MixtureFit(0.5, 0.5, mu, sd, mu, sd, degenerate=True)
    m0, m1 = modes
    cut = 0.5 * (m0 + m1)
    lo, hi = x[x < cut], x[x >= cut]
    w1 = hi.size / x.size
    s0 = float(lo.std()) if lo.size > 1 else 1.0
    s1 = float(hi.std()) if hi.size > 1 else 1.0
    params = np.array([1 - w1, w1, m0, max(s0, 1e-3), m1, max(s1, 1e-3)])
    floor = 1e-6 * (x.max() - x.min() + 1.0)
    ll_old = -np.inf
    for it in range(1, max_iter + 1):
        p0, p1, a0, b0, a1, b1 = params
        l0 = math.log(p0) + norm.logpdf(x, a0, b0)
        l1 = math.log(p1) + norm.logpdf(x, a1, b1)
        lse = np.logaddexp(l0, l1)
        ll = float(lse.sum())
        r1 = np.exp(l1 - lse)
        r0 = 1.0 - r1
        n0, n1 = r0.sum(), r1.sum()
        if n0 < 1e-9 or n1 < 1e-9:
            mu, sd = float(x.mean()), float(x.std()) or 1.0
            return MixtureFit(0.5, 0.5, mu, sd, mu, sd, degenerate=True, iterations=it)
        a0 = float((r0 @ x) / n0)
        a1 = float((r1 @ x) / n1)
        b0 = max(math.sqrt(float(r0 @ (x - a0) ** 2) / n0), floor)
        b1 = max(math.sqrt(float(r1 @ (x - a1) ** 2) / n1), floor)
        params = np.array([n0 / x.size, n1 / x.size, a0, b0, a1, b1])
        if abs(ll - ll_old) < tol:
            break
        ll_old = ll
    else:
        raise MixtureFitError(f"EM did not converge in {max_iter} iterations")
    p0, p1, a0, b0, a1, b1 = params
    if a1 < a0:
        p0, p1, a0, b0, a1, b1 = p1, p0, a1, b1, a0, b0
    degenerate = (a1 - a0) < 0.5 * (b0 + b1) * 0.5 or min(p0, p1) < 1e-3
    p1 = 1.0 - p0
    return MixtureFit(p0, p1, a0, b0, a1, b1, fit_residual=-ll / x.size, degenerate=bool(degenerate),
                      iterations=it)


def fit_mixture_binned(counts: np.ndarray, bins: int = 80, start: MixtureFit | None = None) -> tuple[MixtureFit, np.ndarray]:
    """Least-squares fit of the mixture density to a histogram.

    Returns the fit and the 1-sigma parameter errors in the order
    ``(P1, mu0, sigma0, mu1, sigma1)``.
    """
    x = np.asarray(counts, dtype=float)
    hist, edges = np.histogram(x, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    err = np.sqrt(np.maximum(hist, 1.0))
    s = start or fit_mixture(x)
    p0 = np.array([s.P1, s.mu0, s.sigma0, s.mu1, s.sigma1])

    def resid(p: np.ndarray) -> np.ndarray:
        p1, a0, b0, a1, b1 = p
        model = x.size * width * ((1 - p1) * norm.pdf(centers, a0, b0) + p1 * norm.pdf(centers, a1, b1))
        return (model - hist) / err

    res = least_squares(resid, p0, bounds=([0, -np.inf, 1e-6, -np.inf, 1e-6], [1, np.inf, np.inf, np.inf, np.inf]))
    jac = res.jac
    dof = max(len(hist) - len(p0), 1)
    chi2 = float(res.fun @ res.fun) / dof
    cov = np.linalg.pinv(jac.T @ jac) * max(chi2, 1.0)
    p1, a0, b0, a1, b1 = res.x
    return MixtureFit(1 - p1, p1, a0, b0, a1, b1, fit_residual=chi2), np.sqrt(np.diag(cov))


def fidelity_at(fit: MixtureFit, theta: float) -> ThresholdReport:
    """Component and total fidelities for threshold ``theta`` (bright iff ``x >= theta``)."""
    f0 = float(ndtr((theta - fit.mu0) / fit.sigma0))
    f1 = float(1.0 - ndtr((theta - fit.mu1) / fit.sigma1))
    return ThresholdReport(theta, fit.P0 * f0 + fit.P1 * f1, f0, f1)


def optimal_threshold(fit: MixtureFit) -> ThresholdReport:
    """Threshold where the weighted components cross between the two means."""
    def g(x: float) -> float:
        return (math.log(fit.P0) + norm.logpdf(x, fit.mu0, fit.sigma0)
                - math.log(fit.P1) - norm.logpdf(x, fit.mu1, fit.sigma1))

    a, b = fit.mu0, fit.mu1
    if fit.P0 > 0 and fit.P1 > 0 and g(a) > 0 > g(b):
        theta = brentq(g, a, b, xtol=1e-12)
    else:
        grid = np.linspace(a, b, 20001)
        f = fit.P0 * ndtr((grid - fit.mu0) / fit.sigma0) + fit.P1 * (1 - ndtr((grid - fit.mu1) / fit.sigma1))
        theta = float(grid[int(np.argmax(f))])
    return fidelity_at(fit, theta)
