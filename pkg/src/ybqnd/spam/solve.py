"""Inversion of measured-versus-model systems and corner uncertainty."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class SingularJacobianError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, msg: str, trace: list[float]):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class Measurement:
    name: str
    model: object          # anything with evaluate(params) -> float
    value: float
    sigma: float = 0.0


@dataclass(frozen=True)
class MeasurementSystem:
    """Measured quantities, their models, the unknowns and the fixed inputs."""

    measurements: tuple[Measurement, ...]
    free: tuple[str, ...]
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "free", tuple(self.free))
        if len(self.measurements) < len(self.free):
            raise ValueError(f"{len(self.measurements)} equations for {len(self.free)} unknowns")
        if n := len(set(self.free) & set(self.fixed)):
            raise ValueError(f"{n} parameters are both free and fixed")

    def params(self, x: np.ndarray) -> dict[str, float]:
        d = dict(self.fixed)
        d.update(zip(self.free, map(float, x)))
        return d

    def forward(self, x: np.ndarray) -> np.ndarray:
        p = self.params(x)
        return np.array([m.model.evaluate(p) for m in self.measurements])

    def targets(self) -> np.ndarray:
        return np.array([m.value for m in self.measurements])

    def with_values(self, values: Sequence[float]) -> "MeasurementSystem":
        ms = tuple(Measurement(m.name, m.model, float(v), m.sigma) for m, v in zip(self.measurements, values))
        return MeasurementSystem(ms, self.free, self.fixed)


@dataclass(frozen=True)
class CorrectionResult:
    values: dict[str, float]
    uncertainties: dict[str, float]
    residual_norm: float
    iterations: int
    converged: bool
    trace: tuple[float, ...] = ()
    stationary: bool = False


def _jacobian(sys: MeasurementSystem, x: np.ndarray, f0: np.ndarray, h: float = 1e-7) -> np.ndarray:
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = h if x[j] + h <= 1.0 else -h
        xp = x.copy()
        xp[j] += step
        J[:, j] = (sys.forward(xp) - f0) / step
    return J


def solve(system: MeasurementSystem, initial_guess: Mapping[str, float] | Sequence[float] | None = None,
          tol: float = 1e-10, max_iter: int = 200, max_halvings: int = 60, strict: bool = False) -> CorrectionResult:
    """Damped Gauss-Newton on ``forward(x) = measured`` with ``x`` kept in ``[0, 1]``.

    Parameters sitting on a bound with the gradient pointing outward are
    frozen for the step; each step is halved until the residual norm
    decreases (at most ``max_halvings`` times). The run ends at residual
    ``< tol`` (``converged``) or at a stationary point of the bounded
    least-squares problem (``stationary``). ``strict`` raises instead of
    returning a non-converged result.
    """
    if initial_guess is None:
        x = np.full(len(system.free), 0.9)
    elif isinstance(initial_guess, Mapping):
        x = np.array([initial_guess[n] for n in system.free], dtype=float)
    else:
        x = np.asarray(initial_guess, dtype=float).copy()
    x = np.clip(x, 0.0, 1.0)
    y = system.targets()
    r = system.forward(x) - y
    norm = float(np.linalg.norm(r))
    trace = [norm]
    it = 0
    stationary = False
    for it in range(1, max_iter + 1):
        if norm < tol:
            break
        J = _jacobian(system, x, r + y)
        grad = J.T @ r
        active = ((x <= 0.0) & (grad > 0)) | ((x >= 1.0) & (grad < 0))
        free = ~active
        if not free.any():
            stationary = True
            break
        Jf = J[:, free]
        s = np.linalg.svd(Jf, compute_uv=False)
        if s[-1] < 1e-12 * max(s[0], 1e-300):
            raise SingularJacobianError(
                f"Jacobian is singular at iteration {it} (condition {s[0] / max(s[-1], 1e-300):.2e})")
        step = np.zeros_like(x)
        step[free] = np.linalg.lstsq(Jf, -r, rcond=None)[0]
        lam = 1.0
        improved = False
        for _ in range(max_halvings + 1):
            xn = np.clip(x + lam * step, 0.0, 1.0)
            rn = system.forward(xn) - y
            nn = float(np.linalg.norm(rn))
            if nn < norm:
                improved = True
                break
            lam *= 0.5
        if not improved or norm - nn < 1e-15 * max(norm, 1.0):
            stationary = True
            if improved:
                x, r, norm = xn, rn, nn
                trace.append(norm)
            break
        x, r, norm = xn, rn, nn
        trace.append(norm)
    converged = norm < tol
    if strict and not converged:
        raise NonConvergenceError(f"solver stopped at residual {norm:.3e} after {it} iterations", trace)
    return CorrectionResult(system.params(x), {}, norm, it, converged, tuple(trace), stationary or converged)


def corner_uncertainty(system: MeasurementSystem, result: CorrectionResult,
                       max_measurements: int = 16) -> dict[str, float]:
    """RMS deviation of re-solved parameters over all ``2^n`` +-sigma corners."""
    n = len(system.measurements)
    if n > max_measurements:
        raise ValueError(f"{n} measured values exceed the corner limit of {max_measurements}")
    sig = np.array([m.sigma for m in system.measurements])
    nominal = np.array([result.values[k] for k in system.free])
    if not sig.any():
        return {k: 0.0 for k in system.free}
    base = system.targets()
    devs = []
    failed = 0
    for signs in itertools.product((-1.0, 1.0), repeat=n):
        sub = system.with_values(base + np.array(signs) * sig)
        try:
            res = solve(sub, dict(zip(system.free, nominal)))
        except (SingularJacobianError, NonConvergenceError):
            failed += 1
            continue
        if not res.stationary:
            failed += 1
            continue
        devs.append(np.array([res.values[k] for k in system.free]) - nominal)
    if failed:
        warnings.warn(f"{failed} of {2 ** n} corners did not converge and were excluded", RuntimeWarning)
    if not devs:
        return {k: math.nan for k in system.free}
    rms = np.sqrt(np.mean(np.square(devs), axis=0))
    return dict(zip(system.free, map(float, rms)))


def with_uncertainties(result: CorrectionResult, unc: Mapping[str, float]) -> CorrectionResult:
    return CorrectionResult(result.values, dict(unc), result.residual_norm, result.iterations, result.converged,
                            result.trace, result.stationary)
