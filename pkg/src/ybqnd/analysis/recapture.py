"""Release-and-recapture thermometry with a Monte Carlo forward model."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..atomic.polarizability import TweezerConfig, default_models
from ..constants import CONST, G_ACCEL, MASS_YB171
from ..rng import make_generator


@dataclass(frozen=True)
class RecaptureModel:
    """Forward-model settings.

    Positions and velocities are drawn from the thermal distribution of the
    harmonic approximation (radial and axial frequencies from waist, Rayleigh
    range and depth). After ballistic flight under gravity the atom counts as
    recaptured when its kinetic plus full Gaussian-beam potential energy is
    negative. Probabilities are normalized to the zero-time value.
    """

    n_atoms: int = 20000
    mass: float = MASS_YB171
    gravity_axis: Literal["radial", "axial", "none"] = "radial"
    seed: int = 0


def trap_depth_joules(trap: TweezerConfig) -> float:
    alpha = default_models()["1S0"].set_at(trap.omega).alpha_scalar
    return trap.depth(alpha)


def _potential(trap: TweezerConfig, depth: float, x, y, z):
    zr = trap.rayleigh_range
    w2 = trap.waist_radius**2 * (1 + (z / zr) ** 2)
    return -depth * (trap.waist_radius**2 / w2) * np.exp(-2 * (x**2 + y**2) / w2)


def recapture_probability(release_times: Sequence[float], temperature: float, trap: TweezerConfig,
                          depth: float | None = None, model: RecaptureModel = RecaptureModel()) -> np.ndarray:
    """Recapture fraction after each release time, relative to zero release."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    U0 = trap_depth_joules(trap) if depth is None else depth
    m = model.mass
    w_r = math.sqrt(4 * U0 / (m * trap.waist_radius**2))
    w_z = math.sqrt(2 * U0 / (m * trap.rayleigh_range**2))
    rng = make_generator(model.seed)
    n = model.n_atoms
    kT = CONST.kB * temperature
    xs = rng.standard_normal((3, n)) * np.sqrt(kT / m) / np.array([w_r, w_r, w_z])[:, None]
    vs = rng.standard_normal((3, n)) * math.sqrt(kT / m)
    g = np.zeros(3)
    if model.gravity_axis == "radial":
        g[1] = -G_ACCEL
    elif model.gravity_axis == "axial":
        g[2] = -G_ACCEL

    def captured(t: float) -> np.ndarray:
        pos = xs + vs * t + 0.5 * g[:, None] * t**2
        vel = vs + g[:, None] * t
        e = 0.5 * m * (vel**2).sum(axis=0) + _potential(trap, U0, *pos)
        return e < 0

    base = captured(0.0).mean()
    if base == 0:
        raise ValueError("no atoms bound at zero release time; temperature is far above the trap depth")
    return np.array([captured(float(t)).mean() / base for t in release_times])


@dataclass(frozen=True)
class TemperatureFit:
    temperature: float
    grid: np.ndarray
    sse: np.ndarray
    at_edge: bool


def release_recapture_temperature(curve: Sequence[tuple[float, float]], trap: TweezerConfig,
                                  grid: Sequence[float] | None = None, depth: float | None = None,
                                  model: RecaptureModel = RecaptureModel()) -> TemperatureFit:
    """Least-squares temperature from a normalized recapture curve.

    The forward model is evaluated on ``grid`` (kelvin, default 1 to 30 uK)
    with common random numbers, and the minimum is refined with a parabola
    through its neighbours. A minimum on the grid edge is flagged.
    """
    arr = np.asarray(curve, dtype=float)
    t, p = arr[:, 0], arr[:, 1]
    temps = np.asarray(grid if grid is not None else np.arange(1e-6, 30.01e-6, 0.5e-6))
    sse = np.array([float(((recapture_probability(t, T, trap, depth, model) - p) ** 2).sum()) for T in temps])
    k = int(np.argmin(sse))
    edge = k == 0 or k == temps.size - 1
    best = float(temps[k])
    if edge:
        warnings.warn("best temperature lies on the edge of the scan grid", RuntimeWarning)
    else:
        y0, y1, y2 = sse[k - 1], sse[k], sse[k + 1]
        den = y0 - 2 * y1 + y2
        if den > 0:
            h = temps[k + 1] - temps[k]
            best = float(temps[k] + 0.5 * h * (y0 - y2) / den)
    return TemperatureFit(best, temps, sse, edge)
