"""Monte Carlo collection efficiency of dipole fluorescence through an objective.

The quantization axis is z. The objective looks along x, perpendicular to it,
and accepts a circular cone of half-angle ``arcsin(NA)``. In polar coordinates
about z the cone is bounded by ``cos(theta_pm(phi)) = -/+ sqrt(NA^2 - sin^2 phi) / cos(phi)``
for ``|phi| <= arcsin(NA)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..rng import make_generator

EmissionCase = Literal["-3/2", "-1/2", "isotropic"]


@dataclass(frozen=True)
class CollectionGeometry:
    numerical_aperture: float
    sample_count: int = 1_000_000
    both_hemispheres: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.numerical_aperture <= 1.0:
            raise ValueError("numerical aperture must lie in (0, 1]")
        if self.sample_count < 10_000:
            raise ValueError("sample_count must be at least 1e4")

    def bounding_curves(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Polar limits ``(theta_minus, theta_plus)`` of the cone at azimuth ``phi``.

        NaN where the azimuth lies outside the cone.
        """
        na = self.numerical_aperture
        phi = np.asarray(phi, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.sqrt(na**2 - np.sin(phi) ** 2) / np.abs(np.cos(phi))
            r = np.where((np.abs(np.sin(phi)) <= na) & (np.cos(phi) > 0), np.minimum(r, 1.0), np.nan)
        return np.arccos(r), np.arccos(-r)

    def cap_fraction(self) -> float:
        """Solid-angle fraction of the acceptance region."""
        frac = (1.0 - math.sqrt(1.0 - self.numerical_aperture**2)) / 2.0
        return 2 * frac if self.both_hemispheres else frac


def dipole_pattern_sigma(cos_theta: np.ndarray) -> np.ndarray:
    """Emission density ``3/(16 pi) (1 + cos^2 theta)`` for Delta m = +-1."""
    return 3.0 / (16.0 * math.pi) * (1.0 + cos_theta**2)


def dipole_pattern_pi(cos_theta: np.ndarray) -> np.ndarray:
    """Emission density ``3/(8 pi) sin^2 theta`` for Delta m = 0."""
    return 3.0 / (8.0 * math.pi) * (1.0 - cos_theta**2)


def _sample_sigma(r: np.ndarray) -> np.ndarray:
    # inverse CDF of (1+u^2): u^3 + 3u + 4 - 8r = 0, one real root
    q = 4.0 - 8.0 * r
    s = np.sqrt(q * q / 4.0 + 1.0)
    return np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s)


def _sample_pi(r: np.ndarray) -> np.ndarray:
    # inverse CDF of (1-u^2): u^3 - 3u + 4r - 2 = 0, root in [-1, 1]
    return 2.0 * np.cos(np.arccos(np.clip(1.0 - 2.0 * r, -1.0, 1.0)) / 3.0 + 4.0 * math.pi / 3.0)


def sample_directions(case: EmissionCase, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(cos_theta, phi)`` from the emission pattern of ``case``."""
    r = rng.random(n)
    phi = rng.random(n) * 2.0 * math.pi
    if case == "-3/2":
        u = _sample_sigma(r)
    elif case == "-1/2":
        use_pi = rng.random(n) < 2.0 / 3.0
        u = np.where(use_pi, _sample_pi(r), _sample_sigma(r))
    elif case == "isotropic":
        u = 2.0 * r - 1.0
    else:
        raise ValueError(f"unknown emission case {case!r}")
    return np.clip(u, -1.0, 1.0), phi


def inside_acceptance(geometry: CollectionGeometry, cos_theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Accept/reject directions against the phi-dependent polar bounds."""
    th_minus, th_plus = geometry.bounding_curves(phi)
    theta = np.arccos(cos_theta)
    ok = (theta >= th_minus) & (theta <= th_plus)
    if geometry.both_hemispheres:
        tm2, tp2 = geometry.bounding_curves(phi - math.pi)
        ok |= (theta >= tm2) & (theta <= tp2)
    return ok


def collection_efficiency(geometry: CollectionGeometry, emission_case: EmissionCase,
                          rng_seed: int) -> tuple[float, float]:
    """Fraction of emitted photons inside the acceptance cone.

    Returns
    -------
    (efficiency, standard_error)
    """
    rng = make_generator(rng_seed)
    u, phi = sample_directions(emission_case, geometry.sample_count, rng)
    hits = inside_acceptance(geometry, u, phi)
    eff = float(hits.mean())
    return eff, math.sqrt(max(eff * (1.0 - eff), 0.0) / geometry.sample_count)
