"""Dynamic polarizabilities, light shifts and magic-wavelength search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from ..constants import AU_POLARIZABILITY, CONST, EA0, H, wavelength_to_omega
from .data import AtomicData, LevelState, TransitionLine, load_atomic_data, partial_rate_from_dipole
from .wigner import wigner6j


class ResonanceError(ValueError):
    """Raised when the light frequency sits on a line."""


@dataclass(frozen=True)
class PolarizabilitySet:
    """Scalar, vector and tensor polarizabilities in atomic units."""

    alpha_scalar: float
    alpha_vector: float = 0.0
    alpha_tensor: float = 0.0

    def __add__(self, other: "PolarizabilitySet") -> "PolarizabilitySet":
        return PolarizabilitySet(
            self.alpha_scalar + other.alpha_scalar,
            self.alpha_vector + other.alpha_vector,
            self.alpha_tensor + other.alpha_tensor,
        )


@dataclass(frozen=True)
class TweezerConfig:
    """Gaussian tweezer beam.

    Parameters
    ----------
    wavelength : float
        Vacuum wavelength in m.
    power : float
        Beam power in W.
    waist_radius : float
        1/e^2 intensity radius in m.
    """

    wavelength: float
    power: float
    waist_radius: float

    def __post_init__(self) -> None:
        if self.wavelength <= 0 or self.power < 0 or self.waist_radius <= 0:
            raise ValueError("tweezer wavelength and waist must be positive, power non-negative")

    @property
    def peak_intensity(self) -> float:
        return 2.0 * self.power / (math.pi * self.waist_radius**2)

    @property
    def omega(self) -> float:
        return wavelength_to_omega(self.wavelength)

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_radius**2 / self.wavelength

    def intensity_factor_hz(self) -> float:
        """``I / (2 eps0 c h)`` in Hz per atomic unit of polarizability."""
        return self.peak_intensity * AU_POLARIZABILITY / (2.0 * CONST.epsilon0 * CONST.c * H)

    def depth(self, alpha_au: float) -> float:
        """Trap depth ``alpha I / (2 eps0 c)`` in J for a scalar polarizability."""
        return alpha_au * AU_POLARIZABILITY * self.peak_intensity / (2.0 * CONST.epsilon0 * CONST.c)

    @classmethod
    def from_trap_depth(cls, depth_hz: float, wavelength: float, waist_radius: float,
                        alpha_au: float) -> "TweezerConfig":
        """Beam whose peak depth ``U0/h`` equals ``depth_hz`` for polarizability ``alpha_au``."""
        intensity = depth_hz * H * 2.0 * CONST.epsilon0 * CONST.c / (alpha_au * AU_POLARIZABILITY)
        return cls(wavelength, intensity * math.pi * waist_radius**2 / 2.0, waist_radius)


@dataclass(frozen=True)
class PolarizationState:
    """Tweezer polarization: ellipticity ``gamma`` and tilt ``theta`` (rad)."""

    gamma_ellipticity: float = 0.0
    theta_tilt: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma_ellipticity <= math.pi / 2 + 1e-15:
            raise ValueError("gamma_ellipticity must lie in [0, pi/2]")

    def unit_vector(self) -> np.ndarray:
        """Complex polarization vector as (x, y, z) components."""
        g, t = self.gamma_ellipticity, self.theta_tilt
        uz = math.cos(g) * math.cos(t) - 1j * math.sin(g) * math.sin(t)
        ux = math.cos(g) * math.sin(t) + 1j * math.sin(g) * math.cos(t)
        return np.array([ux, 0.0, uz], dtype=complex)


def reduced_dipole_from_lifetime(line: TransitionLine) -> float:
    """Reduced dipole matrix element |<J'||d||J>| in C m from the decay rate.

    Inverts ``Gamma_partial = omega^3 |d|^2 / (3 pi eps0 hbar c^3 (2J'+1))``
    with ``Gamma_partial = branching_ratio * linewidth_Gamma``.
    """
    if line.linewidth_Gamma <= 0 or line.wavelength <= 0:
        raise ValueError("linewidth and wavelength must be positive")
    gamma = line.branching_ratio * line.linewidth_Gamma
    omega = line.omega
    return math.sqrt(
        gamma * 3.0 * math.pi * CONST.epsilon0 * CONST.hbar * CONST.c**3 * (2 * line.upper.J + 1) / omega**3
    )


def _line_dipole_si(line: TransitionLine) -> float:
    if line.reduced_dipole_au is not None:
        return line.reduced_dipole_au * EA0
    return reduced_dipole_from_lifetime(line)


def reduced_polarizability(J: float, energy_omega: float, label: str, lines: Sequence[TransitionLine],
                           omega: float, K: int) -> float:
    """Reduced polarizability ``alpha^(K)_{nJ}`` in SI units (C^2 m^2 / J)."""
    total = 0.0
    for ln in lines:
        if ln.lower.label == label:
            other = ln.upper
        elif ln.upper.label == label:
            other = ln.lower
        else:
            continue
        w_ki = other.omega - energy_omega
        for denom in (w_ki - omega, w_ki + omega):
            if abs(denom) <= 1e-9 * abs(omega if omega else w_ki):
                raise ResonanceError(f"light at {omega:.6e} rad/s is resonant with line {ln.name}")
        d2 = _line_dipole_si(ln) ** 2
        sixj = wigner6j(1, K, 1, J, other.J, J)
        total += (-1) ** round(other.J) * sixj * d2 * (1.0 / (w_ki - omega) + (-1) ** K / (w_ki + omega))
    return (-1) ** round(K + J + 1) * math.sqrt(2 * K + 1) * total / CONST.hbar


def polarizability(level: LevelState, lines: Sequence[TransitionLine], omega: float,
                   nuclear_spin: float = 0.5) -> PolarizabilitySet:
    """Sum-over-states scalar, vector and tensor polarizabilities.

    Parameters
    ----------
    level : LevelState
        Hyperfine state; only ``F`` (not ``mF``) enters.
    lines : sequence of TransitionLine
        Lines touching the level; others are ignored.
    omega : float
        Light angular frequency in rad/s (0 for static).

    Returns
    -------
    PolarizabilitySet
        Values in atomic units.
    """
    J, F, I = level.J, level.F, nuclear_spin
    e0 = level.term.omega
    a = [reduced_polarizability(J, e0, level.term_label, lines, omega, K) for K in (0, 1, 2)]
    scalar = a[0] / math.sqrt(3 * (2 * J + 1))
    vector = 0.0
    tensor = 0.0
    if F > 0:
        ph = (-1) ** round(J + I + F)
        vector = ph * math.sqrt(2 * F * (2 * F + 1) / (F + 1)) * wigner6j(F, 1, F, J, I, J) * a[1]
    if F >= 1:
        ph = (-1) ** round(J + I + F + 1)
        tensor = ph * math.sqrt(2 * F * (2 * F - 1) * (2 * F + 1) / (3 * (F + 1) * (2 * F + 3))) \
            * wigner6j(F, 2, F, J, I, J) * a[2]
    return PolarizabilitySet(scalar / AU_POLARIZABILITY, vector / AU_POLARIZABILITY, tensor / AU_POLARIZABILITY)


def tensor_angular_factor(theta_tilt: float, F: float, mF: float) -> float:
    """``(3cos^2 theta - 1)/2 * (3 mF^2 - F(F+1)) / (F(2F-1))``; zero for F < 1."""
    if F < 1:
        return 0.0
    return (3 * math.cos(theta_tilt) ** 2 - 1) / 2 * (3 * mF**2 - F * (F + 1)) / (F * (2 * F - 1))


def total_polarizability(pol: PolarizabilitySet, theta_tilt: float, F: float, mF: float) -> float:
    """Polarizability of ``|F, mF>`` in linearly polarized light (a.u.)."""
    return pol.alpha_scalar + pol.alpha_tensor * tensor_angular_factor(theta_tilt, F, mF)


def light_shift(pol: PolarizabilitySet, tweezer: TweezerConfig, theta_tilt: float, F: float, mF: float) -> float:
    """Peak light shift in J for linear polarization.

    ``U = -I/(2 eps0 c) [alpha_S + alpha_T (3cos^2 theta-1)/2 (3mF^2-F(F+1))/(F(2F-1))]``
    """
    alpha = total_polarizability(pol, theta_tilt, F, mF) * AU_POLARIZABILITY
    return -tweezer.peak_intensity / (2.0 * CONST.epsilon0 * CONST.c) * alpha


def solve_polarizability_correction(diff_half: float, diff_threehalf: float, ground_alpha: float,
                                    theta_tilt: float = 0.0) -> tuple[float, float]:
    """Tensor polarizability and scalar differential from measured light shifts.

    Each measured differential polarizability ``(alpha(3P1,|mF|) - alpha_g) / alpha_g``
    gives one linear equation in ``(alpha_T, delta_alpha_S)``:
    ``diff * alpha_g = delta_alpha_S + A(|mF|) alpha_T`` with ``A`` the tensor
    angular factor for F = 3/2.

    Returns
    -------
    (alpha_T, delta_alpha_S) in the units of ``ground_alpha``.
    """
    if not all(np.isfinite([diff_half, diff_threehalf, ground_alpha])):
        raise ValueError("differential polarizabilities must be finite")
    m = np.array([
        [tensor_angular_factor(theta_tilt, 1.5, 1.5), 1.0],
        [tensor_angular_factor(theta_tilt, 1.5, 0.5), 1.0],
    ])
    if abs(np.linalg.det(m)) < 1e-12:
        raise np.linalg.LinAlgError("singular correction system (tensor factor vanishes)")
    rhs = np.array([diff_threehalf, diff_half]) * ground_alpha
    alpha_t, d_s = np.linalg.solve(m, rhs)
    return float(alpha_t), float(d_s)


def correction_uncertainty(diff_half: float, diff_threehalf: float, ground_alpha: float,
                           rel_waist: float = 0.1, rel_shift: float = 0.1,
                           theta_tilt: float = 0.0) -> tuple[float, float]:
    """One-sigma errors of ``(alpha_T, delta_alpha_S)`` from waist and light-shift errors.

    The trap depth scales as ``1/w0^2``, so a waist error ``rel_waist`` rescales
    both differentials together by ``2 rel_waist``. Each light shift carries an
    independent relative error ``rel_shift``. The solution is linear in the
    differentials, so the propagation is exact to first order.
    """
    if rel_waist < 0 or rel_shift < 0:
        raise ValueError("relative errors must be non-negative")
    m = np.array([
        [tensor_angular_factor(theta_tilt, 1.5, 1.5), 1.0],
        [tensor_angular_factor(theta_tilt, 1.5, 0.5), 1.0],
    ])
    d = np.array([diff_threehalf, diff_half]) * ground_alpha
    cov = (2 * rel_waist) ** 2 * np.outer(d, d) + np.diag((rel_shift * d) ** 2)
    inv = np.linalg.inv(m)
    out = inv @ cov @ inv.T
    return float(math.sqrt(out[0, 0])), float(math.sqrt(out[1, 1]))


@dataclass(frozen=True)
class CorrectionOffsets:
    """Additive offsets applied to computed scalar and tensor polarizabilities."""

    scalar: float = 0.0
    tensor: float = 0.0

    def apply(self, pol: PolarizabilitySet) -> PolarizabilitySet:
        return PolarizabilitySet(pol.alpha_scalar + self.scalar, pol.alpha_vector, pol.alpha_tensor + self.tensor)


def fit_correction_offsets(level: LevelState, lines: Sequence[TransitionLine], omega_ref: float,
                           alpha_tensor: float, alpha_scalar: float) -> CorrectionOffsets:
    """Offsets that move the computed values at ``omega_ref`` onto the targets."""
    pol = polarizability(level, lines, omega_ref)
    return CorrectionOffsets(alpha_scalar - pol.alpha_scalar, alpha_tensor - pol.alpha_tensor)


# Measured differential polarizabilities of 3P1 |mF| = 1/2 and 3/2 relative
# to the ground state, and the reference wavelength of the calculation.
MEASURED_DIFF_HALF = -0.030
MEASURED_DIFF_THREEHALF = 0.25
REFERENCE_WAVELENGTH = 759.35e-9


@dataclass(frozen=True)
class StatePolarizability:
    """Polarizability of a Zeeman state, optionally with correction offsets."""

    state: LevelState
    lines: tuple
    offsets: CorrectionOffsets = CorrectionOffsets()

    def set_at(self, omega: float) -> PolarizabilitySet:
        return self.offsets.apply(polarizability(self.state, self.lines, omega))

    def total(self, omega: float, theta_tilt: float = 0.0) -> float:
        return total_polarizability(self.set_at(omega), theta_tilt, self.state.F, self.state.mF)


def default_models(data: AtomicData | None = None, corrected: bool = True) -> dict:
    """Ground, 3P0 and 3P1 F=3/2 state polarizability models.

    With ``corrected`` the 3P1 values carry the additive offsets solved from the
    measured differential polarizabilities at the reference wavelength.
    """
    data = data or load_atomic_data()
    g = data.state("1S0", 0.5, 0.5)
    p0 = data.state("3P0", 0.5, 0.5)
    e = data.state("3P1", 1.5, 1.5)
    g_lines = tuple(data.lines_for("1S0"))
    p0_lines = tuple(data.lines_for("3P0"))
    e_lines = tuple(data.lines_for("3P1"))
    offsets = CorrectionOffsets()
    if corrected:
        w_ref = wavelength_to_omega(REFERENCE_WAVELENGTH)
        a_g = polarizability(g, g_lines, w_ref).alpha_scalar
        a_t, d_s = solve_polarizability_correction(MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, a_g)
        offsets = fit_correction_offsets(e, e_lines, w_ref, a_t, a_g + d_s)
    return {
        "1S0": StatePolarizability(g, g_lines),
        "3P0": StatePolarizability(p0, p0_lines),
        "3P1": StatePolarizability(e, e_lines, offsets),
    }


class MagicResult(NamedTuple):
    wavelengths: list
    degenerate: bool


def magic_wavelength_search(model_a: StatePolarizability, model_b: StatePolarizability,
                            wl_range: tuple[float, float], theta_tilt: float = 0.0,
                            step: float = 0.1e-9, xtol: float = 1e-13) -> MagicResult:
    """Wavelengths in ``wl_range`` where the two states have equal polarizability.

    Sign changes of the differential polarizability on a ``step`` grid are
    refined by bisection to ``xtol`` (m). Sign changes across a pole are
    discarded. Identical states return the range endpoints flagged degenerate.
    """
    lo, hi = wl_range
    if not 0 < lo < hi:
        raise ValueError("wavelength range must be positive and increasing")
    if model_a == model_b:
        return MagicResult([lo, hi], True)

    def diff(wl: float) -> float:
        w = wavelength_to_omega(wl)
        return model_a.total(w, theta_tilt) - model_b.total(w, theta_tilt)

    grid = np.arange(lo, hi + 0.5 * step, step)
    vals = np.array([diff(x) for x in grid])
    if np.all(np.abs(vals) < 1e-9):
        return MagicResult([lo, hi], True)
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
            continue
        if np.sign(vals[i]) != np.sign(vals[i + 1]) and vals[i + 1] != 0.0:
            r = brentq(diff, grid[i], grid[i + 1], xtol=xtol)
            scale = max(abs(vals[i]), abs(vals[i + 1]))
            # across a pole the bisection end point is large, not small
            if abs(diff(r)) < scale:
                roots.append(float(r))
    return MagicResult(roots, False)
