"""Physical constants and unit conversions (CODATA values via scipy)."""

from __future__ import annotations

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used throughout the package."""

    hbar: float = _sc.hbar
    c: float = _sc.c
    epsilon0: float = _sc.epsilon_0
    kB: float = _sc.k
    bohr_magneton: float = _sc.physical_constants["Bohr magneton"][0]

    def __post_init__(self) -> None:
        for name in ("hbar", "c", "epsilon0", "kB", "bohr_magneton"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


CONST = PhysicalConstants()

H = _sc.h
E_CHARGE = _sc.e
A0 = _sc.physical_constants["Bohr radius"][0]
AMU = _sc.physical_constants["atomic mass constant"][0]
G_ACCEL = _sc.g

#: Dipole moment unit e*a0 in C*m.
EA0 = E_CHARGE * A0
#: Atomic unit of polarizability, 4 pi eps0 a0^3, in C^2 m^2 / J.
AU_POLARIZABILITY = 4.0 * _sc.pi * _sc.epsilon_0 * A0**3
#: Gauss in tesla.
GAUSS = 1e-4

#: Mass of 171Yb in kg.
MASS_YB171 = 170.9363258 * AMU


def wavenumber_to_omega(k_cm: float) -> float:
    """Angular frequency (rad/s) of an energy given in cm^-1."""
    return 2.0 * _sc.pi * _sc.c * 100.0 * k_cm


def wavelength_to_omega(wavelength: float) -> float:
    """Angular frequency (rad/s) of light with vacuum wavelength in m."""
    return 2.0 * _sc.pi * _sc.c / wavelength


def omega_to_wavelength(omega: float) -> float:
    return 2.0 * _sc.pi * _sc.c / omega
