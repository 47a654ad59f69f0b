"""Level and line records and the loader for the bundled constants file."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

from ..constants import CONST, EA0, H, wavenumber_to_omega

_SOURCES = {"reported", "external", "calibrated"}


@dataclass(frozen=True)
class Level:
    """Fine-structure level ``n 2S+1 L J``.

    Attributes
    ----------
    label : str
        Term label, e.g. ``"3P1"``.
    J : float
        Electronic angular momentum.
    energy : float
        Energy above the ground state in cm^-1.
    linewidth : float or None
        Total decay rate in rad/s when known.
    hyperfine_g : dict
        Map F -> g-factor in Hz/G per mF.
    """

    label: str
    J: float
    energy: float
    configuration: str = ""
    linewidth: float | None = None
    hyperfine_g: dict = field(default_factory=dict)
    source: str = "external"

    @property
    def omega(self) -> float:
        return wavenumber_to_omega(self.energy)


@dataclass(frozen=True)
class LevelState:
    """A hyperfine Zeeman sublevel ``|term, F, mF>``."""

    term: Level
    F: float
    mF: float
    g_factor: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.mF) > self.F + 1e-12:
            raise ValueError(f"|mF|={abs(self.mF)} exceeds F={self.F}")
        if abs(2 * self.F - round(2 * self.F)) > 1e-12 or abs(2 * self.mF - round(2 * self.mF)) > 1e-12:
            raise ValueError("F and mF must be half-integers")
        if abs(self.F - self.mF - round(self.F - self.mF)) > 1e-12:
            raise ValueError("F - mF must be an integer")

    @property
    def term_label(self) -> str:
        return self.term.label

    @property
    def J(self) -> float:
        return self.term.J

    def with_mF(self, mF: float) -> "LevelState":
        return LevelState(self.term, self.F, mF, self.g_factor)


@dataclass(frozen=True)
class TransitionLine:
    """Electric-dipole line between two fine-structure levels.

    ``linewidth_Gamma`` is the total decay rate of the upper level when it is
    known; for lines that only carry a reduced matrix element it is the partial
    rate implied by that element and ``branching_ratio`` is 1.
    """

    lower: Level
    upper: Level
    wavelength: float
    linewidth_Gamma: float
    Isat: float
    branching_ratio: float = 1.0
    reduced_dipole_au: float | None = None
    effective: bool = False
    source: str = "external"
    note: str = ""

    def __post_init__(self) -> None:
        if not self.linewidth_Gamma > 0:
            raise ValueError(f"line {self.name}: linewidth must be positive")
        if not 0.0 <= self.branching_ratio <= 1.0:
            raise ValueError(f"line {self.name}: branching ratio outside [0, 1]")

    @property
    def name(self) -> str:
        return f"{self.lower.label}-{self.upper.label}"

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * CONST.c / self.wavelength

    def involves(self, label: str) -> bool:
        return label in (self.lower.label, self.upper.label)


def partial_rate_from_dipole(d_si: float, omega: float, J_upper: float) -> float:
    """Spontaneous rate ``omega^3 d^2 / (3 pi eps0 hbar c^3 (2J'+1))``."""
    return omega**3 * d_si**2 / (3.0 * math.pi * CONST.epsilon0 * CONST.hbar * CONST.c**3 * (2 * J_upper + 1))


def saturation_intensity(omega: float, gamma: float) -> float:
    """Two-level saturation intensity ``hbar omega^3 Gamma / (12 pi c^2)`` in W/m^2."""
    return CONST.hbar * omega**3 * gamma / (12.0 * math.pi * CONST.c**2)


@dataclass(frozen=True)
class AtomicData:
    """Parsed contents of a constants file."""

    nuclear_spin: float
    levels: dict
    lines: tuple
    schema_version: int = 1

    def level(self, label: str) -> Level:
        try:
            return self.levels[label]
        except KeyError:
            raise KeyError(f"unknown level {label!r}") from None

    def state(self, label: str, F: float, mF: float) -> LevelState:
        lev = self.level(label)
        g = lev.hyperfine_g.get(float(F), 0.0)
        return LevelState(lev, float(F), float(mF), g)

    def line(self, lower: str, upper: str) -> TransitionLine:
        for ln in self.lines:
            if ln.lower.label == lower and ln.upper.label == upper:
                return ln
        raise KeyError(f"no line {lower}-{upper}")

    def lines_for(self, label: str) -> list:
        return [ln for ln in self.lines if ln.involves(label)]

    def decay_channels(self, upper: str) -> list:
        return [ln for ln in self.lines if ln.upper.label == upper]


def _parse(doc: dict) -> AtomicData:
    if doc.get("schema_version") != 1:
        raise ValueError("unsupported atomic data schema version")
    levels = {}
    for label, rec in doc["levels"].items():
        src = rec.get("source", "external")
        if src not in _SOURCES:
            raise ValueError(f"level {label}: unknown source {src!r}")
        hf = {float(h["F"]): float(h["g_factor"]) for h in rec.get("hyperfine", [])}
        lw = rec.get("linewidth")
        levels[label] = Level(
            label=label,
            J=float(rec["J"]),
            energy=float(rec["energy"]),
            configuration=str(rec.get("configuration", "")),
            linewidth=None if lw is None else float(lw),
            hyperfine_g=hf,
            source=src,
        )
    lines = []
    for rec in doc["lines"]:
        lo, up = levels[rec["lower"]], levels[rec["upper"]]
        src = rec.get("source", "external")
        if src not in _SOURCES:
            raise ValueError(f"line {lo.label}-{up.label}: unknown source {src!r}")
        omega = up.omega - lo.omega
        if omega <= 0:
            raise ValueError(f"line {lo.label}-{up.label}: upper level below lower level")
        wavelength = 2.0 * math.pi * CONST.c / omega
        d_au = rec.get("reduced_dipole")
        br = rec.get("branching_ratio")
        if up.linewidth is not None and br is not None:
            gamma, branching = up.linewidth, float(br)
        elif d_au is not None:
            gamma, branching = partial_rate_from_dipole(float(d_au) * EA0, omega, up.J), 1.0
        else:
            raise ValueError(f"line {lo.label}-{up.label}: needs a dipole or a linewidth and branching ratio")
        lines.append(
            TransitionLine(
                lower=lo,
                upper=up,
                wavelength=wavelength,
                linewidth_Gamma=gamma,
                Isat=saturation_intensity(omega, gamma),
                branching_ratio=branching,
                reduced_dipole_au=None if d_au is None else float(d_au),
                effective=bool(rec.get("effective", False)),
                source=src,
                note=str(rec.get("note", "")),
            )
        )
    return AtomicData(float(doc["nuclear_spin"]), levels, tuple(lines), int(doc["schema_version"]))


def load_atomic_data(path: str | Path | None = None) -> AtomicData:
    """Load a constants file; the bundled 171Yb file when ``path`` is None."""
    if path is None:
        return _default_data()
    with open(path, encoding="utf-8") as fh:
        return _parse(yaml.safe_load(fh))


@lru_cache(maxsize=1)
def _default_data() -> AtomicData:
    text = resources.files(__package__).joinpath("yb171.yaml").read_text(encoding="utf-8")
    return _parse(yaml.safe_load(text))


def photon_energy(line: TransitionLine) -> float:
    return H * CONST.c / line.wavelength
