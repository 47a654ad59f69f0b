"""Probe-driven scattering rates, Raman coupling and tweezer-induced loss.

Qubit convention: ``|0> = 1S0 mF=-1/2`` (bright under the -3/2 probe) and
``|1> = 1S0 mF=+1/2``. Excited states are ``3P1 F=3/2, mF in {-3/2..3/2}``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .atomic.data import AtomicData, TransitionLine, load_atomic_data
from .atomic.mixing import stark_zeeman_mixing
from .atomic.polarizability import (
    PolarizationState,
    TweezerConfig,
    default_models,
    tensor_angular_factor,
)
from .atomic.wigner import wigner3j, wigner6j
from .constants import CONST

TWO_PI = 2.0 * math.pi
GROUND_G_HZ_PER_G = -750.0  # 1S0 F=1/2 Zeeman coefficient per mF
EXCITED_G_HZ_PER_G = 1.4e6  # 3P1 F=3/2 Zeeman coefficient per mF
EXCITED_MF = (-1.5, -0.5, 0.5, 1.5)


def probe_line(data: AtomicData | None = None) -> TransitionLine:
    """The 1S0 - 3P1 intercombination line used for imaging."""
    return (data or load_atomic_data()).line("1S0", "3P1")


@dataclass(frozen=True)
class ProbeConfig:
    """Imaging beam.

    Parameters
    ----------
    intensity_total : float
        Total intensity in units of the probe-line saturation intensity.
    polarization_split : tuple of float
        Fractions ``(sigma-, pi, sigma+)`` of the total intensity.
    detuning : float
        Detuning from the (trap-shifted) target transition in rad/s.
    duration : float
        Exposure in s.
    """

    intensity_total: float = 3.0
    polarization_split: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    detuning: float = -TWO_PI * 182e3
    duration: float = 12e-3

    def __post_init__(self) -> None:
        f = self.polarization_split
        if len(f) != 3 or min(f) < 0 or abs(sum(f) - 1.0) > 1e-12:
            raise ValueError("polarization fractions must be non-negative and sum to 1")
        if self.intensity_total < 0:
            raise ValueError("intensity must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def s_sigma_minus(self) -> float:
        return self.intensity_total * self.polarization_split[0]

    @property
    def s_pi(self) -> float:
        return self.intensity_total * self.polarization_split[1]

    @property
    def s_sigma_plus(self) -> float:
        return self.intensity_total * self.polarization_split[2]

    def with_(self, **kw) -> "ProbeConfig":
        d = {k: getattr(self, k) for k in ("intensity_total", "polarization_split", "detuning", "duration")}
        d.update(kw)
        return ProbeConfig(**d)


def reference_probe(gamma: float | None = None) -> ProbeConfig:
    """3 Isat split evenly over polarizations, red-detuned by one linewidth, 12 ms."""
    g = probe_line().linewidth_Gamma if gamma is None else gamma
    return ProbeConfig(3.0, (1 / 3, 1 / 3, 1 / 3), -g, 12e-3)


@dataclass(frozen=True)
class FieldPoint:
    """Static field and the resulting transition offsets.

    Attributes
    ----------
    B_dc : float
        Field in G.
    qubit_splitting_delta01 : float
        ``(E1 - E0)/hbar`` in rad/s; negative for this isotope.
    zeeman_detunings : mapping
        Offset ``omega(|0> -> mF) - omega(|0> -> -3/2)`` in rad/s for each excited mF,
        including differential light shifts. The probe detuning from line ``mF``
        is ``probe.detuning - zeeman_detunings[mF]``.
    admixture : float
        Bare mF=-1/2 population in the -3/2 imaging eigenstate (0 disables the channel).
    """

    B_dc: float
    qubit_splitting_delta01: float
    zeeman_detunings: Mapping[float, float]
    admixture: float = 0.0

    def detuning(self, probe: ProbeConfig, mF: float, from_state: int = 0) -> float:
        """Probe detuning from ``|from_state> -> mF`` in rad/s."""
        d = probe.detuning - self.zeeman_detunings[mF]
        return d + self.qubit_splitting_delta01 if from_state == 1 else d


def excited_light_shift_offsets(tweezer: TweezerConfig, theta_tilt: float = 0.0) -> dict[float, float]:
    """Light shift of each 3P1 F=3/2 mF relative to mF=-3/2, in rad/s."""
    pol = default_models()["3P1"].set_at(tweezer.omega)
    f_hz = tweezer.intensity_factor_hz()

    def shift(m: float) -> float:
        return -f_hz * pol.alpha_tensor * tensor_angular_factor(theta_tilt, 1.5, m)

    ref = shift(-1.5)
    return {m: TWO_PI * (shift(m) - ref) for m in EXCITED_MF}


def make_field_point(B: float, tweezer: TweezerConfig | None = None,
                     polarization: PolarizationState | None = None,
                     include_light_shift: bool = True) -> FieldPoint:
    """Build a :class:`FieldPoint` at field ``B`` (G).

    ``tweezer`` adds the differential tensor light shift. ``polarization``
    additionally switches on the mixing depolarization channel with the
    admixture computed for that tweezer polarization.
    """
    if B <= 0:
        raise ValueError("B must be positive")
    delta01 = TWO_PI * GROUND_G_HZ_PER_G * B
    offs = {m: TWO_PI * EXCITED_G_HZ_PER_G * B * (m + 1.5) for m in EXCITED_MF}
    theta = polarization.theta_tilt if polarization else 0.0
    if tweezer is not None and include_light_shift:
        ls = excited_light_shift_offsets(tweezer, theta)
        offs = {m: offs[m] + ls[m] for m in EXCITED_MF}
    adm = 0.0
    if tweezer is not None and polarization is not None:
        adm = stark_zeeman_mixing(B, tweezer, polarization).admixture(-1.5, -0.5)
    return FieldPoint(B, delta01, offs, adm)


@dataclass(frozen=True)
class RateSet:
    """Ground-state scattering rates in 1/s with their channel breakdown."""

    R00: float
    R01: float
    R10: float
    R11: float
    channels: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("R00", "R01", "R10", "R11"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> float:
        return self.R00 + self.R01 + self.R10 + self.R11

    @classmethod
    def zero(cls) -> "RateSet":
        return cls(0.0, 0.0, 0.0, 0.0, {})


def _lorentz(gamma: float, cg: float, s: float, delta: float) -> float:
    # (Gamma/2) * cg * s / (1 + 4 (delta/Gamma)^2 + s)
    if s == 0.0 or cg == 0.0:
        return 0.0
    return 0.5 * gamma * cg * s / (1.0 + 4.0 * (delta / gamma) ** 2 + s)


def scattering_rates(field_pt: FieldPoint, probe: ProbeConfig, gamma: float | None = None) -> RateSet:
    """All scattering channels between the two qubit states.

    Saturation parameters are the polarization-resolved intensities scaled by
    the squared Clebsch-Gordan factor of each leg. When ``field_pt.admixture``
    is non-zero an extra ``0 -> 1`` channel is added: the -3/2 imaging
    eigenstate carries that much bare -1/2 character, which decays to ``|1>``
    with probability 1/3.
    """
    g = probe_line().linewidth_Gamma if gamma is None else gamma
    sm, sp, spl = probe.s_sigma_minus, probe.s_pi, probe.s_sigma_plus
    d = field_pt.detuning
    ch = {
        "0->0@-3/2": _lorentz(g, 1.0, sm, d(probe, -1.5)),
        "0->0@-1/2": _lorentz(g, 2 / 3, 2 / 3 * sp, d(probe, -0.5)),
        "0->0@+1/2": _lorentz(g, 1 / 3, 1 / 3 * spl, d(probe, 0.5)),
        "1->1@-1/2": _lorentz(g, 1 / 3, 1 / 3 * sm, d(probe, -0.5, 1)),
        "1->1@+1/2": _lorentz(g, 2 / 3, 2 / 3 * sp, d(probe, 0.5, 1)),
        "1->1@+3/2": _lorentz(g, 1.0, spl, d(probe, 1.5, 1)),
        "0->1@-1/2": _lorentz(g, 1 / 3, 2 / 3 * sp, d(probe, -0.5)),
        "0->1@+1/2": _lorentz(g, 2 / 3, 1 / 3 * spl, d(probe, 0.5)),
        "1->0@-1/2": _lorentz(g, 1 / 3, 2 / 3 * sm, d(probe, -0.5, 1)),
        "1->0@+1/2": _lorentz(g, 2 / 3, 1 / 3 * sp, d(probe, 0.5, 1)),
    }
    if field_pt.admixture > 0.0:
        ch["0->1@mix"] = ch["0->0@-3/2"] * field_pt.admixture / 3.0

    def total(prefix: str) -> float:
        return sum(v for k, v in ch.items() if k.startswith(prefix))

    return RateSet(total("0->0"), total("0->1"), total("1->0"), total("1->1"), ch)


def raman_rabi(field_pt: FieldPoint, probe: ProbeConfig, gamma: float | None = None) -> float:
    """Two-photon Rabi frequency (rad/s) coupling ``|0>`` and ``|1>``.

    Sums the paths through mF=-1/2 and mF=+1/2. Each path uses the geometric
    mean of the two leg intensities, which is ``I/3`` for an even split.
    """
    g = probe_line().linewidth_Gamma if gamma is None else gamma
    sm, sp, spl = probe.s_sigma_minus, probe.s_pi, probe.s_sigma_plus
    total = 0.0
    for m, s_pair in ((-0.5, math.sqrt(sp * sm)), (0.5, math.sqrt(spl * sp))):
        delta = field_pt.detuning(probe, m)
        if s_pair == 0.0:
            continue
        if abs(delta) < 1e-3 * g:
            raise ValueError(f"intermediate detuning via mF={m:+.1f} is too close to zero")
        total += math.sqrt(2.0 / 9.0) * g * g / (2.0 * delta) * s_pair / 2.0
    return total


def excited_fraction(probe: ProbeConfig, transition: TransitionLine | None = None,
                     intensity: float | None = None) -> float:
    """Steady-state excited population of a driven two-level line.

    ``intensity`` (in Isat) overrides ``probe.intensity_total``.
    """
    g = (transition or probe_line()).linewidth_Gamma
    s = probe.intensity_total if intensity is None else intensity
    return 0.5 * s / (1.0 + 4.0 * (probe.detuning / g) ** 2 + s)


def ac_rabi_from_field(B_ac: float) -> float:
    """Resonant nuclear-spin Rabi frequency (rad/s) for an RF field amplitude in G."""
    if B_ac < 0:
        raise ValueError("B_ac must be non-negative")
    return 0.5 * TWO_PI * abs(GROUND_G_HZ_PER_G) * B_ac


def larmor_frequency(B: float) -> float:
    """Qubit splitting in Hz at field ``B`` (G)."""
    return abs(GROUND_G_HZ_PER_G) * B


# ---------------------------------------------------------------- loss model


class SurvivalModel(str, Enum):
    OPTIMISTIC = "decay-to-3P1-survives"
    PESSIMISTIC = "any-3S1-excitation-lost"


def tweezer_scattering_rate(tweezer: TweezerConfig, data: AtomicData | None = None) -> float:
    """Off-resonant 3P1 -> 3S1 excitation rate (1/s) at the tweezer peak intensity.

    Uses the two-level far-detuned form with rotating and counter-rotating
    denominators. The line strength enters as ``Gamma_partial * Gamma_total``
    of 3S1, so only the 3P1 leg drives the excitation.
    """
    data = data or load_atomic_data()
    line = data.line("3P1", "3S1")
    w0 = line.omega
    w = tweezer.omega
    if abs(w0 - w) / w0 < 1e-9:
        raise ValueError("tweezer is resonant with the 3P1 - 3S1 line")
    g_tot = line.upper.linewidth
    g_part = line.branching_ratio * g_tot
    pref = 3.0 * math.pi * CONST.c**2 * g_part * g_tot / (2.0 * CONST.hbar * w0**3)
    return pref * (w / w0) ** 3 * (1.0 / (w0 - w) + 1.0 / (w0 + w)) ** 2 * tweezer.peak_intensity


def mf_reduction_factor(F: float, mF: float, q: int = 0, J: float = 1.0, J_up: float = 1.0,
                        nuclear_spin: float = 0.5) -> float:
    """Fraction of the unresolved scattering rate seen by ``|F, mF>`` for polarization ``q``."""
    total = 0.0
    for Fu in _f_values(J_up, nuclear_spin):
        mu = mF + q
        if abs(mu) > Fu:
            continue
        w3 = wigner3j(Fu, 1, F, mu, -q, -mF)
        w6 = wigner6j(J_up, Fu, nuclear_spin, F, J, 1)
        total += (2 * F + 1) * (2 * Fu + 1) * (w3 * w6) ** 2
    return 3.0 * total


def _f_values(J: float, I: float) -> list[float]:
    lo = abs(J - I)
    return [lo + k for k in range(int(round(J + I - lo)) + 1)]


def loss_fraction(data: AtomicData | None = None) -> float:
    """Branching of 3S1 into the untrapped or dark 3P2 and 3P0 levels."""
    data = data or load_atomic_data()
    b = {ln.lower.label: ln.branching_ratio for ln in data.decay_channels("3S1")}
    return b["3P0"] + b["3P2"]


@dataclass(frozen=True)
class LossResult:
    loss_rate: float
    lifetime: float
    excited_fraction: float
    excitation_rate: float


def offresonant_loss(tweezer: TweezerConfig, initial_mF: float, probe: ProbeConfig,
                     survival_model: SurvivalModel | str = SurvivalModel.PESSIMISTIC,
                     data: AtomicData | None = None) -> LossResult:
    """Loss rate and lifetime from probe-then-tweezer excitation to 3S1.

    ``initial_mF`` selects the 3P1 F=3/2 imaging state (-3/2 driven by the
    sigma-minus share of the probe, -1/2 by the pi share). The probe sets the
    3P1 population; the pi-polarized tweezer drives 3P1 -> 3S1.
    """
    data = data or load_atomic_data()
    model = SurvivalModel(survival_model)
    # only the polarization component addressing the imaging state populates it
    s_drive = probe.s_sigma_minus if abs(initial_mF) == 1.5 else probe.s_pi
    p_exc = excited_fraction(probe, data.line("1S0", "3P1"), intensity=s_drive)
    gamma_sc = tweezer_scattering_rate(tweezer, data)
    red = mf_reduction_factor(1.5, initial_mF)
    exc = p_exc * gamma_sc * red
    frac = 1.0 if model is SurvivalModel.PESSIMISTIC else loss_fraction(data)
    rate = exc * frac
    return LossResult(rate, math.inf if rate == 0 else 1.0 / rate, p_exc, exc)


def _decay_weights(J_up: float, F_up: float, m_up: float, J_lo: float, I: float) -> dict:
    """Normalized decay probabilities ``|F_up m_up> -> |F_lo m_lo>`` within a J_up -> J_lo line."""
    out = {}
    for F_lo in _f_values(J_lo, I):
        for k in range(int(round(2 * F_lo)) + 1):
            m_lo = -F_lo + k
            q = m_up - m_lo
            if abs(q) > 1:
                continue
            s = (2 * F_up + 1) * (2 * F_lo + 1) * (wigner6j(J_up, F_up, I, F_lo, J_lo, 1)
                                                   * wigner3j(F_lo, 1, F_up, m_lo, q, -m_up)) ** 2
            if s > 0:
                out[(F_lo, m_lo)] = s
    tot = sum(out.values())
    return {k: v / tot for k, v in out.items()}


def _excite_weights(J_lo: float, F_lo: float, m_lo: float, J_up: float, I: float, q: int) -> dict:
    out = {}
    for F_up in _f_values(J_up, I):
        m_up = m_lo + q
        if abs(m_up) > F_up:
            continue
        s = (2 * F_up + 1) * (2 * F_lo + 1) * (wigner6j(J_up, F_up, I, F_lo, J_lo, 1)
                                               * wigner3j(F_lo, 1, F_up, m_lo, q, -m_up)) ** 2
        if s > 0:
            out[(F_up, m_up)] = s
    tot = sum(out.values())
    return {k: v / tot for k, v in out.items()} if tot else {}


def depol_after_repump(initial_mF: float = -1.5, branching_to_3P1: float | None = None,
                       q: int = 0, data: AtomicData | None = None) -> float:
    """Probability that a 3S1 excitation from the imaging state flips the qubit.

    Follows ``3P1 |3/2, mF> -> 3S1 -> 3P1 -> 1S0`` with hyperfine-resolved
    Clebsch-Gordan weights and multiplies by the 3S1 -> 3P1 branching ratio.
    The qubit started in ``mF=-1/2`` of 1S0 (the state the probe couples to
    ``initial_mF``); a flip ends in ``mF=+1/2``.
    """
    I = 0.5
    if branching_to_3P1 is None:
        branching_to_3P1 = (data or load_atomic_data()).line("3P1", "3S1").branching_ratio
    start_ground = -0.5
    p_flip = 0.0
    for (Fs, ms), ps in _excite_weights(1, 1.5, initial_mF, 1, I, q).items():
        for (Fp, mp), pp in _decay_weights(1, Fs, ms, 1, I).items():
            for (Fg, mg), pg in _decay_weights(1, Fp, mp, 0, I).items():
                if mg != start_ground:
                    p_flip += ps * pp * pg
    return branching_to_3P1 * p_flip


def rate_table_csv(rows: Iterable[tuple[float, RateSet]]) -> str:
    """CSV with columns ``B, channel, rate``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["B", "channel", "rate"])
    for B, rs in rows:
        for name, val in rs.channels.items():
            w.writerow([repr(float(B)), name, repr(float(val))])
        for name in ("R00", "R01", "R10", "R11"):
            w.writerow([repr(float(B)), name, repr(float(getattr(rs, name)))])
    return buf.getvalue()
