"""Two-level qubit dynamics: Lindblad evolution, pulses, Zeno and coherence curves."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .constants import wavelength_to_omega
from .atomic.polarizability import PolarizationState, TweezerConfig, default_models
from .rates import FieldPoint, ProbeConfig, RateSet, make_field_point, raman_rabi, scattering_rates

MAX_STEPS = 10**9
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class StepUnderflowError(RuntimeError):
    """Raised when a fixed-step integration would need too many steps."""


@dataclass(frozen=True)
class QubitDensity:
    """Density matrix of the qubit in the ``{|0>, |1>}`` basis."""

    rho00: float
    rho11: float
    rho01: complex = 0.0

    def __post_init__(self) -> None:
        if abs(self.rho00 + self.rho11 - 1.0) > 1e-9:
            raise ValueError("populations must sum to 1")
        if abs(self.rho01) ** 2 > self.rho00 * self.rho11 + 1e-9:
            raise ValueError("coherence exceeds the positivity bound")

    @classmethod
    def ground(cls) -> "QubitDensity":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def excited(cls) -> "QubitDensity":
        return cls(0.0, 1.0, 0.0)

    @classmethod
    def plus(cls) -> "QubitDensity":
        return cls(0.5, 0.5, 0.5)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "QubitDensity":
        return cls(float(m[0, 0].real), float(m[1, 1].real), complex(m[0, 1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [np.conj(self.rho01), self.rho11]], dtype=complex)

    def purity(self) -> float:
        m = self.matrix()
        return float(np.trace(m @ m).real)


@dataclass(frozen=True)
class LindbladSpec:
    """Raman coupling, qubit splitting (rad/s) and incoherent scattering rates."""

    omega_raman: float
    delta01: float
    rates: RateSet

    def hamiltonian(self) -> np.ndarray:
        """``H/hbar = Omega/2 sx + delta01/2 sz``."""
        return 0.5 * self.omega_raman * SX + 0.5 * self.delta01 * SZ

    def collapse_operators(self) -> list[np.ndarray]:
        """``sqrt(R_ij) |j><i|`` so that ``R_ij`` moves population from i to j."""
        r = self.rates
        ops = []
        for rate, (i, j) in ((r.R00, (0, 0)), (r.R01, (0, 1)), (r.R10, (1, 0)), (r.R11, (1, 1))):
            op = np.zeros((2, 2), dtype=complex)
            op[j, i] = math.sqrt(rate)
            ops.append(op)
        return ops

    def generator(self) -> np.ndarray:
        """Liouvillian acting on row-major ``vec(rho)``."""
        h = self.hamiltonian()
        gen = -1j * (np.kron(h, I2) - np.kron(I2, h.T))
        for c in self.collapse_operators():
            cdc = c.conj().T @ c
            gen += np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, I2) + np.kron(I2, cdc.T))
        return gen

    def max_rate(self) -> float:
        return max(abs(self.omega_raman), abs(self.delta01), self.rates.total)


def evolve(spec: LindbladSpec, rho0: QubitDensity, t: float, steps_per_rate: int = 50) -> QubitDensity:
    """Fixed-step RK4 integration of the master equation.

    The generator is time independent, so ``n`` RK4 steps equal the ``n``-th
    power of the single-step propagator; this is evaluated by repeated
    squaring and is bit-for-bit deterministic.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho0
    rate = spec.max_rate()
    if rate == 0.0:
        return rho0
    h_max = 1.0 / (steps_per_rate * rate)
    n = math.ceil(t / h_max)
    if n > MAX_STEPS:
        raise StepUnderflowError(f"{n} RK4 steps required (limit {MAX_STEPS})")
    h = t / n
    a = spec.generator() * h
    a2 = a @ a
    step = np.eye(4) + a + a2 / 2 + a2 @ a / 6 + a2 @ a2 / 24
    prop = np.linalg.matrix_power(step, n)
    vec = prop @ rho0.matrix().reshape(4)
    m = vec.reshape(2, 2)
    m = 0.5 * (m + m.conj().T)
    m /= np.trace(m).real
    return QubitDensity.from_matrix(m)


def lindblad_spec(field_pt: FieldPoint, probe: ProbeConfig) -> LindbladSpec:
    return LindbladSpec(raman_rabi(field_pt, probe), field_pt.qubit_splitting_delta01,
                        scattering_rates(field_pt, probe))


@dataclass(frozen=True)
class DepolConditions:
    """Trap settings entering the field-dependent model.

    ``tweezer=None`` drops light shifts; ``polarization=None`` drops the mixing channel.
    """

    tweezer: TweezerConfig | None = None
    polarization: PolarizationState | None = None


TRAP_DEPTH_HZ = 12e6
TRAP_WAVELENGTH = 760.2e-9
TRAP_WAIST = 670e-9
TRAP_ELLIPTICITY_DEG = 1.0


def trap_tweezer(depth_hz: float = TRAP_DEPTH_HZ, wavelength: float = TRAP_WAVELENGTH,
                 waist: float = TRAP_WAIST) -> TweezerConfig:
    """Tweezer whose ground-state depth is ``depth_hz``."""
    alpha_g = default_models()["1S0"].set_at(wavelength_to_omega(wavelength)).alpha_scalar
    return TweezerConfig.from_trap_depth(depth_hz, wavelength, waist, alpha_g)


def reference_conditions(depth_hz: float = TRAP_DEPTH_HZ, ellipticity_deg: float = TRAP_ELLIPTICITY_DEG,
                     tilt_deg: float = 0.0) -> DepolConditions:
    """Trap light shifts plus state mixing from a slightly elliptical tweezer."""
    return DepolConditions(trap_tweezer(depth_hz),
                           PolarizationState(math.radians(ellipticity_deg), math.radians(tilt_deg)))


def depol_curve(B_grid: Sequence[float], probe: ProbeConfig, duration: float | None = None,
                conditions: DepolConditions | None = None) -> list[tuple[float, float]]:
    """Dark-state population after probing ``|0>`` for ``duration`` at each field."""
    grid = [float(b) for b in B_grid]
    if any(b <= 0 for b in grid):
        raise ValueError("fields must be positive")
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("field grid must be sorted ascending")
    t = probe.duration if duration is None else duration
    cond = conditions or DepolConditions()
    out = []
    for B in grid:
        fp = make_field_point(B, cond.tweezer, cond.polarization)
        rho = evolve(lindblad_spec(fp, probe), QubitDensity.ground(), t)
        out.append((B, rho.rho11))
    return out


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def curve_csv(rows: Iterable[tuple[float, float]], header: tuple[str, str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for a, b in rows:
        w.writerow([repr(float(a)), repr(float(b))])
    return buf.getvalue()


# -------------------------------------------------------------------- pulses


@dataclass(frozen=True)
class RotationPulse:
    """Rotation ``exp(-i L/2 (Omega0 (cos phi sx + sin phi sy) + delta sz))``."""

    omega0: float
    detuning: float = 0.0
    length: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("pulse length must be non-negative")

    @classmethod
    def resonant(cls, angle: float, omega0: float = 2 * math.pi * 110.0, phase: float = 0.0,
                 detuning: float = 0.0) -> "RotationPulse":
        """Pulse of nominal area ``angle`` at Rabi frequency ``omega0``."""
        if omega0 <= 0:
            raise ValueError("omega0 must be positive")
        return cls(omega0, detuning, abs(angle) / omega0, phase + (math.pi if angle < 0 else 0.0))

    @property
    def nominal_angle(self) -> float:
        return self.omega0 * self.length

    def unitary(self) -> np.ndarray:
        gen = self.omega0 * (math.cos(self.phase) * SX + math.sin(self.phase) * SY) + self.detuning * SZ
        return expm(-0.5j * self.length * gen)

    def transition_probability(self) -> float:
        """``|<1|U|0>|^2``, equal to ``eta_pi`` for a pi pulse."""
        return float(abs(self.unitary()[1, 0]) ** 2)

    def fidelity(self) -> float:
        """``|Omega0/Omega sin(Omega L / 2)|`` with the generalized Rabi frequency Omega."""
        om = math.hypot(self.omega0, self.detuning)
        if om == 0:
            return 0.0
        return abs(self.omega0 / om * math.sin(om * self.length / 2))


def apply_pulse(pulse: RotationPulse, rho: QubitDensity) -> QubitDensity:
    u = pulse.unitary()
    return QubitDensity.from_matrix(u @ rho.matrix() @ u.conj().T)


def detuning_for_fidelity(f_pi: float) -> float:
    """``delta/Omega0`` for which a pulse of length ``pi/Omega0`` has fidelity ``f_pi``."""
    from scipy.optimize import brentq

    if not 0.0 < f_pi <= 1.0:
        raise ValueError("fidelity must lie in (0, 1]")
    if f_pi == 1.0:
        return 0.0

    def g(x: float) -> float:
        r = math.sqrt(1 + x * x)
        return math.sin(math.pi * r / 2) / r - f_pi

    return brentq(g, 0.0, 1.0, xtol=1e-15)


# ---------------------------------------------------------------------- Zeno


@dataclass(frozen=True)
class ZenoPrediction:
    p_same: np.ndarray
    p_all_same_chain: float
    p_all_same_closed: float


def zeno_predictions(theta: float, N: int, p_depol: float) -> ZenoPrediction:
    """Measurement-rotation chain with per-step rotation ``theta``.

    Between consecutive readouts the outcome flips with probability
    ``q = p(1-s) + (1-p)s``, ``s = sin^2(theta/2)``. ``p_same[k]`` is the
    probability that readout ``k+1`` agrees with the first. The closed form
    uses ``theta_tot = theta (N-1)``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if not 0.0 <= p_depol <= 1.0:
        raise ValueError("p_depol must lie in [0, 1]")
    s = math.sin(theta / 2) ** 2
    q = p_depol * (1 - s) + (1 - p_depol) * s
    k = np.arange(N)
    p_same = 0.5 * (1.0 + (1.0 - 2.0 * q) ** k)
    chain = (1.0 - q) ** (N - 1)
    closed = p_all_same_closed_form(theta * (N - 1), N, p_depol)
    return ZenoPrediction(p_same, float(chain), closed)


def p_all_same_closed_form(theta_tot: float, N: int, p_depol: float) -> float:
    """``(1-p)^N cos^(2N-2)(theta_tot / (2N-2))``; for ``N = 1`` only the loss factor remains."""
    if N == 1:
        return (1.0 - p_depol)
    return (1.0 - p_depol) ** N * math.cos(theta_tot / (2 * N - 2)) ** (2 * N - 2)


# ----------------------------------------------------------------- coherence


@dataclass(frozen=True)
class CoherenceTimes:
    T1: float
    T2_star: float
    T2_echo: float

    def __post_init__(self) -> None:
        if min(self.T1, self.T2_star, self.T2_echo) <= 0:
            raise ValueError("coherence times must be positive")


@dataclass(frozen=True)
class CoherenceSchedule:
    """Hold times (s) for each curve and Ramsey phases (rad) for the fringes."""

    t1_times: np.ndarray
    ramsey_times: np.ndarray
    echo_times: np.ndarray
    phases: np.ndarray = np.linspace(0.0, 2 * math.pi, 9)


def t1_curve(t: np.ndarray, T1: float) -> np.ndarray:
    """Probability of two readouts agreeing after hold ``t``: ``(1 + exp(-t/T1))/2``."""
    return 0.5 * (1.0 + np.exp(-np.asarray(t) / T1))


def gaussian_contrast(t: np.ndarray, T: float) -> np.ndarray:
    return np.exp(-(np.asarray(t) / T) ** 2)


def ramsey_fringe(t: float, phase: np.ndarray, T2: float) -> np.ndarray:
    """P_same for a Ramsey pair with relative phase ``phase``."""
    return 0.5 * (1.0 + gaussian_contrast(t, T2) * np.cos(np.asarray(phase)))


def coherence_signals(times: CoherenceTimes, schedule: CoherenceSchedule) -> dict[str, np.ndarray]:
    """Noise-free model curves for T1, Ramsey contrast/fringes and echo contrast."""
    rt = np.asarray(schedule.ramsey_times, dtype=float)
    return {
        "t1": t1_curve(schedule.t1_times, times.T1),
        "ramsey_contrast": gaussian_contrast(rt, times.T2_star),
        "ramsey_fringes": np.array([ramsey_fringe(t, schedule.phases, times.T2_star) for t in rt]),
        "echo_contrast": gaussian_contrast(schedule.echo_times, times.T2_echo),
    }


def quasi_static_sigma(T2_star: float) -> float:
    """RMS detuning (rad/s) of Gaussian quasi-static noise giving 1/e contrast at ``T2_star``."""
    return math.sqrt(2.0) / T2_star
