"""Shot-by-shot execution of measurement circuits.

A shot carries a pure qubit state (two complex amplitudes) and a presence
flag. Readouts project the state, draw a Gaussian photon count, and then apply
survival and post-readout bit flips. Bits are 1 for bright (``|0>``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Sequence, Union

import numpy as np

from .analysis.mixture import MixtureFit, optimal_threshold
from .dynamics import RotationPulse, detuning_for_fidelity
from .rng import make_generator

DEFAULT_OMEGA0 = 2 * math.pi * 110.0
READOUT_DURATION = 12e-3
FEEDFORWARD_LATENCY = 70e-3


# ------------------------------------------------------------------ blocks


@dataclass(frozen=True)
class QubitReadout:
    """State-selective readout: bright iff the atom is present in ``|0>``."""


@dataclass(frozen=True)
class AtomReadout:
    """State-insensitive readout (pump to ``|0>``, then a qubit readout)."""


@dataclass(frozen=True)
class OpticalPump:
    """Prepare ``|0>`` with the model's pumping efficiency (``|1>`` otherwise)."""


@dataclass(frozen=True)
class Rotate:
    pulse: RotationPulse


@dataclass(frozen=True)
class Hold:
    duration: float

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError("hold duration must be non-negative")


@dataclass(frozen=True)
class Conditional:
    """Apply ``action`` depending on classified bits of earlier readouts.

    XOR fires when the bits differ; XNOR when they agree.
    """

    logic: Literal["XOR", "XNOR"]
    sources: tuple[int, ...]
    action: RotationPulse

    def __post_init__(self) -> None:
        if self.logic not in ("XOR", "XNOR"):
            raise ValueError("logic must be XOR or XNOR")
        if len(self.sources) < 1:
            raise ValueError("conditional needs at least one source readout")


Block = Union[QubitReadout, AtomReadout, OpticalPump, Rotate, Hold, Conditional]
InitialState = Literal["0", "1", "+", "mixed"]
READOUT_KINDS = (QubitReadout, AtomReadout)


class CircuitError(ValueError):
    """Malformed circuit."""


@dataclass(frozen=True)
class Circuit:
    blocks: tuple[Block, ...]
    initial_state: InitialState = "mixed"
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.initial_state not in ("0", "1", "+", "mixed"):
            raise CircuitError(f"unknown initial state {self.initial_state!r}")
        n_read = 0
        for i, b in enumerate(self.blocks):
            if not isinstance(b, (QubitReadout, AtomReadout, OpticalPump, Rotate, Hold, Conditional)):
                raise CircuitError(f"block {i} has unsupported type {type(b).__name__}")
            if isinstance(b, Conditional) and any(s < 0 or s >= n_read for s in b.sources):
                raise CircuitError(f"conditional at block {i} references a readout that has not happened")
            if isinstance(b, READOUT_KINDS):
                n_read += 1
        if n_read == 0:
            raise CircuitError("circuit needs at least one readout")

    @property
    def n_readouts(self) -> int:
        return sum(isinstance(b, READOUT_KINDS) for b in self.blocks)

    def readout_kinds(self) -> list[str]:
        return ["atom" if isinstance(b, AtomReadout) else "qubit" for b in self.blocks if isinstance(b, READOUT_KINDS)]


# ------------------------------------------------------------------- model


@dataclass(frozen=True)
class Dephasing:
    """Detuning noise reproducing Gaussian Ramsey and echo decays.

    A per-shot static detuning and an independent per-hold detuning are drawn.
    Echo cancels the static part, so ``T2_echo`` sets the per-hold spread and
    the static part makes up the rest of ``T2_star``.
    """

    T2_star: float
    T2_echo: float

    def __post_init__(self) -> None:
        if self.T2_star <= 0 or self.T2_echo <= 0:
            raise ValueError("coherence times must be positive")
        if self.T2_echo < math.sqrt(2.0) * self.T2_star - 1e-15:
            raise ValueError("T2_echo must be at least sqrt(2) T2_star for this noise model")

    @property
    def sigma_hold(self) -> float:
        return 2.0 / self.T2_echo

    @property
    def sigma_static(self) -> float:
        return math.sqrt(max(2.0 / self.T2_star**2 - self.sigma_hold**2, 0.0))


@dataclass(frozen=True)
class ReadoutErrorModel:
    """Phenomenological error parameters shared by all readouts.

    ``pulse_detuning_ratio`` is the static ``delta/Omega0`` of every rotation;
    :meth:`with_pi_fidelity` sets it from a target pi-pulse fidelity.
    Hold-time processes (loss lifetime, T1, dephasing) are off when ``None``.
    """

    loading_p: float = 1.0
    eta_op: float = 1.0
    eta_surv_B: float = 1.0
    eta_surv_D: float = 1.0
    p_depol_DB: float = 0.0
    p_depol_BD: float = 0.0
    pulse_detuning_ratio: float = 0.0
    mu0: float = 1.0
    sigma0: float = 2.0
    mu1: float = 37.0
    sigma1: float = 16.0
    feedforward_latency: float = FEEDFORWARD_LATENCY
    readout_duration: float = READOUT_DURATION
    threshold: float | None = None
    hold_loss_lifetime: float | None = None
    T1: float | None = None
    dephasing: Dephasing | None = None
    excited_minus_half: bool = False

    def __post_init__(self) -> None:
        for name in ("loading_p", "eta_op", "eta_surv_B", "eta_surv_D", "p_depol_DB", "p_depol_BD"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ValueError("count widths must be positive")
        if self.feedforward_latency < 0 or self.readout_duration < 0:
            raise ValueError("durations must be non-negative")
        for name in ("hold_loss_lifetime", "T1"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    def mixture(self) -> MixtureFit:
        p = min(max(self.loading_p, 1e-6), 1 - 1e-6)
        return MixtureFit(1 - p, p, self.mu0, self.sigma0, self.mu1, self.sigma1)

    def classification_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return optimal_threshold(self.mixture()).theta

    def with_pi_fidelity(self, f_pi: float) -> "ReadoutErrorModel":
        return replace(self, pulse_detuning_ratio=detuning_for_fidelity(f_pi))

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def ideal(cls, **kw) -> "ReadoutErrorModel":
        """Noise-free model with fully separated count distributions."""
        base = dict(mu0=0.0, sigma0=1.0, mu1=100.0, sigma1=1.0, threshold=50.0)
        base.update(kw)
        return cls(**base)


# Array-averaged parameters used as simulation truth for the readout studies.
REFERENCE_TRUTH = dict(loading_p=0.68, eta_op=0.972, eta_surv_B=0.966, eta_surv_D=0.996,
                     p_depol_DB=0.012, p_depol_BD=0.012)
REFERENCE_PI_FIDELITY = 0.997
# Bright width that reproduces the quoted component fidelities (0.997 / 0.991);
# the quoted 16-photon width is inconsistent with them.
REFERENCE_SIGMA1 = 12.883


def reference_model(sigma1: float = REFERENCE_SIGMA1, **kw) -> ReadoutErrorModel:
    params = dict(REFERENCE_TRUTH)
    params.update(kw)
    return ReadoutErrorModel(mu0=1.0, sigma0=2.0, mu1=37.0, sigma1=sigma1, **params).with_pi_fidelity(
        REFERENCE_PI_FIDELITY)


@lru_cache(maxsize=4096)
def _unitary(p: RotationPulse) -> np.ndarray:
    return p.unitary()


# ------------------------------------------------------------------ records


@dataclass(frozen=True)
class TruthEvent:
    block: int
    kind: str
    state_before: int  # 0, 1, or -1 when no atom
    state_after: int
    lost: bool = False
    flipped: bool = False
    pulse_applied: bool = False


@dataclass(frozen=True)
class ShotRecord:
    counts: tuple[float, ...]
    truth: tuple[TruthEvent, ...]
    classical_bits: tuple[int, ...]
    loaded: bool
    readout_states: tuple[int, ...]
    elapsed: float

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.classical_bits) or len(self.counts) != len(self.readout_states):
            raise ValueError("one count, bit and hidden state per readout")


class _Shot:
    __slots__ = ("amp", "present", "rng", "model", "theta", "counts", "bits", "truth", "states",
                 "elapsed", "static_detuning")

    def __init__(self, model: ReadoutErrorModel, theta: float, rng: np.random.Generator):
        self.model = model
        self.theta = theta
        self.rng = rng
        self.amp = np.array([1.0 + 0j, 0.0 + 0j])
        self.present = True
        self.counts: list[float] = []
        self.bits: list[int] = []
        self.truth: list[TruthEvent] = []
        self.states: list[int] = []
        self.elapsed = 0.0
        self.static_detuning = 0.0

    def basis_state(self) -> int:
        """Current basis label, projecting if in superposition (used only for truth labels)."""
        if not self.present:
            return -1
        p0 = abs(self.amp[0]) ** 2
        return 0 if p0 >= 0.5 else 1

    def set_basis(self, s: int) -> None:
        self.amp = np.array([1.0 + 0j, 0j]) if s == 0 else np.array([0j, 1.0 + 0j])

    def project(self) -> int:
        p0 = float(abs(self.amp[0]) ** 2)
        s = 0 if self.rng.random() < p0 else 1
        self.set_basis(s)
        return s

    def pump(self) -> None:
        # eta_op is the probability of ending in |0>, whatever the prior state
        if self.present:
            self.set_basis(0 if self.rng.random() < self.model.eta_op else 1)

    def readout(self, i: int, kind: str) -> None:
        m = self.model
        before = self.basis_state()
        if kind == "atom" and not m.excited_minus_half:
            self.pump()
        bright = False
        state = -1
        if self.present:
            state = self.project()
            bright = state == 0 or (kind == "atom" and m.excited_minus_half)
        self.states.append(state)
        c = self.rng.normal(m.mu1, m.sigma1) if bright else self.rng.normal(m.mu0, m.sigma0)
        self.counts.append(float(c))
        self.bits.append(1 if c >= self.theta else 0)
        lost = flipped = False
        if self.present:
            surv = m.eta_surv_B if bright else m.eta_surv_D
            if self.rng.random() >= surv:
                self.present = False
                lost = True
            else:
                p_flip = m.p_depol_BD if state == 0 else m.p_depol_DB
                if self.rng.random() < p_flip:
                    self.set_basis(1 - state)
                    flipped = True
        self.elapsed += m.readout_duration
        self.truth.append(TruthEvent(i, f"{kind}_readout", before, self.basis_state(), lost, flipped))

    def rotate(self, i: int, pulse: RotationPulse) -> None:
        before = self.basis_state()
        if self.present:
            actual = replace(pulse, detuning=pulse.detuning + self.model.pulse_detuning_ratio * pulse.omega0)
            self.amp = _unitary(actual) @ self.amp
        self.elapsed += pulse.length
        self.truth.append(TruthEvent(i, "rotate", before, self.basis_state(), pulse_applied=self.present))

    def hold(self, i: int, t: float, kind: str = "hold") -> None:
        m = self.model
        before = self.basis_state()
        lost = flipped = False
        if self.present and t > 0:
            if m.hold_loss_lifetime is not None and self.rng.random() >= math.exp(-t / m.hold_loss_lifetime):
                self.present = False
                lost = True
            if self.present and m.dephasing is not None:
                det = self.static_detuning + self.rng.normal(0.0, m.dephasing.sigma_hold)
                phi = det * t
                self.amp = self.amp * np.array([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
            if self.present and m.T1 is not None and self.rng.random() < 0.5 * (1 - math.exp(-t / m.T1)):
                self.amp = self.amp[::-1].copy()
                flipped = True
        self.elapsed += t
        self.truth.append(TruthEvent(i, kind, before, self.basis_state(), lost, flipped))


def feedforward_controller(logic: str, bits: Sequence[int | None]) -> bool:
    """Decide whether the conditional pulse fires.

    XOR fires iff the bits are not all equal; XNOR iff they are all equal.
    """
    if any(b is None for b in bits):
        raise ValueError("feedforward bit is unresolved")
    vals = [int(b) for b in bits]
    differ = len(set(vals)) > 1
    if logic == "XOR":
        return differ
    if logic == "XNOR":
        return not differ
    raise ValueError(f"unknown logic {logic!r}")


def simulate_shot(circuit: Circuit, model: ReadoutErrorModel, seed: int, shot_index: int | None = None,
                  theta: float | None = None) -> ShotRecord:
    """Run one shot. ``(seed, shot_index)`` key the random stream."""
    rng = make_generator(seed) if shot_index is None else make_generator(seed, shot_index)
    th = model.classification_threshold() if theta is None else theta
    shot = _Shot(model, th, rng)
    loaded = rng.random() < model.loading_p
    shot.present = loaded
    init = circuit.initial_state
    if init == "mixed":
        shot.set_basis(0 if rng.random() < 0.5 else 1)
    elif init == "1":
        shot.set_basis(1)
    elif init == "+":
        shot.amp = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    if model.dephasing is not None:
        shot.static_detuning = rng.normal(0.0, model.dephasing.sigma_static)
    n_read = 0
    for i, b in enumerate(circuit.blocks):
        if isinstance(b, QubitReadout):
            shot.readout(i, "qubit")
            n_read += 1
        elif isinstance(b, AtomReadout):
            shot.readout(i, "atom")
            n_read += 1
        elif isinstance(b, OpticalPump):
            before = shot.basis_state()
            shot.pump()
            shot.truth.append(TruthEvent(i, "pump", before, shot.basis_state()))
        elif isinstance(b, Rotate):
            shot.rotate(i, b.pulse)
        elif isinstance(b, Hold):
            shot.hold(i, b.duration)
        elif isinstance(b, Conditional):
            shot.hold(i, model.feedforward_latency, kind="latency")
            if feedforward_controller(b.logic, [shot.bits[s] for s in b.sources]):
                shot.rotate(i, b.action)
    return ShotRecord(tuple(shot.counts), tuple(shot.truth), tuple(shot.bits), bool(loaded),
                      tuple(shot.states), shot.elapsed)


# ----------------------------------------------------------------- datasets


@dataclass
class Dataset:
    """Counts and hidden labels for an ensemble of shots."""

    circuit: Circuit
    model: ReadoutErrorModel
    root_seed: int
    counts: np.ndarray            # (shots, readouts)
    states: np.ndarray            # hidden state per readout: 0, 1, -1
    loaded: np.ndarray
    elapsed: np.ndarray
    records: list[ShotRecord] = field(default_factory=list, repr=False)

    @property
    def n_shots(self) -> int:
        return self.counts.shape[0]

    def bits(self, thresholds: float | Sequence[float] | None = None) -> np.ndarray:
        """Bright (1) / dark (0) classification per readout."""
        if thresholds is None:
            thresholds = self.model.classification_threshold()
        th = np.broadcast_to(np.asarray(thresholds, dtype=float), (self.counts.shape[1],))
        return (self.counts >= th[None, :]).astype(np.int8)

    def to_csv(self, truth_columns: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        k = self.counts.shape[1]
        header = ["shot"] + [f"count_{j}" for j in range(k)]
        if truth_columns:
            header += ["loaded"] + [f"state_{j}" for j in range(k)]
        w.writerow(header)
        for i in range(self.n_shots):
            row = [i] + [repr(float(c)) for c in self.counts[i]]
            if truth_columns:
                row += [int(self.loaded[i])] + [int(s) for s in self.states[i]]
            w.writerow(row)
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "circuit": circuit_to_dict(self.circuit),
            "model": _jsonable(self.model.to_dict()),
            "root_seed": int(self.root_seed),
            "n_shots": int(self.n_shots),
            "threshold": self.model.classification_threshold(),
        }

    @classmethod
    def from_csv(cls, text: str, circuit: Circuit, model: ReadoutErrorModel, root_seed: int = 0) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        cidx = [i for i, h in enumerate(header) if h.startswith("count_")]
        counts = np.array([[float(r[i]) for i in cidx] for r in body])
        sidx = [i for i, h in enumerate(header) if h.startswith("state_")]
        states = np.array([[int(r[i]) for i in sidx] for r in body]) if sidx else np.full(counts.shape, -2)
        lidx = header.index("loaded") if "loaded" in header else None
        loaded = np.array([bool(int(r[lidx])) for r in body]) if lidx is not None else np.ones(len(body), bool)
        return cls(circuit, model, root_seed, counts, states, loaded, np.zeros(len(body)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _run_chunk(args) -> list[ShotRecord]:
    circuit, model, seed, lo, hi, theta = args
    return [simulate_shot(circuit, model, seed, i, theta) for i in range(lo, hi)]


def simulate_ensemble(circuit: Circuit, model: ReadoutErrorModel, n_shots: int, root_seed: int,
                      workers: int = 1, keep_records: bool = False) -> Dataset:
    """Independent shots keyed by ``(root_seed, shot_index)``; content is independent of ``workers``."""
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    theta = model.classification_threshold()
    if workers <= 1 or n_shots < 2000:
        records = _run_chunk((circuit, model, root_seed, 0, n_shots, theta))
    else:
        edges = np.linspace(0, n_shots, workers * 4 + 1).astype(int)
        jobs = [(circuit, model, root_seed, int(a), int(b), theta) for a, b in zip(edges, edges[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = [r for chunk in ex.map(_run_chunk, jobs) for r in chunk]
    counts = np.array([r.counts for r in records], dtype=float)
    states = np.array([r.readout_states for r in records], dtype=np.int8)
    loaded = np.array([r.loaded for r in records], dtype=bool)
    elapsed = np.array([r.elapsed for r in records])
    return Dataset(circuit, model, root_seed, counts, states, loaded, elapsed,
                   records if keep_records else [])


# ---------------------------------------------------------- circuit builders


def pulse(angle: float, phase: float = 0.0, omega0: float = DEFAULT_OMEGA0) -> RotationPulse:
    return RotationPulse.resonant(angle, omega0, phase)


def basis_rotations(basis: str) -> tuple[RotationPulse | None, RotationPulse | None]:
    """Pre- and post-rotation that map ``basis`` onto the bright direction ``+Z``."""
    half = math.pi / 2
    table = {
        "+Z": (None, None),
        "-Z": (pulse(math.pi), pulse(-math.pi)),
        "+X": (pulse(-half, math.pi / 2), pulse(half, math.pi / 2)),
        "-X": (pulse(half, math.pi / 2), pulse(-half, math.pi / 2)),
    }
    if basis not in table:
        raise ValueError(f"unknown basis {basis!r}")
    return table[basis]


def variable_basis_sequence(bases: Sequence[str], initial_state: InitialState = "+",
                            final_atom_readout: bool = True) -> Circuit:
    """One (pre-rotation, qubit readout, post-rotation) triple per basis."""
    if not bases:
        raise ValueError("basis list must not be empty")
    blocks: list[Block] = []
    for b in bases:
        pre, post = basis_rotations(b)
        if pre is not None:
            blocks.append(Rotate(pre))
        blocks.append(QubitReadout())
        if post is not None:
            blocks.append(Rotate(post))
    if final_atom_readout:
        blocks.append(AtomReadout())
    return Circuit(tuple(blocks), initial_state, name="basis-" + "".join(bases))


def depolarization_circuit() -> Circuit:
    """Two qubit readouts then an atom readout, starting from the as-loaded mixture."""
    return Circuit((QubitReadout(), QubitReadout(), AtomReadout()), "mixed", name="depolarization")


def pi_pulse_circuit(omega0: float = DEFAULT_OMEGA0) -> Circuit:
    """Pump, pi/2, readout 0, pi, readout 1, atom readout 2."""
    return Circuit((OpticalPump(), Rotate(pulse(math.pi / 2, omega0=omega0)), QubitReadout(),
                    Rotate(pulse(math.pi, omega0=omega0)), QubitReadout(), AtomReadout()), "mixed",
                   name="pi-pulse")


def survival_circuit() -> Circuit:
    """Two back-to-back atom readouts."""
    return Circuit((AtomReadout(), AtomReadout()), "mixed", name="survival")


def single_readout_circuit() -> Circuit:
    """Pump then one qubit readout, as used for count histograms."""
    return Circuit((OpticalPump(), QubitReadout()), "mixed", name="single-readout")


def three_readout_fidelity_circuit() -> Circuit:
    """Atom readout first, then two qubit readouts, from the as-loaded mixture."""
    return Circuit((AtomReadout(), QubitReadout(), QubitReadout()), "mixed", name="three-readout")


def dark_lifetime_circuit(hold: float, omega0: float = DEFAULT_OMEGA0) -> Circuit:
    """Atom readout, pi/2, qubit readout, hold under probe, atom readout."""
    return Circuit((AtomReadout(), Rotate(pulse(math.pi / 2, omega0=omega0)), QubitReadout(), Hold(hold),
                    AtomReadout()), "mixed", name=f"dark-lifetime-{hold:g}")


def zeno_circuit(theta: float, N: int, omega0: float = DEFAULT_OMEGA0) -> Circuit:
    """``|+>``, readout, then ``N-1`` times (rotation ``theta``, readout), atom readout."""
    if N < 1:
        raise ValueError("N must be at least 1")
    blocks: list[Block] = [QubitReadout()]
    for _ in range(N - 1):
        if theta != 0.0:
            blocks.append(Rotate(pulse(theta, omega0=omega0)))
        blocks.append(QubitReadout())
    blocks.append(AtomReadout())
    return Circuit(tuple(blocks), "+", name=f"zeno-{N}")


def feedforward_circuit(policy: Sequence[str], omega0: float = DEFAULT_OMEGA0) -> Circuit:
    """``|+>``, readout, then per loop: pi/2, readout, conditional pi, readout; atom readout last."""
    blocks: list[Block] = [QubitReadout()]
    n = 1
    for logic in policy:
        blocks += [Rotate(pulse(math.pi / 2, omega0=omega0)), QubitReadout()]
        blocks.append(Conditional(logic, (0, n), pulse(math.pi, omega0=omega0)))
        blocks.append(QubitReadout())
        n += 2
    blocks.append(AtomReadout())
    return Circuit(tuple(blocks), "+", name="feedforward-" + "-".join(policy))


def t1_circuit(hold: float) -> Circuit:
    return Circuit((OpticalPump(), QubitReadout(), Hold(hold), QubitReadout(), AtomReadout()), "mixed",
                   name=f"t1-{hold:g}")


def ramsey_circuit(hold: float, phase: float, echo: bool = False, omega0: float = DEFAULT_OMEGA0) -> Circuit:
    """Pump, readout, pi/2, hold (split by a pi pulse for echo), phased pi/2, readout, atom readout."""
    mid: list[Block]
    if echo:
        mid = [Hold(hold / 2), Rotate(pulse(math.pi, omega0=omega0)), Hold(hold / 2)]
    else:
        mid = [Hold(hold)]
    blocks = [OpticalPump(), QubitReadout(), Rotate(pulse(math.pi / 2, omega0=omega0)), *mid,
              Rotate(pulse(math.pi / 2, phase, omega0=omega0)), QubitReadout(), AtomReadout()]
    return Circuit(tuple(blocks), "mixed", name=f"{'echo' if echo else 'ramsey'}-{hold:g}-{phase:g}")


# ----------------------------------------------------------- serialization


def _pulse_dict(p: RotationPulse) -> dict:
    return {"omega0": p.omega0, "detuning": p.detuning, "length": p.length, "phase": p.phase}


def circuit_to_dict(c: Circuit) -> dict:
    blocks = []
    for b in c.blocks:
        if isinstance(b, QubitReadout):
            blocks.append({"kind": "QubitReadout"})
        elif isinstance(b, AtomReadout):
            blocks.append({"kind": "AtomReadout"})
        elif isinstance(b, OpticalPump):
            blocks.append({"kind": "OpticalPump"})
        elif isinstance(b, Rotate):
            blocks.append({"kind": "Rotate", "pulse": _pulse_dict(b.pulse)})
        elif isinstance(b, Hold):
            blocks.append({"kind": "Hold", "duration": b.duration})
        elif isinstance(b, Conditional):
            blocks.append({"kind": "Conditional", "logic": b.logic, "sources": list(b.sources),
                           "action": _pulse_dict(b.action)})
    return {"name": c.name, "initial_state": c.initial_state, "blocks": blocks}


def circuit_from_dict(d: dict) -> Circuit:
    """Inverse of :func:`circuit_to_dict`; rotations may also be given as ``angle``/``phase``."""
    def mk_pulse(p: dict) -> RotationPulse:
        if "angle" in p:
            return pulse(float(p["angle"]), float(p.get("phase", 0.0)), float(p.get("omega0", DEFAULT_OMEGA0)))
        return RotationPulse(float(p["omega0"]), float(p.get("detuning", 0.0)), float(p["length"]),
                             float(p.get("phase", 0.0)))

    blocks: list[Block] = []
    for b in d["blocks"]:
        k = b["kind"]
        if k == "QubitReadout":
            blocks.append(QubitReadout())
        elif k == "AtomReadout":
            blocks.append(AtomReadout())
        elif k == "OpticalPump":
            blocks.append(OpticalPump())
        elif k == "Rotate":
            blocks.append(Rotate(mk_pulse(b["pulse"])))
        elif k == "Hold":
            blocks.append(Hold(float(b["duration"])))
        elif k == "Conditional":
            blocks.append(Conditional(b["logic"], tuple(int(s) for s in b["sources"]), mk_pulse(b["action"])))
        else:
            raise CircuitError(f"unknown block kind {k!r}")
    return Circuit(tuple(blocks), d.get("initial_state", "mixed"), d.get("name", ""))


def metadata_json(ds: Dataset) -> str:
    return json.dumps(ds.metadata(), indent=2, sort_keys=True)
