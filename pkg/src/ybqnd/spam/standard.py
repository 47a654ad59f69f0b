"""Standard sequences, their estimators and the combined correction system."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..analysis import estimators as est
from ..analysis.estimators import BootstrapConfig, OutcomeTable
from ..analysis.mixture import fidelity_at, fit_mixture
from ..circuits import (AtomReadout, Circuit, Dataset, QubitReadout, Rotate, depolarization_circuit,
                        pi_pulse_circuit, pulse, survival_circuit)
from ..rng import make_generator
from .graph import PARAMETERS, MeanModel, build_graph, path_model
from .solve import CorrectionResult, Measurement, MeasurementSystem, corner_uncertainty, solve, with_uncertainties


def dark_survival_circuit() -> Circuit:
    """Atom readout, pi/2, qubit readout, atom readout (zero hold)."""
    import math
    return Circuit((AtomReadout(), Rotate(pulse(math.pi / 2)), QubitReadout(), AtomReadout()), "mixed",
                   name="dark-survival")


@dataclass(frozen=True)
class StandardQuantity:
    name: str
    sequence: str
    estimator: Callable[[OutcomeTable], float]
    target: dict
    given: dict
    mirror: tuple[dict, dict] | None = None  # second conditional for state-averaged quantities


SEQUENCES: dict[str, Callable[[], Circuit]] = {
    "survival": survival_circuit,
    "depolarization": depolarization_circuit,
    "pi_pulse": pi_pulse_circuit,
    "dark_survival": dark_survival_circuit,
}

QUANTITIES: tuple[StandardQuantity, ...] = (
    StandardQuantity("fill_fraction", "survival", est.fill_fraction, {0: "B"}, {}),
    StandardQuantity("survival_bright", "survival", est.survival_bright, {1: "B"}, {0: "B"}),
    StandardQuantity("pump_efficiency", "survival", est.pump_efficiency, {0: "B"}, {1: "B"}),
    StandardQuantity("depol_DB", "depolarization", est.depol_dark_to_bright, {1: "B"}, {0: "D", 2: "B"}),
    StandardQuantity("depol_BD", "depolarization", est.depol_bright_to_dark, {1: "D"}, {0: "B", 2: "B"}),
    StandardQuantity("pi_transfer", "pi_pulse", est.pi_transfer, {1: "B"}, {0: "D", 2: "B"},
                     mirror=({1: "D"}, {0: "B", 2: "B"})),
    StandardQuantity("dark_survival", "dark_survival", est.dark_survival, {2: "B"}, {0: "B", 1: "D"}),
)

# raw estimate that each unknown is closest to; used as the starting guess
GUESS_FROM = {"p": "fill_fraction", "eta_op": "pump_efficiency", "eta_B": "survival_bright",
              "eta_D": "dark_survival", "depol_DB": "depol_DB", "depol_BD": "depol_BD", "eta_pi": "pi_transfer"}


def standard_models() -> dict[str, object]:
    graphs = {name: build_graph(make()) for name, make in SEQUENCES.items()}
    out = {}
    for q in QUANTITIES:
        g = graphs[q.sequence]
        m = path_model(g, q.target, q.given)
        if q.mirror is not None:
            m = MeanModel((m, path_model(g, *q.mirror)))
        out[q.name] = m
    return out


def build_system(measured: Mapping[str, tuple[float, float]], F0: float, F1: float,
                 fixed: Mapping[str, float] | None = None) -> MeasurementSystem:
    """System over the standard unknowns; ``measured`` maps quantity to (value, sigma).

    Unknowns listed in ``fixed`` are held at the given values and the
    quantity that mainly constrains each of them (``GUESS_FROM``) is dropped.
    """
    fixed = dict(fixed or {})
    drop = {GUESS_FROM[k] for k in fixed}
    models = standard_models()
    ms = tuple(Measurement(q.name, models[q.name], *measured[q.name]) for q in QUANTITIES if q.name not in drop)
    free = tuple(k for k in PARAMETERS if k not in fixed)
    return MeasurementSystem(ms, free, {"F0": F0, "F1": F1, **fixed})


def initial_guess(measured: Mapping[str, tuple[float, float]]) -> dict[str, float]:
    return {k: float(np.clip(measured[v][0], 1e-3, 1 - 1e-3)) for k, v in GUESS_FROM.items() if v in measured}


# Array-averaged raw inputs: the dark survival comes from a lifetime measurement and
# enters as a fixed value; the pulse input is the raw fidelity squared.
REFERENCE_RAW = {
    "fill_fraction": (0.67, 0.04),
    "survival_bright": (0.960, 0.009),
    "pump_efficiency": (0.972, 0.009),
    "depol_DB": (0.025, 0.002),
    "depol_BD": (0.025, 0.002),
    "pi_transfer": (0.984**2, 2 * 0.984 * 0.008),
}
REFERENCE_FIXED = {"F0": 0.997, "F1": 0.991, "eta_D": 0.9960}


def reference_correction(corners: bool = True) -> CorrectionResult:
    """Correct the array-averaged raw inputs."""
    fx = dict(REFERENCE_FIXED)
    F0, F1 = fx.pop("F0"), fx.pop("F1")
    system = build_system(REFERENCE_RAW, F0, F1, fixed=fx)
    res = solve(system, initial_guess(REFERENCE_RAW))
    if corners:
        res = with_uncertainties(res, corner_uncertainty(system, res))
    return res


# ------------------------------------------------------------- from data


@dataclass(frozen=True)
class StandardData:
    """Classified tables of the four standard sequences plus the fixed fidelities."""

    tables: dict[str, OutcomeTable]
    F0: float
    F1: float
    theta: float
    calibration_counts: np.ndarray | None = None  # survival readout-0 counts behind F0, F1

    @classmethod
    def from_datasets(cls, datasets: Mapping[str, Dataset], theta: float | None = None) -> "StandardData":
        """Fit the first survival readout to get the threshold and the fixed F0, F1."""
        fit = fit_mixture(datasets["survival"].counts[:, 0])
        th = datasets["survival"].model.classification_threshold() if theta is None else theta
        rep = fidelity_at(fit, th)
        tables = {k: OutcomeTable.from_counts(d.counts, th) for k, d in datasets.items()}
        return cls(tables, rep.F0, rep.F1, th, np.asarray(datasets["survival"].counts[:, 0], dtype=float))

    def raw(self, tables: Mapping[str, OutcomeTable] | None = None) -> dict[str, float]:
        t = self.tables if tables is None else tables
        return {q.name: q.estimator(t[q.sequence]) for q in QUANTITIES}


def raw_with_errors(data: StandardData) -> dict[str, tuple[float, float]]:
    """Raw estimates with binomial errors on the conditioning-set sizes."""
    out = {}
    for q in QUANTITIES:
        t = data.tables[q.sequence]
        v = q.estimator(t)
        conds = [q.given] + ([q.mirror[1]] if q.mirror else [])
        n = sum(int(est._event(t, c).sum()) for c in conds) / len(conds)
        n_eff = n * len(conds)
        out[q.name] = (v, est.binomial_std(v, int(n_eff)))
    return out


def correct(data: StandardData, sigmas: Mapping[str, float] | None = None, corners: bool = True) -> CorrectionResult:
    raw = data.raw()
    sig = sigmas or {k: s for k, (_, s) in raw_with_errors(data).items()}
    measured = {k: (v, sig[k]) for k, v in raw.items()}
    system = build_system(measured, data.F0, data.F1)
    res = solve(system, initial_guess(measured))
    if corners:
        res = with_uncertainties(res, corner_uncertainty(system, res))
    return res


@dataclass(frozen=True)
class BootstrapCorrection:
    raw: dict[str, float]
    raw_std: dict[str, float]
    corrected: dict[str, float]
    corrected_std: dict[str, float]
    n_failed: int


def bootstrap_correction(data: StandardData, config: BootstrapConfig) -> BootstrapCorrection:
    """Resample every sequence, re-estimate and re-solve; report point values and spreads.

    When ``data.calibration_counts`` is present the mixture fit behind F0 and
    F1 is repeated on each resampled survival set, so their uncertainty
    propagates into the corrected spreads.
    """
    raw0 = data.raw()
    system0 = build_system({k: (v, 0.0) for k, v in raw0.items()}, data.F0, data.F1)
    nominal = solve(system0, initial_guess({k: (v, 0.0) for k, v in raw0.items()}))
    raws, cors = [], []
    failed = 0
    for s in range(config.n_sets):
        tabs = {}
        for j, (name, t) in enumerate(sorted(data.tables.items())):
            rng = make_generator(config.seed, s, j)
            size = min(config.set_size, t.n_shots)
            idx = rng.integers(0, t.n_shots, size)
            tabs[name] = t.resample(idx)
            if name == "survival":
                surv_idx = idx
        try:
            r = data.raw(tabs)
            sysb = system0.with_values([r[m.name] for m in system0.measurements])
            if data.calibration_counts is not None:
                rep = fidelity_at(fit_mixture(data.calibration_counts[surv_idx]), data.theta)
                sysb = MeasurementSystem(sysb.measurements, sysb.free, {**sysb.fixed, "F0": rep.F0, "F1": rep.F1})
            c = solve(sysb, nominal.values)
        except (est.EmptyConditionError, ValueError, RuntimeError):
            failed += 1
            continue
        if not c.stationary:
            failed += 1
            continue
        raws.append([r[q.name] for q in QUANTITIES])
        cors.append([c.values[k] for k in PARAMETERS])
    if failed > config.n_sets / 2:
        raise RuntimeError(f"bootstrap correction failed in {failed}/{config.n_sets} sets")
    rs, cs = np.std(raws, axis=0, ddof=1), np.std(cors, axis=0, ddof=1)
    return BootstrapCorrection(raw0, {q.name: float(v) for q, v in zip(QUANTITIES, rs)},
                               {k: nominal.values[k] for k in PARAMETERS},
                               {k: float(v) for k, v in zip(PARAMETERS, cs)}, failed)
