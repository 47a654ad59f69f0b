"""Command-line scenario runner.

Each subcommand reads an optional YAML config (merged over built-in
defaults), validates it, runs one scenario and writes CSV/JSON outputs plus a
``manifest.json`` with the config hash, seed and output digests. ``figures``
runs every scenario with defaults into sub-directories.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np
import yaml

from . import __version__
from .analysis import estimators as est
from .analysis.estimators import BootstrapConfig, OutcomeTable
from .analysis.mixture import fit_mixture, optimal_threshold
from .analysis.recapture import RecaptureModel, recapture_probability, release_recapture_temperature
from .atomic.collection import CollectionGeometry, collection_efficiency
from .atomic.data import load_atomic_data
from .atomic.polarizability import (MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, REFERENCE_WAVELENGTH,
                                    TweezerConfig, correction_uncertainty, default_models, magic_wavelength_search,
                                    polarizability, solve_polarizability_correction)
from .circuits import (Circuit, Dataset, ReadoutErrorModel, circuit_from_dict, depolarization_circuit,
                       feedforward_circuit, pi_pulse_circuit, simulate_ensemble, reference_model,
                       single_readout_circuit, survival_circuit, three_readout_fidelity_circuit, zeno_circuit)
from .constants import wavelength_to_omega
from .dynamics import DepolConditions, curve_csv, depol_curve, loglog_slope, reference_conditions, zeno_predictions
from .rates import ProbeConfig, SurvivalModel, loss_fraction, make_field_point, offresonant_loss, reference_probe
from .rates import rate_table_csv, scattering_rates
from .rng import SEED_MAX

# ------------------------------------------------------------------ schema

PROB = {"type": "number", "minimum": 0, "maximum": 1}
NONNEG = {"type": "number", "minimum": 0}
POS = {"type": "number", "exclusiveMinimum": 0}
INT_POS = {"type": "integer", "minimum": 1}

PROBE_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {"intensity_sat": POS, "detuning_linewidths": {"type": "number"}, "duration": NONNEG,
                   "split": {"type": "array", "items": NONNEG, "minItems": 3, "maxItems": 3}},
}
TWEEZER_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {"wavelength_nm": POS, "power_mW": POS, "waist_nm": POS, "depth_MHz": POS},
}
MODEL_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "preset": {"enum": ["reference", "ideal", "custom"]},
        "loading_p": PROB, "eta_op": PROB, "eta_surv_B": PROB, "eta_surv_D": PROB,
        "p_depol_DB": PROB, "p_depol_BD": PROB, "pi_fidelity": PROB,
        "mu0": {"type": "number"}, "sigma0": POS, "mu1": {"type": "number"}, "sigma1": POS,
        "feedforward_latency": NONNEG, "readout_duration": NONNEG, "threshold": {"type": "number"},
        "hold_loss_lifetime": POS, "T1": POS,
    },
}
BOOT_SCHEMA = {"type": "object", "additionalProperties": False,
               "properties": {"n_sets": INT_POS, "set_size": INT_POS}}

SCENARIO_SCHEMAS: dict[str, dict] = {
    "predict-depol-curve": {
        "B_min": POS, "B_max": POS, "n_points": {"type": "integer", "minimum": 2}, "duration": NONNEG,
        "probe": PROBE_SCHEMA, "trap": {"type": "boolean"}, "depth_MHz": POS, "ellipticity_deg": NONNEG,
        "tilt_deg": {"type": "number"}, "report_field": POS,
    },
    "simulate-circuit": {
        "circuit": {"type": "object"}, "model": MODEL_SCHEMA, "shots": INT_POS,
    },
    "analyze-dataset": {
        "dataset": {"type": "string"}, "estimators": {"type": "array", "items": {
            "type": "object", "required": ["kind"], "additionalProperties": False,
            "properties": {"kind": {"enum": sorted(est.ESTIMATORS)},
                           "readouts": {"type": "array", "items": {"type": "integer", "minimum": 0}}}}},
        "bootstrap": BOOT_SCHEMA, "threshold": {"type": "number"}, "post_select_last": {"type": "boolean"},
    },
    "spam-correct": {
        "inputs": {"enum": ["reference", "simulate"]}, "model": MODEL_SCHEMA, "shots": INT_POS,
        "bootstrap": BOOT_SCHEMA,
    },
    "zeno": {
        "thetas_deg": {"type": "array", "items": {"type": "number"}, "minItems": 1}, "N": INT_POS,
        "shots": INT_POS, "p_depol": PROB, "model": MODEL_SCHEMA,
    },
    "feedforward": {
        "policy": {"enum": ["xor", "alternating"]}, "loops": INT_POS, "shots": INT_POS, "model": MODEL_SCHEMA,
    },
    "polarizability-scan": {
        "wl_min_nm": POS, "wl_max_nm": POS, "step_nm": POS, "magic_range_nm": {
            "type": "array", "items": POS, "minItems": 2, "maxItems": 2},
    },
    "loss-lifetime": {"tweezer": TWEEZER_SCHEMA, "probe": PROBE_SCHEMA},
    "collection-efficiency": {"numerical_aperture": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                              "samples": {"type": "integer", "minimum": 10000}},
    "release-recapture": {
        "curve": {"type": "string"}, "synthetic_temperature_uK": POS,
        "release_times_us": {"type": "array", "items": NONNEG, "minItems": 2}, "tweezer": TWEEZER_SCHEMA,
        "n_atoms": INT_POS, "grid_uK": {"type": "array", "items": POS, "minItems": 2, "maxItems": 3},
    },
}


def schema_for(scenario: str) -> dict:
    props = dict(SCENARIO_SCHEMAS[scenario])
    props["seed"] = {"type": "integer", "minimum": 0, "maximum": SEED_MAX}
    props["scenario"] = {"const": scenario}
    return {"type": "object", "additionalProperties": False, "properties": props}


DEFAULTS: dict[str, dict] = {
    "predict-depol-curve": {"B_min": 5.0, "B_max": 200.0, "n_points": 25, "trap": True, "depth_MHz": 12.0,
                            "ellipticity_deg": 1.0, "tilt_deg": 0.0, "report_field": 58.0},
    "simulate-circuit": {"circuit": {"preset": "depolarization"}, "model": {"preset": "reference"}, "shots": 17500},
    "analyze-dataset": {"estimators": [], "bootstrap": {"n_sets": 200, "set_size": 500},
                        "post_select_last": False},
    "spam-correct": {"inputs": "reference", "model": {"preset": "reference"}, "shots": 17500,
                     "bootstrap": {"n_sets": 100, "set_size": 17500}},
    "zeno": {"thetas_deg": [0, 45, 90, 135, 180], "N": 10, "shots": 10000, "p_depol": 0.0127},
    "feedforward": {"policy": "xor", "loops": 6, "shots": 2000, "model": {"preset": "reference"}},
    "polarizability-scan": {"wl_min_nm": 740.0, "wl_max_nm": 820.0, "step_nm": 0.5,
                            "magic_range_nm": [765.0, 800.0]},
    "loss-lifetime": {"tweezer": {"wavelength_nm": 760.2, "power_mW": 7.0, "waist_nm": 670.0}},
    "collection-efficiency": {"numerical_aperture": 0.6, "samples": 1000000},
    "release-recapture": {"synthetic_temperature_uK": 5.0, "release_times_us": [0, 5, 10, 15, 20, 25, 30, 40, 50, 60],
                          "tweezer": {"wavelength_nm": 760.2, "power_mW": 7.0, "waist_nm": 670.0},
                          "n_atoms": 20000, "grid_uK": [1.0, 20.0, 0.5]},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "circuit":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(scenario: str, path: str | None, seed: int | None) -> dict:
    user: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} does not exist")
        user = yaml.safe_load(p.read_text()) or {}
        if not isinstance(user, dict):
            raise ConfigError("config must be a mapping")
    cfg = _merge(DEFAULTS[scenario], user)
    if seed is not None:
        cfg["seed"] = seed
    try:
        jsonschema.validate(cfg, schema_for(scenario))
    except jsonschema.ValidationError as e:
        where = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}") from None
    if "seed" not in cfg:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    base = Path(path).parent if path else Path(".")
    for key in ("dataset", "curve"):
        if key in cfg:
            f = Path(cfg[key])
            f = f if f.is_absolute() else base / f
            if not f.is_file():
                raise ConfigError(f"referenced file {cfg[key]} does not exist")
            cfg[key] = str(f)
    return cfg


# ------------------------------------------------------------------ output


class Output:
    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode()
        (self.root / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def json(self, name: str, obj: Any) -> None:
        self.write(name, json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header: list[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        self.write(name, buf.getvalue())


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ------------------------------------------------------------ builders


def _probe(cfg: dict | None) -> ProbeConfig:
    base = reference_probe()
    if not cfg:
        return base
    kw = {}
    if "intensity_sat" in cfg:
        kw["intensity_total"] = cfg["intensity_sat"]
    if "detuning_linewidths" in cfg:
        kw["detuning"] = cfg["detuning_linewidths"] * abs(base.detuning)
    if "duration" in cfg:
        kw["duration"] = cfg["duration"]
    if "split" in cfg:
        s = np.asarray(cfg["split"], dtype=float)
        if s.sum() <= 0:
            raise ConfigError("probe split must have a positive sum")
        kw["polarization_split"] = tuple(s / s.sum())
    return base.with_(**kw)


def _tweezer(cfg: dict) -> TweezerConfig:
    wl = cfg.get("wavelength_nm", 760.2) * 1e-9
    w0 = cfg.get("waist_nm", 670.0) * 1e-9
    if "depth_MHz" in cfg:
        from .dynamics import trap_tweezer
        return trap_tweezer(cfg["depth_MHz"] * 1e6, wl, w0)
    return TweezerConfig(wl, cfg.get("power_mW", 7.0) * 1e-3, w0)


def build_model(cfg: dict | None) -> ReadoutErrorModel:
    cfg = dict(cfg or {"preset": "reference"})
    preset = cfg.pop("preset", "custom")
    f_pi = cfg.pop("pi_fidelity", None)
    if preset == "reference":
        m = reference_model(**cfg)
    elif preset == "ideal":
        m = ReadoutErrorModel.ideal(**cfg)
    else:
        m = ReadoutErrorModel(**cfg)
    if f_pi is not None:
        m = m.with_pi_fidelity(f_pi)
    return m


CIRCUIT_PRESETS: dict[str, Callable[..., Circuit]] = {
    "depolarization": depolarization_circuit,
    "pi_pulse": pi_pulse_circuit,
    "survival": survival_circuit,
    "single_readout": single_readout_circuit,
    "three_readout": three_readout_fidelity_circuit,
}


def build_circuit(cfg: dict) -> Circuit:
    if "preset" in cfg:
        name = cfg["preset"]
        if name not in CIRCUIT_PRESETS:
            raise ConfigError(f"unknown circuit preset {name!r}; choose from {sorted(CIRCUIT_PRESETS)}")
        return CIRCUIT_PRESETS[name]()
    try:
        return circuit_from_dict(cfg)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid circuit: {e}") from None


def _p_same(ds: Dataset, post_select_final: bool = True) -> tuple[np.ndarray, np.ndarray, int]:
    bits = ds.bits()
    mask = bits[:, -1] == 1 if post_select_final else np.ones(ds.n_shots, bool)
    q = bits[mask][:, :-1]
    same = (q == q[:, :1]).mean(axis=0)
    n = int(mask.sum())
    return same, np.sqrt(same * (1 - same) / max(n, 1)), n


# ------------------------------------------------------------- scenarios


def run_depol_curve(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    B = np.geomspace(cfg["B_min"], cfg["B_max"], cfg["n_points"])
    probe = _probe(cfg.get("probe"))
    cond = reference_conditions(cfg["depth_MHz"] * 1e6, cfg["ellipticity_deg"], cfg["tilt_deg"]) if cfg["trap"] \
        else DepolConditions()
    dur = cfg.get("duration", probe.duration)
    curve = depol_curve(B, probe, dur, cond)
    out.write("depol_curve.csv", curve_csv(curve, ("B_G", "P_depol")))
    rows = [(b, scattering_rates(make_field_point(b, cond.tweezer, cond.polarization), probe)) for b in B]
    out.write("rates.csv", rate_table_csv(rows))
    tail = [(b, p) for b, p in curve if b >= 20.0]
    ref = depol_curve([cfg["report_field"]], probe, dur, cond)[0][1]
    rep = {"tail_loglog_slope": loglog_slope(*zip(*tail)) if len(tail) >= 2 else None,
           "report_field_G": cfg["report_field"], "P_depol_at_report_field": ref, "duration_s": dur}
    out.json("report.json", rep)
    return rep


def run_simulate(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    circuit = build_circuit(cfg["circuit"])
    model = build_model(cfg["model"])
    ds = simulate_ensemble(circuit, model, cfg["shots"], cfg["seed"], workers=threads)
    out.write("dataset.csv", ds.to_csv(truth_columns=truth))
    out.json("metadata.json", ds.metadata())
    return {"shots": ds.n_shots, "readouts": ds.counts.shape[1]}


def run_analyze(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    if "dataset" not in cfg:
        raise ConfigError("analyze-dataset needs 'dataset' (path to a simulate-circuit CSV)")
    text = Path(cfg["dataset"]).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    cidx = [i for i, h in enumerate(rows[0]) if h.startswith("count_")]
    counts = np.array([[float(r[i]) for i in cidx] for r in rows[1:]])
    fits = []
    for j in range(counts.shape[1]):
        f = fit_mixture(counts[:, j])
        rep = optimal_threshold(f) if not f.degenerate else None
        fits.append({"readout": j, "fit": asdict(f), "threshold": asdict(rep) if rep else None})
    if "threshold" in cfg:
        theta = cfg["threshold"]
    else:
        good = [x["threshold"]["theta"] for x in fits if x["threshold"]]
        if not good:
            raise ValueError("no readout shows two count modes; set 'threshold' explicitly")
        theta = float(np.median(good))
    mask = counts[:, -1] >= theta if cfg["post_select_last"] else None
    table = OutcomeTable.from_counts(counts, theta, mask)
    bcfg = BootstrapConfig(cfg["bootstrap"]["n_sets"], min(cfg["bootstrap"]["set_size"], table.n_shots), cfg["seed"])
    results = []
    for e in cfg["estimators"]:
        idx = tuple(e.get("readouts", ()))
        val = est.estimators(table, e["kind"], *idx)
        mean, std = est.bootstrap(table, lambda t, k=e["kind"], i=idx: est.estimators(t, k, *i), bcfg)
        results.append({"kind": e["kind"], "readouts": list(idx), "value": val, "bootstrap_mean": mean,
                        "bootstrap_std": std})
    rep = {"threshold": theta, "fits": fits, "estimators": results, "string_counts": table.string_counts()}
    if counts.shape[1] >= 2:
        cm = correlation_matrix_safe(table)
        if cm is not None:
            out.csv("correlation.csv", [""] + [f"r{j}" for j in range(counts.shape[1])],
                    [[f"r{i}", *row] for i, row in enumerate(cm.matrix)])
            rep["correlation_undefined"] = cm.undefined
    if counts.shape[1] == 3:
        sw = est.three_readout_fidelity_sweep(counts)
        out.csv("fidelity_sweep.csv", ["theta_b", "F_bright", "F_dark", "F_avg"],
                zip(sw.theta_b, sw.F_bright, sw.F_dark, sw.F_avg))
        rep["sweep_plateaus"] = {"bright": sw.plateau_bright, "dark": sw.plateau_dark}
    out.json("report.json", rep)
    return {"threshold": theta, "estimators": len(results)}


def correlation_matrix_safe(table: OutcomeTable):
    try:
        return est.correlation_matrix(table)
    except ValueError:
        return None


def run_spam(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    from .spam.graph import build_graph
    from .spam.standard import (SEQUENCES, StandardData, bootstrap_correction, correct, reference_correction)
    for name, make in SEQUENCES.items():
        out.write(f"graph_{name}.dot", build_graph(make()).to_dot())
    if cfg["inputs"] == "reference":
        res = reference_correction()
        rep = {"inputs": "reference", "corrected": res.values, "corner_uncertainty": res.uncertainties,
               "residual": res.residual_norm, "converged": res.converged}
    else:
        model = build_model(cfg["model"])
        datasets = {name: simulate_ensemble(make(), model, cfg["shots"], cfg["seed"] + i, workers=threads)
                    for i, (name, make) in enumerate(SEQUENCES.items())}
        data = StandardData.from_datasets(datasets)
        res = correct(data)
        b = cfg["bootstrap"]
        bc = bootstrap_correction(data, BootstrapConfig(b["n_sets"], b["set_size"], cfg["seed"]))
        truth_vals = {"p": model.loading_p, "eta_op": model.eta_op, "eta_B": model.eta_surv_B,
                      "eta_D": model.eta_surv_D, "depol_DB": model.p_depol_DB, "depol_BD": model.p_depol_BD,
                      "eta_pi": 1.0 / (1.0 + model.pulse_detuning_ratio**2)
                      * math.sin(math.pi / 2 * math.sqrt(1 + model.pulse_detuning_ratio**2)) ** 2}
        rep = {"inputs": "simulate", "raw": bc.raw, "raw_bootstrap_std": bc.raw_std, "corrected": res.values,
               "corner_uncertainty": res.uncertainties, "bootstrap_std": bc.corrected_std, "truth": truth_vals,
               "F0": data.F0, "F1": data.F1, "threshold": data.theta}
    out.json("report.json", rep)
    return {"corrected": {k: v for k, v in rep["corrected"].items()}}


def run_zeno(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    mcfg = cfg.get("model") or {"preset": "ideal", "p_depol_DB": cfg["p_depol"], "p_depol_BD": cfg["p_depol"]}
    model = build_model(mcfg)
    rows = []
    summary = []
    for k, deg in enumerate(cfg["thetas_deg"]):
        th = math.radians(deg)
        ds = simulate_ensemble(zeno_circuit(th, cfg["N"]), model, cfg["shots"], cfg["seed"] + k, workers=threads)
        same, err, n = _p_same(ds)
        pred = zeno_predictions(th, cfg["N"], cfg["p_depol"])
        bits = ds.bits()
        q = bits[bits[:, -1] == 1][:, :-1]
        all_same = float((q == q[:, :1]).all(axis=1).mean())
        for i in range(cfg["N"]):
            rows.append((deg, i, same[i], err[i], pred.p_same[i]))
        summary.append({"theta_deg": deg, "P_all_same": all_same, "P_all_same_chain": pred.p_all_same_chain,
                        "P_all_same_closed": pred.p_all_same_closed, "shots_kept": n})
    out.csv("zeno.csv", ["theta_deg", "index", "P_same", "P_same_err", "P_same_model"], rows)
    out.json("report.json", {"curves": summary})
    return {"angles": len(summary)}


def run_feedforward(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    n = cfg["loops"]
    policy = ["XOR"] * n if cfg["policy"] == "xor" else ["XNOR" if (i + 1) % 2 else "XOR" for i in range(n)]
    model = build_model(cfg["model"])
    ds = simulate_ensemble(feedforward_circuit(policy), model, cfg["shots"], cfg["seed"], workers=threads)
    same, err, kept = _p_same(ds)
    out.csv("feedforward.csv", ["index", "P_same", "P_same_err"], [(i, s, e) for i, (s, e) in enumerate(zip(same, err))])
    out.json("report.json", {"policy": policy, "P_same": same, "shots_kept": kept,
                             "elapsed_s": float(ds.elapsed.mean())})
    return {"measurements": len(same)}


def run_polarizability(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    models = default_models()
    data = load_atomic_data()
    half = replace(models["3P1"], state=data.state("3P1", 1.5, 0.5))
    wls = np.arange(cfg["wl_min_nm"], cfg["wl_max_nm"] + 0.5 * cfg["step_nm"], cfg["step_nm"])
    rows = []
    for wl in wls:
        w = wavelength_to_omega(wl * 1e-9)
        try:
            rows.append((wl, models["1S0"].total(w), models["3P0"].total(w), half.total(w), models["3P1"].total(w)))
        except ValueError:
            continue
    out.csv("polarizability.csv", ["wavelength_nm", "1S0", "3P0", "3P1_mF_half", "3P1_mF_threehalf"], rows)
    lo, hi = (x * 1e-9 for x in cfg["magic_range_nm"])
    m32 = magic_wavelength_search(models["3P1"], models["1S0"], (lo, hi))
    m12 = magic_wavelength_search(half, models["1S0"], (lo, hi))
    conv = magic_wavelength_search(models["3P1"], half, (lo, hi))
    w_ref = wavelength_to_omega(REFERENCE_WAVELENGTH)
    g = data.state("1S0", 0.5, 0.5)
    a_g = polarizability(g, tuple(data.lines_for("1S0")), w_ref).alpha_scalar
    raw = polarizability(data.state("3P1", 1.5, 1.5), tuple(data.lines_for("3P1")), w_ref)
    a_t, d_s = solve_polarizability_correction(MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, a_g)
    s_t, s_s = correction_uncertainty(MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, a_g)
    rep = {"reference_wavelength_nm": REFERENCE_WAVELENGTH * 1e9, "alpha_1S0": a_g,
           "alpha_3P1_scalar_uncorrected": raw.alpha_scalar, "alpha_3P1_tensor_uncorrected": raw.alpha_tensor,
           "corrected_alpha_T": a_t, "corrected_delta_alpha_S": d_s,
           "corrected_alpha_T_err": s_t, "corrected_delta_alpha_S_err": s_s,
           "magic_3P1_threehalf_nm": [x * 1e9 for x in m32.wavelengths],
           "magic_3P1_half_nm": [x * 1e9 for x in m12.wavelengths],
           "sublevel_convergence_nm": [x * 1e9 for x in conv.wavelengths]}
    out.json("report.json", rep)
    return rep


def run_loss(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    tw = _tweezer(cfg["tweezer"])
    probe = _probe(cfg.get("probe"))
    res = {}
    for mF in (-1.5, -0.5):
        for sm in SurvivalModel:
            r = offresonant_loss(tw, mF, probe, sm)
            res[f"mF={mF:+.1f}/{sm.value}"] = {"lifetime_s": r.lifetime, "loss_rate_per_s": r.loss_rate,
                                               "excited_fraction": r.excited_fraction}
    rep = {"loss_branching_fraction": loss_fraction(), "results": res,
           "tweezer": {"wavelength_m": tw.wavelength, "power_W": tw.power, "waist_m": tw.waist_radius}}
    out.json("report.json", rep)
    return rep


def run_collection(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    geo = CollectionGeometry(cfg["numerical_aperture"], cfg["samples"])
    vals = {case: collection_efficiency(geo, case, cfg["seed"]) for case in ("-3/2", "-1/2", "isotropic")}
    r = vals["-1/2"][0] / vals["-3/2"][0]
    r_err = r * math.hypot(vals["-1/2"][1] / vals["-1/2"][0], vals["-3/2"][1] / vals["-3/2"][0])
    rep = {"efficiency": {k: {"value": v, "stderr": e} for k, (v, e) in vals.items()}, "ratio": r,
           "ratio_stderr": r_err, "cap_fraction": geo.cap_fraction()}
    out.json("report.json", rep)
    return rep


def run_recapture(cfg: dict, out: Output, threads: int, truth: bool) -> dict:
    tw = _tweezer(cfg["tweezer"])
    model = RecaptureModel(n_atoms=cfg["n_atoms"], seed=cfg["seed"])
    if "curve" in cfg:
        rows = list(csv.reader(io.StringIO(Path(cfg["curve"]).read_text())))
        curve = [(float(a) * 1e-6, float(b)) for a, b, *_ in rows[1:]]
    else:
        ts = np.asarray(cfg["release_times_us"]) * 1e-6
        gen = RecaptureModel(n_atoms=cfg["n_atoms"], seed=cfg["seed"] + 1)
        curve = list(zip(ts, recapture_probability(ts, cfg["synthetic_temperature_uK"] * 1e-6, tw, model=gen)))
    lo, hi, *step = cfg["grid_uK"]
    grid = np.arange(lo, hi + 1e-9, step[0] if step else 0.5) * 1e-6
    fit = release_recapture_temperature(curve, tw, grid, model=model)
    t = [c[0] for c in curve]
    best = recapture_probability(t, fit.temperature, tw, model=model)
    out.csv("recapture.csv", ["release_time_us", "probability", "model"],
            [(a * 1e6, b, m) for (a, b), m in zip(curve, best)])
    rep = {"temperature_uK": fit.temperature * 1e6, "at_grid_edge": fit.at_edge}
    out.json("report.json", rep)
    return rep


SCENARIOS: dict[str, Callable[[dict, Output, int, bool], dict]] = {
    "predict-depol-curve": run_depol_curve,
    "simulate-circuit": run_simulate,
    "analyze-dataset": run_analyze,
    "spam-correct": run_spam,
    "zeno": run_zeno,
    "feedforward": run_feedforward,
    "polarizability-scan": run_polarizability,
    "loss-lifetime": run_loss,
    "collection-efficiency": run_collection,
    "release-recapture": run_recapture,
}


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(_clean(cfg), sort_keys=True).encode()).hexdigest()


def run(scenario: str, config: str | None, seed: int | None, out_dir: str, threads: int = 1,
        truth_columns: bool = False) -> int:
    """Run one scenario; returns the process exit status."""
    out_root = Path(out_dir)
    try:
        cfg = load_config(scenario, config, seed)
        if truth_columns and scenario != "simulate-circuit":
            raise ConfigError("--truth-columns applies to simulate-circuit only")
        out = Output(out_root)
        summary = SCENARIOS[scenario](cfg, out, threads, truth_columns)
        manifest = {"scenario": scenario, "seed": cfg["seed"], "config_sha256": _config_hash(cfg),
                    "config": cfg, "version": __version__, "outputs": out.files}
        out.json("manifest.json", manifest)
        print(json.dumps(_clean({"scenario": scenario, "status": "ok", "summary": summary}), sort_keys=True))
        return 0
    except Exception as e:  # noqa: BLE001 - reported as a machine-readable error
        report = {"scenario": scenario, "status": "error", "error": type(e).__name__, "message": str(e)}
        try:
            out_root.mkdir(parents=True, exist_ok=True)
            (out_root / "error.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        except OSError:
            pass
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(e, ConfigError) else 1


def run_figures(seed: int, out_dir: str, threads: int = 1) -> int:
    """All scenarios with default settings; dataset analysis runs on a simulated file."""
    status = 0
    root = Path(out_dir)
    for name in SCENARIOS:
        if name == "analyze-dataset":
            continue
        status |= run(name, None, seed, str(root / name), threads)
    sim = root / "simulate-circuit" / "dataset.csv"
    if sim.is_file():
        cfg = root / "analyze-dataset.yaml"
        root.mkdir(parents=True, exist_ok=True)
        cfg.write_text(yaml.safe_dump({"dataset": str(sim.resolve()), "post_select_last": True, "estimators": [
            {"kind": "depol_DB"}, {"kind": "depol_BD"}]}))
        status |= run("analyze-dataset", str(cfg), seed, str(root / "analyze-dataset"), threads)
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ybqnd", description="Readout simulation and analysis scenarios.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in [*SCENARIOS, "figures"]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes for shot simulation")
        if name == "simulate-circuit":
            p.add_argument("--truth-columns", action="store_true", help="include hidden truth columns")
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.scenario == "figures":
        if args.seed is None:
            parser.error("figures needs --seed")
        return run_figures(args.seed, args.out, args.threads)
    return run(args.scenario, args.config, args.seed, args.out, args.threads, getattr(args, "truth_columns", False))


if __name__ == "__main__":
    sys.exit(main())
