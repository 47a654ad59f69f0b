"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from ybqnd.analysis.estimators import BootstrapConfig, OutcomeTable, correlation_matrix, fidelity_bootstrap
from ybqnd.analysis.mixture import fit_mixture, optimal_threshold
from ybqnd.atomic.collection import CollectionGeometry, collection_efficiency
from ybqnd.atomic.data import load_atomic_data
from ybqnd.atomic.mixing import stark_zeeman_mixing
from ybqnd.atomic.polarizability import (MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, REFERENCE_WAVELENGTH,
                                         TweezerConfig, default_models, magic_wavelength_search, polarizability,
                                         solve_polarizability_correction)
from ybqnd.circuits import (AtomReadout, Circuit, ReadoutErrorModel, feedforward_circuit, simulate_ensemble,
                            reference_model, variable_basis_sequence, zeno_circuit)
from ybqnd.constants import wavelength_to_omega
from ybqnd.dynamics import depol_curve, loglog_slope, p_all_same_closed_form, reference_conditions, zeno_predictions
from ybqnd.rates import SurvivalModel, loss_fraction, offresonant_loss, reference_probe
from ybqnd.spam.standard import SEQUENCES, StandardData, bootstrap_correction, correct


def verdict(n: int, ok: bool, detail: str) -> None:
    record_acceptance(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# ------------------------------------------------------------------ 1


def test_criterion_01_discrimination_fidelity():
    t0 = time.perf_counter()
    model = ReadoutErrorModel(loading_p=0.70, mu0=1.0, sigma0=2.0, mu1=37.0, sigma1=16.0)
    ds = simulate_ensemble(Circuit((AtomReadout(),), "mixed"), model, 12500, 20240101)
    counts = ds.counts[:, 0]
    rep = optimal_threshold(fit_mixture(counts))
    _, std = fidelity_bootstrap(counts, BootstrapConfig(200, 500, 1))
    dt = time.perf_counter() - t0
    ok = abs(rep.F - 0.993) <= 0.005 and abs(std - 0.004) <= 0.002 and dt < 30
    verdict(1, ok, f"F={rep.F:.4f} (0.993+-0.005), bootstrap std={std:.4f} (0.004+-0.002), "
                   f"theta={rep.theta:.2f}, {dt:.1f}s (<30s)")


# ------------------------------------------------------------------ 2


def test_criterion_02_depolarization_scaling():
    t0 = time.perf_counter()
    probe = reference_probe()
    cond = reference_conditions()
    B = np.geomspace(20.0, 200.0, 15)
    curve = depol_curve(B, probe, None, cond)
    slope = loglog_slope(*zip(*curve))
    p58 = depol_curve([58.0], probe, None, cond)[0][1]
    dt = time.perf_counter() - t0
    ok = abs(slope + 2.0) <= 0.2 and 0.005 <= p58 <= 0.03 and dt < 60
    verdict(2, ok, f"slope={slope:.3f} (-2.0+-0.2), P_depol(58 G, 12 ms)={p58:.4f} in [0.005, 0.03], {dt:.1f}s")


# ------------------------------------------------------------------ 3


def test_criterion_03_spam_round_trip():
    t0 = time.perf_counter()
    model = reference_model()
    datasets = {name: simulate_ensemble(make(), model, 17500, 3000 + i)
                for i, (name, make) in enumerate(SEQUENCES.items())}
    data = StandardData.from_datasets(datasets)
    res = correct(data, corners=False)
    bc = bootstrap_correction(data, BootstrapConfig(100, 17500, 11))
    x = model.pulse_detuning_ratio
    truth = {"p": model.loading_p, "eta_op": model.eta_op, "eta_B": model.eta_surv_B, "eta_D": model.eta_surv_D,
             "depol_DB": model.p_depol_DB, "depol_BD": model.p_depol_BD,
             "eta_pi": math.sin(math.pi / 2 * math.sqrt(1 + x * x)) ** 2 / (1 + x * x)}
    dt = time.perf_counter() - t0
    z = {k: abs(res.values[k] - truth[k]) / bc.corrected_std[k] for k in truth}
    ok = all(v <= 2.0 for v in z.values()) and dt < 120
    worst = max(z, key=z.get)
    verdict(3, ok, f"max |corrected-truth|/std = {z[worst]:.2f} ({worst}) <= 2, "
                   + ", ".join(f"{k}={res.values[k]:.4f}" for k in truth) + f", {dt:.1f}s (<120s)")


# ------------------------------------------------------------------ 4


def test_criterion_04_zeno():
    N, p, shots = 10, 0.0127, 10_000
    model = ReadoutErrorModel.ideal(p_depol_DB=p, p_depol_BD=p)
    problems = []
    worst_curve = worst_chain = 0.0
    for k, theta in enumerate(np.array([0, 0.25, 0.5, 0.75, 1.0]) * math.pi):
        ds = simulate_ensemble(zeno_circuit(theta, N), model, shots, 4000 + k)
        bits = ds.bits()
        q = bits[bits[:, -1] == 1][:, :-1]
        n = len(q)
        same = (q == q[:, :1]).mean(axis=0)
        pred = zeno_predictions(theta, N, p)
        sig = np.sqrt(np.maximum(pred.p_same * (1 - pred.p_same), 1e-12) / n)
        dev = np.abs(same - pred.p_same) / np.where(sig > 0, sig, 1.0)
        worst_curve = max(worst_curve, float(dev.max()))
        if dev.max() > 3:
            problems.append(f"P_same theta={theta:.3f}")
        # closed form against the chain at p = 0 (exact)
        chain0 = zeno_predictions(theta, N, 0.0).p_all_same_chain
        closed0 = p_all_same_closed_form(theta * (N - 1), N, 0.0)
        if not math.isclose(chain0, closed0, rel_tol=1e-12, abs_tol=1e-15):
            problems.append(f"p=0 closed form theta={theta:.3f}")
        all_same = float((q == q[:, :1]).all(axis=1).mean())
        sc = math.sqrt(max(pred.p_all_same_chain * (1 - pred.p_all_same_chain), 1e-12) / n)
        worst_chain = max(worst_chain, abs(all_same - pred.p_all_same_chain) / sc)
        closed = p_all_same_closed_form(theta * (N - 1), N, p)
        s = math.sqrt(max(closed * (1 - closed), 1e-12) / n)
        if abs(all_same - closed) > 3 * s:
            problems.append(f"P_all_same theta={theta:.3f}: MC {all_same:.4f} vs closed {closed:.4f} "
                            f"({abs(all_same - closed) / s:.1f} sigma)")
    verdict(4, not problems, f"max P_same deviation {worst_curve:.2f} sigma; P_all_same vs measurement chain "
                             f"{worst_chain:.2f} sigma; "
                             + ("; ".join(problems) if problems else "all within 3 sigma"))


# ------------------------------------------------------------------ 5


def test_criterion_05_basis_sequences():
    model = ReadoutErrorModel.ideal()
    problems = []
    for k, bases in enumerate((["+Z", "-Z", "+X", "-X"], ["+Z", "+X", "-Z", "-X"])):
        ds = simulate_ensemble(variable_basis_sequence(bases), model, 10_000, 5000 + k)
        bits = ds.bits()
        table = OutcomeTable(bits[:, :-1], bits[:, -1] == 1)
        sc = table.string_counts()
        freq = {s: c / table.n_shots for s, c in sc.items()}
        if k == 0:
            expect = {"0101", "0110", "1001", "1010"}
            if any(freq.get(s, 0) > 0 for s in set(freq) - expect):
                problems.append("unexpected strings")
            if any(abs(freq.get(s, 0) - 0.25) > 0.02 for s in expect):
                problems.append("anti-correlated strings outside 0.25+-0.02")
            c = correlation_matrix(table).matrix
            target = np.zeros((4, 4))
            target[0, 1] = target[1, 0] = target[2, 3] = target[3, 2] = -1.0
            off = ~np.eye(4, dtype=bool)
            if np.abs(c - target)[off].max() > 0.05:
                problems.append("correlations outside tolerance")
        else:
            if len([s for s in freq if freq[s] > 0]) != 16 or max(abs(v - 0.0625) for v in freq.values()) > 0.01:
                problems.append("uniform strings outside 0.0625+-0.01")
    verdict(5, not problems, "; ".join(problems) or "anti-correlated and uniform string sets as expected")


# ------------------------------------------------------------------ 6


def test_criterion_06_feedforward():
    model = reference_model()
    p = model.p_depol_DB
    problems = []
    summary = []
    policies = {"XOR": ["XOR"] * 6, "XNOR/XOR": ["XNOR" if (i + 1) % 2 else "XOR" for i in range(6)]}
    for k, (name, pol) in enumerate(policies.items()):
        ds = simulate_ensemble(feedforward_circuit(pol), model, 10_000, 6000 + k)
        bits = ds.bits()
        q = bits[bits[:, -1] == 1][:, :-1]
        n = len(q)
        same = (q == q[:, :1]).mean(axis=0)
        if q.shape[1] != 13:
            problems.append(f"{name}: {q.shape[1]} measurements")
        for i in range(1, q.shape[1]):
            s = math.sqrt(0.25 / n)
            if i % 2:  # after the pi/2: random outcome
                if abs(same[i] - 0.5) > 3 * s:
                    problems.append(f"{name} index {i}: {same[i]:.3f} != 0.5")
                continue
            loop = i // 2 - 1
            ideal = 1.0 if pol[loop] == "XOR" else 0.0
            allowed = 1 - (1 - p) ** (i + 1)
            if abs(same[i] - ideal) > allowed + 3 * math.sqrt(max(same[i] * (1 - same[i]), 1e-4) / n):
                problems.append(f"{name} index {i}: {same[i]:.3f} vs {ideal} (allowed {allowed:.3f})")
        summary.append(f"{name} endpoint {same[-1]:.3f}")
    verdict(6, not problems, ", ".join(summary) + "; " + ("; ".join(problems) or "alternation within (1-p)^k bound"))


# ------------------------------------------------------------------ 7


def test_criterion_07_collection():
    geo = CollectionGeometry(0.6, 1_000_000)
    a, ea = collection_efficiency(geo, "-1/2", 71)
    b, eb = collection_efficiency(geo, "-3/2", 72)
    iso, ei = collection_efficiency(geo, "isotropic", 73)
    r = a / b
    cap = geo.cap_fraction()
    ok = abs(r - 1.40) <= 0.05 and abs(iso - cap) <= 3 * ei
    verdict(7, ok, f"ratio={r:.4f} (1.40+-0.05), isotropic={iso:.5f} vs cap {cap:.5f} "
                   f"({abs(iso - cap) / ei:.2f} sigma)")


# ------------------------------------------------------------------ 8


def test_criterion_08_offresonant_loss():
    tw = TweezerConfig(760.2e-9, 7e-3, 670e-9)
    probe = reference_probe()
    t32 = offresonant_loss(tw, -1.5, probe, SurvivalModel.PESSIMISTIC).lifetime
    t12 = offresonant_loss(tw, -0.5, probe, SurvivalModel.PESSIMISTIC).lifetime
    bf = loss_fraction()
    ok = abs(t32 / 0.8 - 1) <= 0.15 and abs(t12 / 2.5 - 1) <= 0.15 and abs(bf - 0.63) <= 0.02
    verdict(8, ok, f"tau(3/2)={t32:.3f}s (0.8+-15%), tau(1/2)={t12:.3f}s (2.5+-15%), branching={bf:.4f} (0.63+-0.02)")


# ------------------------------------------------------------------ 9


def test_criterion_09_polarizability():
    data = load_atomic_data()
    w = wavelength_to_omega(REFERENCE_WAVELENGTH)
    a_g = polarizability(data.state("1S0", 0.5, 0.5), tuple(data.lines_for("1S0")), w).alpha_scalar
    raw = polarizability(data.state("3P1", 1.5, 1.5), tuple(data.lines_for("3P1")), w)
    a_t, d_s = solve_polarizability_correction(MEASURED_DIFF_HALF, MEASURED_DIFF_THREEHALF, a_g)
    models = default_models()
    from dataclasses import replace
    half = replace(models["3P1"], state=data.state("3P1", 1.5, 0.5))
    rng = (765e-9, 800e-9)
    m32 = [x * 1e9 for x in magic_wavelength_search(models["3P1"], models["1S0"], rng).wavelengths]
    conv = [x * 1e9 for x in magic_wavelength_search(models["3P1"], half, rng).wavelengths]
    ok = (abs(raw.alpha_scalar - 233) <= 5 and abs(raw.alpha_tensor - 87) <= 5 and abs(a_g - 186) <= 3
          and abs(a_t - 26) <= 1 and abs(d_s - 20) <= 1
          and any(abs(x - 778) <= 3 for x in m32) and any(abs(x - 796) <= 3 for x in conv))
    verdict(9, ok, f"alpha_S(3P1)={raw.alpha_scalar:.1f}, alpha_T={raw.alpha_tensor:.1f}, alpha_S(1S0)={a_g:.1f}, "
                   f"corrected alpha_T={a_t:.2f}, d_alpha_S={d_s:.2f}, magic {m32} nm, convergence {conv} nm "
                   f"(approx 778 / 796, +-3 nm)")


# ------------------------------------------------------------------ 10


def test_criterion_10_mixing():
    cond = reference_conditions()
    adm = lambda b: stark_zeeman_mixing(b, cond.tweezer, cond.polarization).admixture(-1.5, -0.5)  # noqa: E731
    a58 = adm(58.0)
    B = np.geomspace(10.0, 200.0, 20)
    slope = loglog_slope(B, [adm(b) for b in B])
    ok = 0.5e-5 <= a58 <= 2e-5 and abs(slope + 2.0) <= 0.1
    verdict(10, ok, f"admixture(58 G)={a58:.3e} (1e-5 within x2), B-exponent={slope:.3f} (-2.0+-0.1)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
