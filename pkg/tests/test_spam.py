from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ybqnd.analysis.mixture import MixtureFit, fidelity_at
from ybqnd.circuits import simulate_ensemble, reference_model
from ybqnd.spam import (PARAMETERS, GraphError, Measurement, MeasurementSystem, NonConvergenceError, ProbGraph,
                        ZeroDenominatorError, build_graph, corner_uncertainty, outcome_distribution, path_model,
                        solve)
from ybqnd.spam.graph import W
from ybqnd.spam.standard import (QUANTITIES, SEQUENCES, REFERENCE_FIXED, REFERENCE_RAW, build_system, initial_guess,
                                 standard_models, reference_correction)

unit = st.floats(0.0, 1.0)
params_strategy = st.fixed_dictionaries({k: unit for k in (*PARAMETERS, "F0", "F1")})
GRAPHS = {name: build_graph(make()) for name, make in SEQUENCES.items()}


def _truth(model) -> dict[str, float]:
    x = model.pulse_detuning_ratio
    th = model.classification_threshold()
    rep = fidelity_at(MixtureFit(0.5, 0.5, model.mu0, model.sigma0, model.mu1, model.sigma1), th)
    return {"p": model.loading_p, "eta_op": model.eta_op, "eta_B": model.eta_surv_B, "eta_D": model.eta_surv_D,
            "depol_DB": model.p_depol_DB, "depol_BD": model.p_depol_BD,
            "eta_pi": math.sin(math.pi / 2 * math.sqrt(1 + x * x)) ** 2 / (1 + x * x),
            "F0": rep.F0, "F1": rep.F1}


# ------------------------------------------------------------------ graph


@settings(max_examples=80, deadline=None)
@given(params_strategy)
def test_graphs_are_normalized(params):
    for g in GRAPHS.values():
        assert abs(g.normalization_defect(params)) < 1e-12
        dist = outcome_distribution(g, params)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
        assert min(dist.values()) >= -1e-15


@settings(max_examples=60, deadline=None)
@given(st.fixed_dictionaries({k: st.floats(0.01, 0.99) for k in (*PARAMETERS, "F0", "F1")}))
def test_path_models_are_probabilities(params):
    for m in standard_models().values():
        assert -1e-12 <= m.evaluate(params) <= 1 + 1e-12


def test_graph_structure():
    for g in GRAPHS.values():
        g.check_acyclic()
        assert g.parameters() <= set(PARAMETERS) | {"F0", "F1"}
        assert "digraph" in g.to_dot()
    g = ProbGraph(1)
    g.add_edge("a", "b", W("p"))
    g.add_edge("b", "a", W("p"))
    with pytest.raises(GraphError):
        g.check_acyclic()
    with pytest.raises(GraphError):
        path_model(GRAPHS["survival"], {5: "B"})


def test_ideal_parameters_give_ideal_estimates():
    ideal = {k: 1.0 for k in PARAMETERS} | {"depol_DB": 0.0, "depol_BD": 0.0, "F0": 1.0, "F1": 1.0, "p": 0.6}
    models = standard_models()
    assert models["fill_fraction"].evaluate(ideal) == pytest.approx(0.6)
    for name in ("survival_bright", "pump_efficiency", "pi_transfer", "dark_survival"):
        assert models[name].evaluate(ideal) == pytest.approx(1.0)
    for name in ("depol_DB", "depol_BD"):
        assert models[name].evaluate(ideal) == pytest.approx(0.0)
    with pytest.raises(ZeroDenominatorError):
        models["survival_bright"].evaluate(ideal | {"p": 0.0})


@pytest.mark.parametrize("name", list(SEQUENCES))
def test_simulated_frequencies_match_graph(name):
    model = reference_model()
    n = 60_000
    ds = simulate_ensemble(SEQUENCES[name](), model, n, 77)
    bits = ds.bits(model.classification_threshold())
    keys, counts = np.unique(["".join(map(str, r)) for r in bits], return_counts=True)
    observed = dict(zip(keys, counts / n))
    for s, p in outcome_distribution(GRAPHS[name], _truth(model)).items():
        sd = math.sqrt(max(p * (1 - p), 1 / n) / n)
        assert abs(observed.get(s, 0.0) - p) < 5 * sd, s


# ------------------------------------------------------------------ solver


class _Linear:
    def __init__(self, a: dict[str, float], b: float = 0.0):
        self.a, self.b = a, b

    def evaluate(self, params):
        return self.b + sum(v * params[k] for k, v in self.a.items())


def test_solver_linear_system():
    ms = (Measurement("u", _Linear({"x": 1.0, "y": 1.0}), 0.7, 0.01),
          Measurement("v", _Linear({"x": 1.0, "y": -1.0}), 0.1, 0.01))
    sys_ = MeasurementSystem(ms, ("x", "y"))
    res = solve(sys_)
    assert res.converged
    assert res.values["x"] == pytest.approx(0.4) and res.values["y"] == pytest.approx(0.3)
    unc = corner_uncertainty(sys_, res)
    # linear: each corner shifts x and y by (+-s1 +- s2)/2, RMS = s/sqrt(2)
    assert unc["x"] == pytest.approx(0.01 / math.sqrt(2), rel=1e-5)
    with pytest.raises(ValueError):
        MeasurementSystem(ms[:1], ("x", "y"))


def test_solver_strict_raises_on_inconsistent_bounded_problem():
    ms = (Measurement("u", _Linear({"x": 1.0}), 1.5),)
    res = solve(MeasurementSystem(ms, ("x",)))
    assert not res.converged and res.stationary and res.values["x"] == pytest.approx(1.0)
    with pytest.raises(NonConvergenceError):
        solve(MeasurementSystem(ms, ("x",)), strict=True)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.4, 0.9), st.floats(0.9, 0.999), st.floats(0.9, 0.999), st.floats(0.0, 0.05),
       st.floats(0.0, 0.05), st.floats(0.9, 0.999))
def test_solver_recovers_truth_from_exact_forward_values(p, op, eb, ddb, dbd, epi):
    truth = {"p": p, "eta_op": op, "eta_B": eb, "depol_DB": ddb, "depol_BD": dbd, "eta_pi": epi}
    fixed = {"F0": 0.997, "F1": 0.991, "eta_D": 0.996}
    models = standard_models()
    full = truth | fixed
    measured = {q.name: (models[q.name].evaluate(full), 0.0) for q in QUANTITIES}
    system = build_system(measured, 0.997, 0.991, fixed={"eta_D": 0.996})
    res = solve(system, initial_guess(measured))
    for k, v in truth.items():
        assert res.values[k] == pytest.approx(v, abs=1e-6)


def test_reference_correction_values():
    res = reference_correction()
    assert res.converged or res.stationary
    assert res.values["p"] == pytest.approx(0.687, abs=0.002)
    assert res.values["eta_op"] == pytest.approx(0.982, abs=0.002)
    assert res.values["eta_B"] == pytest.approx(0.987, abs=0.002)
    for k in ("depol_DB", "depol_BD"):
        assert 0.0 < res.values[k] < REFERENCE_RAW[k][0]
        assert res.uncertainties[k] > 0
    assert res.values["eta_D"] == REFERENCE_FIXED["eta_D"]


def test_correction_moves_raw_values_toward_ideal():
    res = reference_correction(corners=False)
    assert res.values["eta_B"] > REFERENCE_RAW["survival_bright"][0]
    assert res.values["eta_op"] > REFERENCE_RAW["pump_efficiency"][0]
    assert res.values["eta_pi"] > REFERENCE_RAW["pi_transfer"][0]
