from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ybqnd.circuits import (AtomReadout, Circuit, CircuitError, Conditional, Dataset, Dephasing, Hold, OpticalPump,
                            QubitReadout, ReadoutErrorModel, Rotate, circuit_from_dict, circuit_to_dict,
                            depolarization_circuit, feedforward_circuit, feedforward_controller, pi_pulse_circuit,
                            pulse, ramsey_circuit, simulate_ensemble, simulate_shot, survival_circuit, t1_circuit,
                            reference_model, variable_basis_sequence, zeno_circuit)
from ybqnd.dynamics import t1_curve

IDEAL = ReadoutErrorModel.ideal()


def _within(observed: float, expected: float, n: int, k: float = 4.0) -> bool:
    s = math.sqrt(max(expected * (1 - expected), 1e-6) / n)
    return abs(observed - expected) <= k * s


# ------------------------------------------------------------------ structure


def test_circuit_validation():
    with pytest.raises(CircuitError):
        Circuit((OpticalPump(),))
    with pytest.raises(CircuitError):
        Circuit((QubitReadout(),), "2")
    with pytest.raises(CircuitError):
        Circuit((QubitReadout(), Conditional("XOR", (0, 1), pulse(math.pi)), QubitReadout()))
    with pytest.raises(ValueError):
        Conditional("AND", (0,), pulse(math.pi))
    with pytest.raises(ValueError):
        Hold(-1.0)
    c = feedforward_circuit(["XOR", "XNOR"])
    assert c.n_readouts == 6
    assert c.readout_kinds()[-1] == "atom"


def test_feedforward_controller_truth_table():
    assert feedforward_controller("XOR", [0, 1]) and feedforward_controller("XOR", [1, 0])
    assert not feedforward_controller("XOR", [1, 1])
    assert feedforward_controller("XNOR", [0, 0]) and not feedforward_controller("XNOR", [0, 1])
    with pytest.raises(ValueError):
        feedforward_controller("XOR", [0, None])


def test_circuit_dict_round_trip():
    for c in (feedforward_circuit(["XOR"] * 2), ramsey_circuit(0.1, 0.5, echo=True), pi_pulse_circuit(),
              variable_basis_sequence(["+Z", "-X"])):
        assert circuit_from_dict(circuit_to_dict(c)) == c
    d = {"initial_state": "+", "blocks": [{"kind": "Rotate", "pulse": {"angle": math.pi}}, {"kind": "QubitReadout"}]}
    assert circuit_from_dict(d).blocks[0].pulse == pulse(math.pi)
    with pytest.raises(CircuitError):
        circuit_from_dict({"blocks": [{"kind": "Teleport"}]})


def test_dephasing_validation():
    with pytest.raises(ValueError):
        Dephasing(1.0, 1.0)
    d = Dephasing(0.37, 1.40)
    assert d.sigma_static**2 + d.sigma_hold**2 == pytest.approx(2 / 0.37**2)


# ------------------------------------------------------------------ determinism


def test_shot_determinism_and_seed_sensitivity():
    m = reference_model()
    c = depolarization_circuit()
    assert simulate_shot(c, m, 5, 17) == simulate_shot(c, m, 5, 17)
    a = simulate_ensemble(c, m, 300, 9)
    b = simulate_ensemble(c, m, 300, 9)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, simulate_ensemble(c, m, 300, 10).counts)


def test_worker_count_does_not_change_results():
    m = reference_model()
    c = pi_pulse_circuit()
    a = simulate_ensemble(c, m, 2400, 3, workers=1)
    b = simulate_ensemble(c, m, 2400, 3, workers=3)
    assert np.array_equal(a.counts, b.counts)
    assert np.array_equal(a.states, b.states)


def test_shots_are_prefix_stable():
    m = reference_model()
    c = survival_circuit()
    assert np.array_equal(simulate_ensemble(c, m, 50, 1).counts, simulate_ensemble(c, m, 80, 1).counts[:50])


# ------------------------------------------------------------------ truth consistency


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_truth_labels_consistent_with_counts(seed):
    m = ReadoutErrorModel.ideal(loading_p=0.7, eta_op=0.9, eta_surv_B=0.95, eta_surv_D=0.97,
                                p_depol_DB=0.05, p_depol_BD=0.05)
    ds = simulate_ensemble(feedforward_circuit(["XOR", "XNOR"]), m, 40, seed, keep_records=True)
    for rec in ds.records:
        for c, bit, s in zip(rec.counts, rec.classical_bits, rec.readout_states):
            assert bit == (1 if c >= 50 else 0)
            if s == -1:
                assert bit == 0
        if not rec.loaded:
            assert all(s == -1 for s in rec.readout_states)
        # once lost, never back
        gone = [s == -1 for s in rec.readout_states]
        assert gone == sorted(gone)
        # every readout (atom readouts pump first) is bright exactly when the atom is in |0>
        for bit, st_ in zip(rec.classical_bits, rec.readout_states):
            assert bit == (1 if st_ == 0 else 0)


def test_ideal_pi_pulse_sequence():
    ds = simulate_ensemble(Circuit((OpticalPump(), QubitReadout(), Rotate(pulse(math.pi)), QubitReadout()), "1"),
                           IDEAL, 200, 1)
    assert np.all(ds.bits() == [1, 0])


def test_pump_efficiency_statistics():
    m = ReadoutErrorModel.ideal(eta_op=0.9)
    ds = simulate_ensemble(Circuit((OpticalPump(), QubitReadout()), "1"), m, 20000, 2)
    assert _within(ds.bits()[:, 0].mean(), 0.9, 20000)


def test_detuned_pi_pulse_transfer():
    m = ReadoutErrorModel.ideal().with_pi_fidelity(0.99)
    ds = simulate_ensemble(Circuit((Rotate(pulse(math.pi)), QubitReadout()), "1"), m, 20000, 3)
    assert _within(ds.bits()[:, 0].mean(), 0.99**2, 20000)


def test_feedforward_latency_in_elapsed_time():
    m = ReadoutErrorModel.ideal()
    rec = simulate_shot(feedforward_circuit(["XOR"]), m, 0, 0)
    assert rec.elapsed >= m.feedforward_latency + 4 * m.readout_duration


def test_ideal_feedforward_is_deterministic():
    ds = simulate_ensemble(feedforward_circuit(["XOR", "XNOR"]), IDEAL, 2000, 4)
    b = ds.bits()[:, :-1]
    assert np.all(b[:, 2] == b[:, 0])
    assert np.all(b[:, 4] != b[:, 0])
    assert abs(np.mean(b[:, 1] == b[:, 0]) - 0.5) < 0.05


def test_zeno_circuit_frozen_at_zero_angle():
    ds = simulate_ensemble(zeno_circuit(0.0, 6), IDEAL, 500, 5)
    b = ds.bits()[:, :-1]
    assert np.all(b == b[:, :1])


def test_t1_decay_statistics():
    m = ReadoutErrorModel.ideal(T1=1.0)
    n = 20000
    ds = simulate_ensemble(t1_circuit(0.7), m, n, 6)
    b = ds.bits()
    same = float(np.mean(b[:, 0] == b[:, 1]))
    assert _within(same, float(t1_curve(np.array([0.7]), 1.0)[0]), n)


@pytest.mark.parametrize("echo,T", [(False, 0.37), (True, 1.40)])
def test_dephasing_reproduces_gaussian_contrast(echo, T):
    m = ReadoutErrorModel.ideal(dephasing=Dephasing(0.37, 1.40))
    n = 20000
    p = [float(np.mean(simulate_ensemble(ramsey_circuit(T, ph, echo), m, n, 7 + k).bits()[:, 1]))
         for k, ph in enumerate((0.0, math.pi))]
    contrast = abs(p[1] - p[0])
    assert abs(contrast - math.exp(-1)) < 4 * math.sqrt(0.5 / n)


def test_hold_loss():
    m = ReadoutErrorModel.ideal(hold_loss_lifetime=1.0)
    n = 20000
    ds = simulate_ensemble(Circuit((Hold(0.5), AtomReadout()), "0"), m, n, 8)
    assert _within(ds.bits()[:, 0].mean(), math.exp(-0.5), n)


# ------------------------------------------------------------------ datasets


def test_csv_round_trip_with_truth():
    m = reference_model()
    ds = simulate_ensemble(depolarization_circuit(), m, 100, 11)
    text = ds.to_csv(truth_columns=True)
    assert "\r\n" in text and text.splitlines()[0].startswith("shot,count_0")
    back = Dataset.from_csv(text, ds.circuit, m)
    assert np.array_equal(back.counts, ds.counts)
    assert np.array_equal(back.states, ds.states)
    assert np.array_equal(back.loaded, ds.loaded)
    plain = ds.to_csv()
    assert "state_0" not in plain.splitlines()[0]


def test_metadata_is_json_ready():
    import json
    ds = simulate_ensemble(depolarization_circuit(), reference_model(), 10, 1)
    md = json.loads(json.dumps(ds.metadata()))
    assert md["n_shots"] == 10
    assert circuit_from_dict(md["circuit"]) == ds.circuit


def test_bits_thresholds():
    ds = simulate_ensemble(depolarization_circuit(), reference_model(), 100, 1)
    assert np.array_equal(ds.bits(-1e9), np.ones_like(ds.counts, dtype=np.int8))
    assert ds.bits([1e9, -1e9, 1e9])[:, 1].all()


def test_threshold_from_mixture():
    m = reference_model()
    th = m.classification_threshold()
    assert m.mu0 < th < m.mu1
    assert ReadoutErrorModel.ideal().classification_threshold() == 50.0
    with pytest.raises(ValueError):
        ReadoutErrorModel(loading_p=1.5)
    with pytest.raises(ValueError):
        simulate_ensemble(depolarization_circuit(), m, 0, 1)
