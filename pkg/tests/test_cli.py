from __future__ import annotations

import json

import pytest
import yaml

from ybqnd.cli import DEFAULTS, ConfigError, load_config, main


def _run(tmp_path, *args, cfg: dict | None = None, name="out"):
    argv = list(args) + ["--out", str(tmp_path / name)]
    if cfg is not None:
        p = tmp_path / f"{name}.yaml"
        p.write_text(yaml.safe_dump(cfg))
        argv += ["--config", str(p)]
    return main(argv), tmp_path / name


def test_unknown_key_rejected_with_exit_2(tmp_path):
    code, out = _run(tmp_path, "zeno", "--seed", "1", cfg={"N": 5, "bogus": 1})
    assert code == 2
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "ConfigError" and "bogus" in err["message"]


def test_missing_seed_and_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        load_config("zeno", None, None)
    with pytest.raises(ConfigError):
        load_config("zeno", None, -1)
    code, _ = _run(tmp_path, "collection-efficiency", "--seed", "1", cfg={"numerical_aperture": 1.5})
    assert code == 2
    code, _ = _run(tmp_path, "zeno", "--seed", "1", "--config", str(tmp_path / "missing.yaml"), name="m")
    assert code == 2


def test_defaults_validate():
    for scenario in DEFAULTS:
        if scenario == "analyze-dataset":
            continue
        assert load_config(scenario, None, 3)["seed"] == 3


def test_truth_columns_only_for_simulation(tmp_path):
    code, out = _run(tmp_path, "simulate-circuit", "--seed", "5", "--truth-columns", cfg={"shots": 200})
    assert code == 0
    header = (out / "dataset.csv").read_text().splitlines()[0]
    assert "state_0" in header
    with pytest.raises(SystemExit):
        main(["zeno", "--truth-columns", "--seed", "1", "--out", str(tmp_path / "z")])


def test_same_seed_same_outputs(tmp_path):
    cfg = {"shots": 500, "circuit": {"preset": "pi_pulse"}}
    hashes = []
    for k in range(2):
        code, out = _run(tmp_path, "simulate-circuit", "--seed", "9", cfg=cfg, name=f"r{k}")
        assert code == 0
        hashes.append(json.loads((out / "manifest.json").read_text()))
    assert hashes[0]["outputs"] == hashes[1]["outputs"]
    assert hashes[0]["config_sha256"] == hashes[1]["config_sha256"]
    code, out = _run(tmp_path, "simulate-circuit", "--seed", "10", cfg=cfg, name="r2")
    assert json.loads((out / "manifest.json").read_text())["outputs"] != hashes[0]["outputs"]


def test_manifest_lists_every_output(tmp_path):
    code, out = _run(tmp_path, "collection-efficiency", "--seed", "2", cfg={"samples": 10000})
    assert code == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["scenario"] == "collection-efficiency" and m["seed"] == 2
    for name in m["outputs"]:
        assert (out / name).is_file()


@pytest.mark.parametrize("scenario,cfg", [
    ("loss-lifetime", None),
    ("polarizability-scan", {"step_nm": 2.0}),
    ("zeno", {"shots": 300, "N": 4}),
    ("predict-depol-curve", {"n_points": 5}),
])
def test_quick_scenarios_run(tmp_path, scenario, cfg):
    code, out = _run(tmp_path, scenario, "--seed", "4", cfg=cfg)
    assert code == 0, (out / "error.json").read_text() if (out / "error.json").exists() else ""
    assert (out / "manifest.json").is_file()


def test_analyze_simulated_dataset(tmp_path):
    code, sim = _run(tmp_path, "simulate-circuit", "--seed", "6", cfg={"shots": 3000}, name="sim")
    assert code == 0
    cfg = {"dataset": str(sim / "dataset.csv"), "estimators": [{"kind": "depol_DB"}],
           "bootstrap": {"n_sets": 20, "set_size": 500}}
    code, out = _run(tmp_path, "analyze-dataset", "--seed", "6", cfg=cfg, name="ana")
    assert code == 0
