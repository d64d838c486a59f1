import csv
import json
import math

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from mixfield import figure_suites, load_config, run_experiment
from mixfield.cli import main
from mixfield.config import ScenarioConfig, set_path
from mixfield.harness import header_for, realize_scenario, split_streams, write_outputs

BASIC = {
    "version": 1,
    "name": "demo",
    "geometry": {"num_antennas": 16, "carrier_freq": 30e9},
    "users": [{"theta": 0.0, "r": 0.4, "field": "near"},
              {"theta": [-0.3, 0.3], "r": 150.0, "field": "far", "weight": 2.0}],
    "total_power_dbm": 30,
    "noise_power_dbm": -80,
    "seeds": [0, 1],
    "schemes": ["greedy", "full_array", {"name": "random_as", "params": {"trials": 10}}],
    "sweep": {"axes": {"total_power_dbm": [20, 30]}},
}


def test_units_are_converted_at_parse_time():
    cfg = ScenarioConfig.from_dict(BASIC)
    assert cfg.total_power == pytest.approx(1.0) and cfg.noise_power == pytest.approx(1e-11)
    assert "total_power_dbm" not in cfg.to_dict()
    cfg = ScenarioConfig.from_dict({**BASIC, "beta_db": -62,
                                    "channel": {"kind": "rician", "rician_factor_db": "inf"}})
    assert cfg.beta == pytest.approx(10 ** -6.2) and math.isinf(cfg.channel.rician_factor)


def test_config_round_trip(tmp_path):
    cfg = ScenarioConfig.from_dict(BASIC)
    again = ScenarioConfig.from_dict(yaml.safe_load(cfg.to_yaml()))
    assert again == cfg and again.config_hash() == cfg.config_hash()
    path = tmp_path / "c.yaml"
    path.write_text(cfg.to_yaml(), encoding="utf-8")
    assert load_config(path).config_hash() == cfg.config_hash()
    assert cfg.replace_seeds([7]).seeds == (7,)
    assert cfg.replace_seeds([7]).config_hash() != cfg.config_hash()


@given(st.floats(-1, 1), st.floats(0.1, 500), st.floats(0, 10))
def test_round_trip_property(theta, r, weight):
    d = {**BASIC, "users": [{"theta": theta, "r": r, "weight": weight}]}
    cfg = ScenarioConfig.from_dict(d)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("patch", [
    {"version": 2}, {"seeds": []}, {"users": []}, {"schemes": ["nope"]}, {"extras": ["x"]},
    {"bogus": 1}, {"users": [{"theta": 0.0}]}, {"users": [{"theta": 0.0, "phi": 0.1, "r": 1}]},
    {"users": [{"theta": [0.3, 0.1], "r": 1}]}, {"channel": {"kind": "rayleigh"}},
    {"sweep": {"mode": "zip", "axes": {"total_power": [1, 2], "noise_power": [1]}}},
])
def test_invalid_configs(patch):
    with pytest.raises((ValueError, KeyError)):
        ScenarioConfig.from_dict({**BASIC, **patch})


def test_set_path_selectors():
    d = ScenarioConfig.from_dict(BASIC).to_dict()
    set_path(d, "users.far.weight", 5.0)
    set_path(d, "users.0.r_rayleigh", 0.1)
    set_path(d, "total_power_dbm", 20)
    assert d["users"][1]["weight"] == 5.0 and d["users"][0]["weight"] == 1.0
    assert "r" not in d["users"][0] and "total_power" not in d
    with pytest.raises(ValueError):
        set_path(d, "users.mid.weight", 1.0)


def test_streams_are_independent_and_stable():
    a, b = split_streams(3), split_streams(3)
    assert list(a) == ["placement", "nlos", "csi", "random_as"]
    draws = {k: np.random.default_rng(v).random() for k, v in a.items()}
    assert len(set(draws.values())) == 4
    assert np.random.default_rng(b["csi"]).random() == draws["csi"]


def test_placement_draws_within_ranges():
    cfg = ScenarioConfig.from_dict({**BASIC, "users": [
        {"phi": [-0.5, 0.5], "r_rayleigh": [0.1, 0.2]}, {"theta": [0.1, 0.2], "r": [100, 200]}]})
    for seed in range(10):
        sc, _ = realize_scenario(cfg, seed)
        near, far = sc.users
        assert abs(near.theta) <= np.sin(0.5) and near.field_label == "near"
        assert 0.1 <= far.theta <= 0.2 and 100 <= far.r <= 200


def test_run_is_deterministic_and_complete(tmp_path):
    cfg = ScenarioConfig.from_dict(BASIC)
    rows = run_experiment(cfg)
    assert len(rows) == 2 * 2 * 3 and not any(r["error"] for r in rows)
    assert [r["row"] for r in rows] == list(range(12))
    head = header_for(cfg, rows)
    assert head[:6] == ["row", "sweep_index", "seed", "total_power_dbm", "scheme", "error"]
    p1 = write_outputs(cfg, rows, tmp_path / "a", "run")
    p2 = write_outputs(cfg, run_experiment(cfg), tmp_path / "b", "run")
    assert open(p1, "rb").read() == open(p2, "rb").read()
    # common random numbers: a seed places users identically at every sweep point
    a, _ = realize_scenario(cfg.with_overrides({"total_power_dbm": 20}), 1)
    b, _ = realize_scenario(cfg.with_overrides({"total_power_dbm": 30}), 1)
    assert a.users == b.users and np.array_equal(a.H, b.H)
    w = rows[0]
    assert w["weighted_sum_rate"] == pytest.approx(w["rate_0"] + 2 * w["rate_1"])
    assert w["far_sum_rate"] == pytest.approx(w["rate_1"])


def test_failures_are_reported_per_row(tmp_path):
    cfg = ScenarioConfig.from_dict({**BASIC, "schemes": ["greedy", "two_user_ao", "subarray"],
                                    "sweep": {}, "seeds": [0]})
    rows = run_experiment(cfg)
    errs = {r["scheme"]: r["error"] for r in rows}
    assert errs["greedy"] == "" and errs["two_user_ao"] == ""
    assert errs["subarray"].startswith("TypeError") or errs["subarray"].startswith("ValueError")


def test_parallel_matches_serial():
    cfg = ScenarioConfig.from_dict({**BASIC, "schemes": ["greedy"]})
    assert run_experiment(cfg, jobs=2) == run_experiment(cfg, jobs=1)


def test_presets_are_valid_and_record_scales():
    suites = figure_suites()
    assert {"correlation_gap", "decay_fit", "decay_oracle", "two_user_gap", "multi_user_decay",
            "pdd_convergence", "power_sweep", "csi_error", "weight_sweep", "rician"} <= set(suites)
    for name, cfg in suites.items():
        assert set(cfg.notes) == {"original_scale", "desk_scale"}, name
        heavy = any(s.name in ("pdd", "pdd_trace", "random_as", "oracle") for s in cfg.schemes)
        if heavy:
            assert cfg.num_antennas <= 64


def test_cli_run_and_manifest(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({**BASIC, "schemes": ["greedy"], "sweep": {}}), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seeds"] == [4] and manifest["library_version"]
    assert manifest["config_hash"] == load_config(out / "config.yaml").config_hash()
    with open(out / "demo.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["seed"] == "4"
    assert "wrote 1 rows" in capsys.readouterr().out


def test_cli_oracle_adds_gaps(tmp_path):
    d = {**BASIC, "geometry": {"num_antennas": 6, "carrier_freq": 30e9}, "sweep": {},
         "seeds": [0], "schemes": ["greedy", "full_array"]}
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump(d), encoding="utf-8")
    assert main(["oracle", str(cfg), "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "demo.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["scheme"] for r in rows] == ["greedy", "full_array", "oracle"]
    assert all(float(r["oracle_gap"]) >= -1e-9 for r in rows)


def test_cli_preset_list(capsys):
    assert main(["preset", "--list"]) == 0
    assert "pdd_convergence" in capsys.readouterr().out
    assert main(["run", "x.yaml", "--jobs", "0"]) == 2


def test_correlation_gap_preset_dip_and_correlation(tmp_path):
    assert main(["preset", "correlation_gap", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "correlation_gap.csv", encoding="utf-8") as fh:
        rows = {float(r["users.1.theta"]): r for r in csv.DictReader(fh)}
    assert float(rows[0.02]["sum_rate"]) < float(rows[0.5]["sum_rate"])
    assert float(rows[0.0]["correlation"]) > float(rows[0.5]["correlation"])
