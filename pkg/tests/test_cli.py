import json

import pytest

from tddnet import cli, validation


SMALL_CONFIG = {
    "network": {
        "sap_density": 1e-4, "ue_density": 1e-3,
        "sap_power_dbm": 23.0, "ue_power_dbm": 17.0,
        "path_loss_exp": 3.8, "sir_threshold_db": 0.0, "ue_cap": 3,
    },
    "traffic": {"ul_rate": 0.02, "dl_rate": 0.02},
    "tdd": {"variant": "static", "dl_fraction": 0.5},
    "simulation": {
        "region_radius_m": 300.0, "slots": 400, "warmup": 50,
        "replications": 2, "base_seed": 7,
    },
}


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


def test_analyze_default_config(capsys):
    assert cli.main(["analyze"]) == 0
    out = capsys.readouterr().out
    assert "DL throughput" in out and "UL throughput" in out


def test_analyze_writes_json(config_path, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert cli.main(["analyze", "--config", config_path, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"dl_throughput", "ul_throughput", "diagnostics"}
    assert 0.0 <= doc["dl_throughput"] <= 1.0


def test_analyze_dynamic_variant(tmp_path, capsys):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["tdd"] = {"variant": "dynamic"}
    path = tmp_path / "dyn.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["analyze", "--config", str(path)]) == 0
    assert "dynamic" in capsys.readouterr().out


def test_missing_config_exits_2(capsys):
    assert cli.main(["analyze", "--config", "/nonexistent/cfg.json"]) == 2
    assert "error" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"network": {}}))
    assert cli.main(["analyze", "--config", str(path)]) == 2


def test_simulate_csv_schema_and_determinism(config_path, tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        rc = cli.main(["simulate", "--config", config_path,
                       "--out", str(out), "--workers", "1"])
        assert rc == 0
    text = out1.read_text()
    lines = text.strip().split("\n")
    assert lines[0] == "seed,direction,mean_throughput,ci,service_rate_est,busy_fraction"
    assert len(lines) == 1 + 2 * 2 + 2  # header + 2 reps x 2 dirs + aggregate
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[1] in ("DL", "UL")
        for cell in (cells[0], *cells[2:]):
            assert cell == "NA" or float(cell) == float(cell)
    assert lines[-2].startswith("NA,DL,") and lines[-1].startswith("NA,UL,")
    assert text == out2.read_text()  # byte-identical rerun


def test_simulate_seed_override_changes_output(config_path, tmp_path, capsys):
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    cli.main(["simulate", "--config", config_path, "--out", str(out1),
              "--workers", "1", "--seed", "1"])
    cli.main(["simulate", "--config", config_path, "--out", str(out2),
              "--workers", "1", "--seed", "2"])
    assert out1.read_text() != out2.read_text()


def test_simulate_requires_simulation_block(tmp_path, capsys):
    cfg = {k: v for k, v in SMALL_CONFIG.items() if k != "simulation"}
    path = tmp_path / "nosim.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["simulate", "--config", str(path), "--workers", "1"]) == 2


def test_simulate_rejects_warmup_past_slots(tmp_path, capsys):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["simulation"]["warmup"] = 400
    path = tmp_path / "warm.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["simulate", "--config", str(path), "--workers", "1"]) == 2


def _sweep_spec(tmp_path, **overrides):
    spec = {"axis": "dl_ul_ratio", "values": [0.5, 1.0, 2.0, 4.0],
            "modes": ["STDD", "DTDD"], "engines": ["analysis"]}
    spec.update(overrides)
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(spec))
    return str(path)


def test_sweep_analysis_engine(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path)
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--spec", spec, "--config", config_path,
                     "--out", str(out), "--workers", "1"]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "axis_value,mode,engine,direction,throughput,ci,error"
    assert len(lines) == 1 + 4 * 2 * 1 * 2  # values x modes x engines x dirs
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[1] in ("STDD", "DTDD")
        assert cells[2] == "analysis"
        assert float(cells[4]) >= 0.0
        assert cells[6] == ""  # no per-point errors


def test_sweep_byte_identical_rerun(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["sweep", "--spec", spec, "--config", config_path,
              "--out", str(out1), "--workers", "1"])
    cli.main(["sweep", "--spec", spec, "--config", config_path,
              "--out", str(out2), "--workers", "1"])
    assert out1.read_text() == out2.read_text()


def test_sweep_density_axis_with_preset(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path, axis="sap_ue_density_ratio",
                       values=[0.05, 0.1, 0.2], traffic_preset="light")
    out = tmp_path / "dens.csv"
    assert cli.main(["sweep", "--spec", spec, "--config", config_path,
                     "--out", str(out), "--workers", "1"]) == 0
    assert len(out.read_text().strip().split("\n")) == 1 + 3 * 2 * 2


def test_sweep_simulation_engine(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path, values=[1.0], modes=["STDD"],
                       engines=["analysis", "simulation"])
    out = tmp_path / "sim.csv"
    assert cli.main(["sweep", "--spec", spec, "--config", config_path,
                     "--out", str(out), "--workers", "1"]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 1 * 1 * 2 * 2
    engines = {line.split(",")[2] for line in lines[1:]}
    assert engines == {"analysis", "simulation"}


def test_sweep_rejects_unsorted_values(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path, values=[2.0, 1.0])
    assert cli.main(["sweep", "--spec", spec, "--config", config_path,
                     "--workers", "1"]) == 2


def test_sweep_rejects_unknown_axis(config_path, tmp_path, capsys):
    spec = _sweep_spec(tmp_path, axis="weather")
    assert cli.main(["sweep", "--spec", spec, "--config", config_path,
                     "--workers", "1"]) == 2


def test_sweep_missing_spec_exits_2(config_path, capsys):
    assert cli.main(["sweep", "--spec", "/nonexistent/spec.json",
                     "--config", config_path]) == 2


def test_validate_fast_passes(capsys):
    assert cli.main(["validate", "--level", "fast"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out


def test_validate_fast_catches_mutation(monkeypatch, capsys):
    # corrupt one special function; the cross-check suite must notice
    from tddnet import analysis

    real = analysis.v_factor
    monkeypatch.setattr(analysis, "v_factor",
                        lambda theta, alpha: real(theta, alpha) * 1.001)
    assert cli.main(["validate", "--level", "fast"]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv("TDDNET_WORKERS", "5")
    assert cli.default_workers() == 5
    monkeypatch.delenv("TDDNET_WORKERS")
    assert cli.default_workers() >= 1
