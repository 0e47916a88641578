import json
from pathlib import Path

import numpy as np
import pytest

from stochnet import parse_experiment_config, run_experiment
from stochnet.cli import main

TINY = {
    "name": "tiny",
    "network": {
        "n_sites": 3,
        "omega": [5.0, 5.0, 5.0],
        "couplings": [[1, 2, 2.0], [1, 3, 1.0], [2, 3, 1.0]],
        "noise": [[1, 2, 0.38], [1, 3, 0.38], [2, 3, 0.38]],
    },
    "scenario": "compare",
    "initial_state": {"site": 1},
    "grid": {"t_start": 0.0, "t_end": 0.5, "sample_times": [0.0, 0.25, 0.5]},
    "solver": {"dt": 0.001, "mode": "fixed"},
    "oracle": {"n_traj": 64, "dt": 0.0005, "base_seed": 11, "unitarity_tol": 0.001},
    "outputs": {"observables": ["populations", "coherences"], "snapshot_times": [0.5]},
}


def tiny_config(**changes):
    doc = json.loads(json.dumps(TINY))
    doc.update(changes)
    return doc


def read_stable_files(out_dir):
    """Data files only: timings are wall-clock and excluded by contract."""
    out = {}
    for p in sorted(Path(out_dir).iterdir()):
        if p.name.endswith("_timings.json"):
            continue
        out[p.name] = p.read_bytes()
    return out


def test_compare_run_writes_expected_files(tmp_path):
    cfg = parse_experiment_config(tiny_config())
    report = run_experiment(cfg, out_dir=tmp_path)
    names = {Path(f).name for f in report.files}
    assert "tiny_master_timeseries.csv" in names
    assert "tiny_oracle_timeseries.csv" in names
    assert "tiny_master_snapshot_t0.5.json" in names
    assert "tiny_delta_rho_t0.5.json" in names
    assert "tiny_report.json" in names
    assert "tiny_timings.json" in names
    assert report.metrics["max_abs_deviation"] < 0.2
    assert report.timings["oracle_integration_s"] > 0


def test_rerun_is_byte_identical(tmp_path):
    cfg = parse_experiment_config(tiny_config())
    run_experiment(cfg, out_dir=tmp_path / "a")
    run_experiment(cfg, out_dir=tmp_path / "b")
    a = read_stable_files(tmp_path / "a")
    b = read_stable_files(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], f"{name} differs between reruns"


def test_timeseries_header_and_values(tmp_path):
    cfg = parse_experiment_config(tiny_config())
    run_experiment(cfg, out_dir=tmp_path)
    lines = (tmp_path / "tiny_master_timeseries.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["time_ps", "pop_1", "pop_2", "pop_3"]
    assert "re_coh_1_2" in header and "im_coh_2_3" in header
    first = dict(zip(header, lines[1].split(",")))
    assert float(first["time_ps"]) == 0.0
    assert float(first["pop_1"]) == 1.0
    # oracle series carries standard-error columns
    oracle_header = (tmp_path / "tiny_oracle_timeseries.csv").read_text().splitlines()[0]
    assert "se_pop_1" in oracle_header


def test_snapshot_is_self_describing(tmp_path):
    doc = tiny_config(name="two", scenario="two",
                      initial_state={"kind": "separable", "sites": [1, 2]},
                      oracle={"n_traj": 16, "dt": 0.0005, "base_seed": 1})
    doc["scenario"] = "two"
    cfg = parse_experiment_config(doc)
    run_experiment(cfg, out_dir=tmp_path)
    snap = json.loads((tmp_path / "two_master_snapshot_t0.5.json").read_text())
    assert snap["kind"] == "two_particle"
    assert snap["dim"] == 9
    assert snap["index_base"] == 1
    assert "pair_index_convention" in snap
    mat = np.array(snap["real"]) + 1j * np.array(snap["imag"])
    assert abs(np.trace(mat) - 1.0) < 1e-9


def test_two_particle_metrics(tmp_path):
    doc = tiny_config(name="two", scenario="two",
                      initial_state={"kind": "incoherent", "sites": [1, 2]})
    cfg = parse_experiment_config(doc)
    report = run_experiment(cfg, out_dir=tmp_path)
    snap = report.metrics["joint_probability_snapshots"]["0.5"]
    assert 0.0 <= snap["bunching_ratio"] <= 1.0
    lines = (tmp_path / "two_master_timeseries.csv").read_text().splitlines()
    assert lines[0].split(",")[1] == "gamma_1_1"


def test_steady_state_scenario(tmp_path):
    doc = tiny_config(name="ss", scenario="steady-state",
                      grid={"t_start": 0.0, "t_end": 50.0, "sample_times": [50.0]},
                      outputs={"observables": ["populations", "coherences"]})
    cfg = parse_experiment_config(doc)
    report = run_experiment(cfg, out_dir=tmp_path)
    assert np.abs(np.array(report.metrics["steady_populations"]) - 1 / 3).max() < 1e-6
    assert report.metrics["steady_max_coherence"] < 1e-6
    assert report.metrics["final_vs_steady_max_dev"] < 1e-6
    assert (tmp_path / "ss_steady_state.json").exists()


def test_oracle_scenarios(tmp_path):
    doc = tiny_config(name="osingle", scenario="oracle-single")
    report = run_experiment(parse_experiment_config(doc), out_dir=tmp_path)
    assert "ensemble" in report.data
    assert not any("master" in Path(f).name for f in report.files)


def test_misaligned_oracle_grid_is_a_config_error(tmp_path):
    doc = tiny_config()
    doc["oracle"]["dt"] = 0.0003
    from stochnet.errors import ConfigParseError
    with pytest.raises(ConfigParseError, match="oracle.dt"):
        run_experiment(parse_experiment_config(doc), out_dir=tmp_path, write=False)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_validate_ok(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(TINY))
    assert main(["validate", str(path)]) == 0
    assert "tiny: ok" in capsys.readouterr().out


def test_cli_validate_rejects_bad_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(tiny_config(scenario="nope")))
    assert main(["validate", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_missing_file(capsys):
    assert main(["run", "/nonexistent/config.json"]) == 1
    assert "not found" in capsys.readouterr().err


def test_cli_run_with_overrides(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(TINY))
    out = tmp_path / "results"
    code = main(["run", str(path), "--out", str(out), "--n-traj", "32", "--seed", "3"])
    assert code == 0
    report = json.loads((out / "tiny_report.json").read_text())
    assert report["config"]["oracle"]["n_traj"] == 32
    assert report["config"]["oracle"]["base_seed"] == 3


def test_cli_out_env_var(tmp_path, monkeypatch, capsys):
    doc = tiny_config(name="envtest", scenario="single")
    del doc["oracle"]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    target = tmp_path / "from-env"
    monkeypatch.setenv("STOCHNET_OUT", str(target))
    assert main(["run", str(path)]) == 0
    assert (target / "envtest_master_timeseries.csv").exists()


def test_cli_presets_validate(capsys):
    # presets ship in the package and must parse; running them is the
    # acceptance suite's job (they are deliberately expensive)
    from stochnet.cli import _load_preset_text
    from stochnet.config import parse_config_document
    for name in ("fig2", "fig3", "appendixB"):
        configs = parse_config_document(_load_preset_text(name))
        assert configs, name
        for cfg in configs:
            assert cfg.network.n_sites == 3


def test_cli_bundle_run(tmp_path):
    bundle = {"experiments": [
        dict(tiny_config(name="b1", scenario="single")),
        dict(tiny_config(name="b2", scenario="single")),
    ]}
    path = tmp_path / "bundle.json"
    path.write_text(json.dumps(bundle))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 0
    assert (out / "b1_master_timeseries.csv").exists()
    assert (out / "b2_master_timeseries.csv").exists()
