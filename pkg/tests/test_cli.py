import json

import numpy as np
import pytest

from dyncluster import artifacts
from dyncluster.cli import main
from dyncluster.config import load_config, preset
from dyncluster.engine import DatasetWindow
from dyncluster.stochastics import PRNG_ID


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 else out.err)


def test_snapshot_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    win = DatasetWindow(5, rng.normal(size=(5, 3)) * 1e3, np.arange(5), np.array([0, 1, 2, 1, 0]))
    path = tmp_path / artifacts.snapshot_name(42)
    artifacts.write_snapshot_csv(path, win)
    assert path.name == "tick_000000042.csv"
    assert path.read_text().splitlines()[0] == "x1,x2,x3,birth_tick,source_dgc"
    points, birth, source = artifacts.read_snapshot_csv(path)
    np.testing.assert_array_equal(points, win.points)
    np.testing.assert_array_equal(birth, win.birth)
    np.testing.assert_array_equal(source, win.source)


def test_generate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "gen"
    code, summary = run_cli(capsys, "generate", "--preset", "kitchen-sink", "--seed", "5",
                            "--ticks", "400", "--out", str(out), "--snapshot-every", "100")
    assert code == 0
    assert summary["ticks"] == 400
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == [artifacts.snapshot_name(t) for t in (0, 100, 200, 300, 400)]
    header, events = artifacts.read_event_log(out / "events.jsonl")
    assert header["prng"] == PRNG_ID and header["seed"] == 5
    cfg = load_config(out / "config.toml")
    assert header["config_hash"] == artifacts.config_hash(cfg)
    assert cfg.run.seed == 5 and cfg.run.ticks == 400
    assert len(events) == sum(summary["events"].values())


def test_inspect(tmp_path, capsys):
    out = tmp_path / "gen"
    run_cli(capsys, "generate", "--preset", "fig3-rho09", "--ticks", "50", "--out", str(out))
    code, info = run_cli(capsys, "inspect", str(out / "events.jsonl"))
    assert code == 0
    assert info["by_kind"] == {"local": 50}
    assert info["local_by_dgc"] == {"0": 50}
    assert (info["first_tick"], info["last_tick"]) == (1, 50)


def test_run_report(tmp_path, capsys):
    out = tmp_path / "run"
    code, report = run_cli(capsys, "run", "--preset", "kitchen-sink", "--budget", "300",
                           "--root-threshold", "20000", "--out", str(out))
    assert code == 0
    on_disk = json.loads((out / "report.json").read_text())
    assert on_disk == report
    assert report["evaluations"] == 300
    assert report["final_state"]["tick"] == 300
    assert report["offline_performance"] > 0
    assert report["root_survival"] * report["deployments"] == 300
    rows = (out / "best.csv").read_text().splitlines()
    assert rows[0] == "tick,value,best,changed,deployed_value" and len(rows) == 301


def test_run_needs_threshold(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--preset", "fig1", "--budget", "5"])


def test_export_density(tmp_path, capsys):
    path = tmp_path / "d.csv"
    code, info = run_cli(capsys, "export-density", "--preset", "fig1", "--resolution", "11",
                         "--out", str(path))
    assert code == 0 and info["cells"] == 121
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,density" and len(lines) == 122


def test_export_density_rejects_one_dimension(tmp_path, capsys):
    code, err = run_cli(capsys, "export-density", "--preset", "fig4a", "--ticks", "0",
                        "--out", str(tmp_path / "x.csv"))
    assert code == 2 and "d = 2" in err


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[bounds]\nweight = [0.0, 1.0]\n")
    code, err = run_cli(capsys, "generate", "--config", str(path), "--out", str(tmp_path / "o"))
    assert code == 2 and "bounds.weight" in err


def test_presets_listing(capsys):
    code, info = run_cli(capsys, "presets")
    assert code == 0 and "fig1" in info["presets"] and "kitchen-sink" in info["presets"]


def test_generate_is_bitwise_reproducible(tmp_path, capsys):
    for tag in ("a", "b"):
        run_cli(capsys, "generate", "--preset", "kitchen-sink", "--seed", "11", "--ticks", "300",
                "--out", str(tmp_path / tag))
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_config_toml_reproduces_run(tmp_path, capsys):
    run_cli(capsys, "generate", "--preset", "fig3-rho05", "--ticks", "30", "--out", str(tmp_path / "a"))
    run_cli(capsys, "generate", "--config", str(tmp_path / "a" / "config.toml"), "--out", str(tmp_path / "b"))
    assert (tmp_path / "a" / "events.jsonl").read_bytes() == (tmp_path / "b" / "events.jsonl").read_bytes()
    assert preset("fig3-rho05").name == load_config(tmp_path / "b" / "config.toml").name
