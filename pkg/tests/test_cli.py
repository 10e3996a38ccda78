import csv
import json
import os

import pytest

from crnetsim.cli import (ConfigError, build_config, main, parse_config_file,
                          PRESETS)

FAST_FLOOD = ["--set", "lambda_s=400", "--set", "window_half=0.5",
              "--set", "lambda_pt=20", "--set", "horizon=5"]


def _run(*argv):
    return main(list(argv))


def _read(path):
    with open(path, "rb") as f:
        return f.read()


def test_unknown_preset_is_rejected(tmp_path, capsys):
    assert _run("flood", "--preset", "nope", "--out", str(tmp_path)) == 2
    assert "unknown preset" in capsys.readouterr().err
    assert not os.listdir(tmp_path)


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    assert _run("flood", "--set", "lambdas=700", "--out", str(tmp_path)) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_invalid_physics_named_in_error(tmp_path, capsys):
    assert _run("flood", "--set", "r_p=-1", "--out", str(tmp_path)) == 2
    assert "r_p" in capsys.readouterr().err
    assert not os.listdir(tmp_path)  # nothing written on config errors


def test_empty_network_is_an_error(tmp_path, capsys):
    assert _run("flood", "--set", "lambda_s=0", "--set", "window_half=0.2",
                "--out", str(tmp_path)) == 2
    assert "empty" in capsys.readouterr().err


def test_set_requires_key_value(tmp_path, capsys):
    assert _run("flood", "--set", "lambda_s", "--out", str(tmp_path)) == 2
    assert "KEY=VALUE" in capsys.readouterr().err


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nlambda_s = 500  # trailing comment\n"
                    "\nseed=9\nwindows=2,4\n")
    cfg = parse_config_file(str(path))
    assert cfg == {"lambda_s": 500, "seed": 9, "windows": "2,4"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda_s 500\n")
    with pytest.raises(ConfigError, match="KEY=VALUE"):
        parse_config_file(str(bad))


def test_precedence_defaults_preset_file_set_flags(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("lambda_pt=30\ntau=0.002\nseed=5\n")

    class Args:
        preset = "fig5b"
        config = str(cfgfile)
        set = ["tau=0.003"]
        seed = 11
        workers = None
        scale = None

    cfg = build_config("flood", Args())
    assert cfg["lambda_s"] == 700.0     # from preset
    assert cfg["lambda_pt"] == 30       # file overrides preset
    assert cfg["tau"] == 0.003          # --set overrides file
    assert cfg["seed"] == 11            # --seed flag wins over the file
    assert cfg["r_p"] == 0.05           # untouched default


def test_flood_writes_outputs_and_replays(tmp_path):
    out1 = tmp_path / "a"
    assert _run("flood", *FAST_FLOOD, "--seed", "3", "--out", str(out1)) == 0
    for name in ("flood.csv", "ratio.csv", "summary.json"):
        assert (out1 / name).exists()
        assert b"\r" not in _read(out1 / name)
    summary = json.loads(_read(out1 / "summary.json"))
    assert summary["command"] == "flood"
    assert summary["config"]["seed"] == 3
    assert summary["results"]["n_nodes"] > 0

    # replaying the emitted summary reproduces the run byte for byte
    out2 = tmp_path / "b"
    assert _run("flood", "--config", str(out1 / "summary.json"),
                "--out", str(out2)) == 0
    for name in ("flood.csv", "ratio.csv", "summary.json"):
        assert _read(out1 / name) == _read(out2 / name)


def test_flood_csv_is_parseable(tmp_path):
    out = tmp_path / "o"
    assert _run("flood", *FAST_FLOOD, "--out", str(out)) == 0
    with open(out / "flood.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert {"node_id", "x_km", "y_km", "distance_km", "arrival_s", "status"} \
        == set(rows[0])
    float(rows[0]["x_km"])
    with open(out / "ratio.csv", newline="") as f:
        ratio_rows = list(csv.DictReader(f))
    assert all(float(r["ratio_s_per_km"]) >= 0 for r in ratio_rows)


def test_tail_outputs_independent_of_workers(tmp_path):
    args = ["tail", "--preset", "fig5b", "--seed", "2",
            "--set", "h_values=0.08,0.16", "--set", "trials=40"]
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    assert _run(*args, "--workers", "1", "--out", str(out1)) == 0
    assert _run(*args, "--workers", "4", "--out", str(out2)) == 0
    for name in ("tail.csv", "summary.json"):
        assert _read(out1 / name) == _read(out2 / name)


def test_hopdelay_outputs(tmp_path):
    out = tmp_path / "h"
    assert _run("hopdelay", "--preset", "fig5a", "--set", "trials=200",
                "--set", "p0_trials=400", "--out", str(out)) == 0
    summary = json.loads(_read(out / "summary.json"))
    assert 0 < summary["results"]["p0"] <= 1
    with open(out / "hopdelay.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert sum(int(r["count"]) for r in rows) == 200


def test_phase_outputs(tmp_path):
    out = tmp_path / "p"
    assert _run("phase", "--set", "lambda_s_values=60,1500",
                "--set", "lambda_pt_values=0", "--set", "trials=4",
                "--set", "window_half=0.6", "--workers", "2",
                "--out", str(out)) == 0
    with open(out / "phase.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    classes = {r["lambda_s"]: r["classification"] for r in rows}
    assert classes["60.0"] == "disconnected"
    assert classes["1500.0"] == "instantaneously-connected"


def test_critical_small_run(tmp_path):
    out = tmp_path / "c"
    assert _run("critical", "--preset", "critical", "--seed", "1",
                "--set", "windows=1,2", "--set", "n_lambda=6",
                "--set", "trials=30", "--workers", "4",
                "--out", str(out)) == 0
    summary = json.loads(_read(out / "summary.json"))
    assert 400 <= summary["results"]["lambda_c_hat"] <= 800
    with open(out / "critical.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 12  # 2 windows x 6 densities


def test_summary_omits_workers_and_presets_are_complete(tmp_path):
    out = tmp_path / "s"
    assert _run("flood", *FAST_FLOOD, "--workers", "2", "--out", str(out)) == 0
    summary = json.loads(_read(out / "summary.json"))
    assert "workers" not in summary["config"]
    assert set(PRESETS) == {"fig5a", "fig5b", "fig5c", "fig5d", "critical"}
    assert PRESETS["fig5c"]["tau"] == 0.01
    assert PRESETS["fig5b"]["lambda_pt"] == 50.0
