"""Batch command-line interface.

Subcommands: flood, phase, critical, tail, hopdelay. Configuration comes from
(in increasing precedence) built-in defaults, a named --preset, a flat
key=value --config file, repeated --set KEY=VALUE overrides, and the dedicated
flags --seed/--workers/--out/--scale. Every run writes plot-ready CSVs plus a
summary.json that embeds the exact configuration and master seed needed to
reproduce it bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import experiments
from .delay import export_flood_csv, flood, mmd_ratio_curve
from .geometry import BoxRegion
from .graph import build_topo_graph, giant_component
from .pointprocess import SeededRng, SimulationParams, sample_secondary_network

PRESETS = {
    "fig5a": {"lambda_s": 700.0, "lambda_pt": 10.0, "tau": 0.0},
    "fig5b": {"lambda_s": 700.0, "lambda_pt": 50.0, "tau": 0.0},
    "fig5c": {"lambda_s": 700.0, "lambda_pt": 10.0, "tau": 0.01},
    "fig5d": {"lambda_s": 700.0, "lambda_pt": 50.0, "tau": 0.01},
    "critical": {"lambda_pt": 0.0, "windows": "2,4", "lambda_min": 400.0,
                 "lambda_max": 800.0, "n_lambda": 12, "trials": 200},
}

_DEFAULTS = {
    "lambda_s": 700.0,
    "lambda_pt": 10.0,
    "r_p": 0.05,
    "r_i": 0.08,
    "R_p": 0.05,
    "R_i": 0.08,
    "T_s": 1.0,
    "tau": 0.0,
    "window_half": 5.0,
    "seed": 0,
    "workers": 1,
    "scale": 1.0,
}

_COMMAND_KEYS = {
    "flood": {"horizon"},
    "phase": {"lambda_s_values", "lambda_pt_values", "trials"},
    "critical": {"windows", "lambda_min", "lambda_max", "n_lambda", "trials"},
    "tail": {"h_values", "trials"},
    "hopdelay": {"hop_length", "trials", "p0_trials"},
}

_COMMAND_DEFAULTS = {
    "flood": {"horizon": 200},
    "phase": {"lambda_s_values": "400,700", "lambda_pt_values": "0,10,50",
              "trials": 50},
    "critical": {"windows": "2,4", "lambda_min": 400.0, "lambda_max": 800.0,
                 "n_lambda": 12, "trials": 200},
    "tail": {"h_values": "0.1,0.2,0.3,0.4,0.5", "trials": 500},
    "hopdelay": {"hop_length": 0.05, "trials": 10000, "p0_trials": 0},
}


class ConfigError(Exception):
    pass


def _coerce(value):
    if isinstance(value, (int, float)):
        return value
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_file(path: str) -> dict:
    """Flat key=value file; '#' starts a comment. JSON summaries replay too."""
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        cfg = data.get("config", data)
        return {str(k): _coerce(v) for k, v in cfg.items()}
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected KEY=VALUE")
            key, value = line.split("=", 1)
            out[key.strip()] = _coerce(value)
    return out


def build_config(command: str, args) -> dict:
    known = set(_DEFAULTS) | _COMMAND_KEYS[command]
    cfg = dict(_DEFAULTS)
    cfg.update(_COMMAND_DEFAULTS[command])
    layers = []
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}")
        layers.append(PRESETS[args.preset])
    if args.config:
        layers.append(parse_config_file(args.config))
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _coerce(value)
    layers.append(overrides)
    for layer in layers:
        for key, value in layer.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = value
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.scale is not None:
        cfg["scale"] = args.scale
    return cfg


def _float_list(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _params(cfg: dict) -> SimulationParams:
    return SimulationParams(
        lambda_s=float(cfg["lambda_s"]), lambda_pt=float(cfg["lambda_pt"]),
        r_p=float(cfg["r_p"]), r_i=float(cfg["r_i"]),
        R_p=float(cfg["R_p"]), R_i=float(cfg["R_i"]),
        T_s=float(cfg["T_s"]), tau=float(cfg["tau"]))


def _region(cfg: dict) -> BoxRegion:
    # --scale shrinks the observation window (and distance bands); the local
    # physics (ranges, densities) is unchanged, so regimes are preserved
    return BoxRegion.square(float(cfg["window_half"]) * float(cfg["scale"]))


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _write_summary(out_dir: str, command: str, cfg: dict, results: dict):
    # workers only controls execution parallelism; dropping it keeps outputs
    # byte-identical across worker counts and replays deterministic.
    recorded = {k: v for k, v in cfg.items() if k != "workers"}
    payload = {"command": command, "config": recorded, "results": results}
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def cmd_flood(cfg: dict, out_dir: str):
    params = _params(cfg)
    region = _region(cfg)
    seeds = SeededRng(int(cfg["seed"]))
    network = sample_secondary_network(params, region, seeds.child("network"))
    if network.n == 0:
        raise ConfigError("lambda_s: network is empty; nothing to flood")
    topo = build_topo_graph(network, params.r_p)
    cx, cy = region.center
    d_center = np.hypot(network.points[:, 0] - cx, network.points[:, 1] - cy)
    order = np.argsort(d_center, kind="stable")
    giant = giant_component(topo, region)
    source = int(order[0])
    resampled = False
    if giant is not None and topo.component_label[source] != giant:
        in_giant = topo.component_label[order] == giant
        source = int(order[in_giant][0])
        resampled = True
    result = flood(network, topo, source, params, int(cfg["horizon"]),
                   seeds.child("flood"))
    curve = mmd_ratio_curve(result, network)
    export_flood_csv(result, network, os.path.join(out_dir, "flood.csv"))
    _write_csv(os.path.join(out_dir, "ratio.csv"),
               ["distance_km", "ratio_s_per_km"],
               ((repr(float(d)), repr(float(r)))
                for d, r in zip(curve.distances, curve.ratios)))
    _write_summary(out_dir, "flood", cfg, {
        "n_nodes": network.n,
        "source": source,
        "source_resampled": resampled,
        "slots_used": result.slots_used,
        "n_reached": int(result.reached().sum()),
        "n_horizon": curve.n_horizon,
        "n_unreachable": curve.n_unreachable,
    })


def cmd_phase(cfg: dict, out_dir: str):
    params = _params(cfg)
    region = _region(cfg)
    result = experiments.run_phase_diagram(
        params, region, _float_list(cfg["lambda_s_values"]),
        _float_list(cfg["lambda_pt_values"]), int(cfg["trials"]),
        SeededRng(int(cfg["seed"])), workers=int(cfg["workers"]))
    _write_csv(os.path.join(out_dir, "phase.csv"),
               ["lambda_s", "lambda_pt", "theta", "stderr", "classification"],
               ((repr(c.lambda_s), repr(c.lambda_pt), repr(c.theta),
                 repr(c.stderr), c.classification) for c in result.cells))
    _write_summary(out_dir, "phase", cfg, {
        "boundary_lambda_pt_star": {repr(k): v for k, v in result.boundary.items()},
    })


def cmd_critical(cfg: dict, out_dir: str):
    lambdas = np.linspace(float(cfg["lambda_min"]), float(cfg["lambda_max"]),
                          int(cfg["n_lambda"]))
    result = experiments.estimate_critical_density(
        float(cfg["r_p"]), _float_list(cfg["windows"]), lambdas,
        int(cfg["trials"]), SeededRng(int(cfg["seed"])),
        workers=int(cfg["workers"]))
    _write_csv(os.path.join(out_dir, "critical.csv"),
               ["window_side_km", "lambda", "crossing_prob", "trials"],
               ((repr(w), repr(lam), repr(p), n) for w, lam, p, n in result.rows))
    _write_summary(out_dir, "critical", cfg, {
        "lambda_c_hat": result.lambda_c_hat,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
    })


def cmd_tail(cfg: dict, out_dir: str):
    params = _params(cfg)
    result = experiments.fit_diameter_tail(
        params, _float_list(cfg["h_values"]), int(cfg["trials"]),
        SeededRng(int(cfg["seed"])), workers=int(cfg["workers"]))
    _write_csv(os.path.join(out_dir, "tail.csv"),
               ["h_km", "survival", "trials"],
               ((repr(float(h)), repr(float(s)), int(cfg["trials"]))
                for h, s in zip(result.h_values, result.survival)))
    _write_summary(out_dir, "tail", cfg, {
        "c1": result.c1,
        "c2": result.c2,
        "r_squared": result.r_squared,
    })


def cmd_hopdelay(cfg: dict, out_dir: str):
    params = _params(cfg)
    region = _region(cfg)
    p0_trials = int(cfg["p0_trials"]) or None
    result = experiments.single_hop_delay_test(
        float(cfg["hop_length"]), params, region, int(cfg["trials"]),
        SeededRng(int(cfg["seed"])), p0_trials=p0_trials)
    counts = np.bincount(result.waits)
    _write_csv(os.path.join(out_dir, "hopdelay.csv"),
               ["wait_slots", "count"],
               ((j, int(c)) for j, c in enumerate(counts)))
    _write_summary(out_dir, "hopdelay", cfg, {
        "p0": result.p0.value,
        "p0_stderr": result.p0.stderr,
        "chi2": result.chi2,
        "p_value": result.p_value,
        "dof": result.dof,
        "memoryless": [{"a": m.offset_a, "b": m.offset_b,
                        "p_conditional": m.p_conditional,
                        "p_tail": m.p_tail, "z": m.z_score}
                       for m in result.memoryless],
    })


_COMMANDS = {
    "flood": cmd_flood,
    "phase": cmd_phase,
    "critical": cmd_critical,
    "tail": cmd_tail,
    "hopdelay": cmd_hopdelay,
}


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file (or a "
                                      "summary.json to replay)")
    sub.add_argument("--preset", help="named parameter preset: "
                                      + ", ".join(sorted(PRESETS)))
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--workers", type=int, default=None,
                     help="parallel trial workers")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--scale", type=float, default=None,
                     help="shrink the window and distance bands by this factor")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a single config key")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crnetsim",
        description="Monte Carlo simulator for cognitive radio network "
                    "connectivity and multihop delay")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        _add_common(subs.add_parser(name))
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args.command, args)
        _params(cfg)  # validate physics before touching the filesystem
        if args.command != "critical":
            _region(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        _COMMANDS[args.command](cfg, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
