"""Command-line interface.

Subcommands:
    synth   scene description -> binary channel file
    run     experiment config -> results.csv + aggregates.json
    cdf     results.csv -> per-cell CDF tables (JSON)
    oracle  brute-force validation suite (slow reference recomputations)
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chanfile import write_channel_file
from .config import ConfigError, load_config, scene_from_dict
from .errors import ToolkitError
from .harness import (
    aggregate_result_rows,
    _cell_to_dict,
    read_result_rows,
    run_experiment,
)
from .selfcheck import run_selfcheck
from .synth import gen_geometric, gen_trajectory_users
from .tensor import RngHandle


def _cmd_synth(args) -> int:
    try:
        obj = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("synth config must be an object")
    unknown = sorted(
        set(obj) - {"scene", "num_users", "min_spacing_m", "max_spacing_m", "seed"}
    )
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in synth config")
    if "scene" not in obj or "num_users" not in obj:
        raise ConfigError("synth config needs 'scene' and 'num_users'")
    scene = scene_from_dict(obj["scene"])
    seed = args.seed if args.seed is not None else int(obj.get("seed", 0))
    spacing = (obj.get("min_spacing_m", 0.1), obj.get("max_spacing_m", 5.0))
    users = gen_trajectory_users(
        scene, int(obj["num_users"]), spacing, RngHandle(seed, 0)
    )
    tensor = gen_geometric(scene, users, RngHandle(seed, 1))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "channel.dmct"
    write_channel_file(tensor, path)
    t, l, k, m = tensor.dims
    print(f"wrote {path} (T={t}, L={l}, K={k}, M={m}, {tensor.num_aps} APs)")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.allocation_mode is not None:
        overrides["allocation_mode"] = args.allocation_mode.replace("-", "_")
    if overrides:
        cfg = cfg.replace(**overrides)
    result = run_experiment(cfg, threads=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    agg_path = out_dir / "aggregates.json"
    result.write_csv(csv_path)
    result.write_aggregates(agg_path)
    print(
        f"wrote {csv_path} ({len(result.rows)} rows, "
        f"{len(result.degenerate)} degenerate) and {agg_path}"
    )
    return 0


def _cmd_cdf(args) -> int:
    rows = read_result_rows(args.results)
    cells = aggregate_result_rows(rows, grid_points=args.grid_points)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "cdf_tables.json"
    payload = {"version": 1, "cells": [_cell_to_dict(c) for c in cells]}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(cells)} cells)")
    return 0


def _cmd_oracle(args) -> int:
    ok = run_selfcheck(report=print, seed=args.seed if args.seed is not None else 2025)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmimo",
        description=(
            "Spatial user-separability analysis for distributed massive MIMO "
            "channels: synthesize or load channel tensors, then evaluate "
            "singular value spread, DPC and ZF sum rates, and user fairness "
            "over Monte-Carlo sweeps."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a channel file from a scene")
    p_synth.add_argument("--config", required=True, help="scene/users JSON")
    p_synth.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_run = sub.add_parser("run", help="run a Monte-Carlo experiment config")
    p_run.add_argument("--config", required=True, help="experiment JSON")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--trials", type=int, default=None, help="override the trial count")
    p_run.add_argument(
        "--allocation-mode",
        choices=("per-tl", "joint"),
        default=None,
        help="override the power-allocation scope",
    )
    p_run.add_argument("--threads", type=int, default=1, help="worker threads")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_cdf = sub.add_parser("cdf", help="compute CDF tables from a results CSV")
    p_cdf.add_argument("results", help="results.csv from the run subcommand")
    p_cdf.add_argument("--grid-points", type=int, default=512)
    p_cdf.add_argument("--out", required=True, help="output directory")
    p_cdf.set_defaults(func=_cmd_cdf)

    p_oracle = sub.add_parser(
        "oracle", help="validate fast paths against brute-force recomputation"
    )
    p_oracle.add_argument("--seed", type=int, default=None)
    p_oracle.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
