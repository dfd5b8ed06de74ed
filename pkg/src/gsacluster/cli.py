"""Experiment command line.

Subcommands:
  run        execute a scenario JSON file
  preset     execute a named built-in scenario
  plot-data  reshape a finished output tree into figure CSVs
  oracle     check the GSA assignment against exhaustive enumeration
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import assign as assign_mod
from .assign import FF1, FF2, default_weights
from .experiments import (FIGURES, MissingRunsError, ScenarioError,
                          emit_plot_data, load_scenario, records_from_out_dir,
                          run_scenario, scenario_from_dict)
from .gsa import GsaParams
from .netmodel import deploy_random


def preset_names() -> list[str]:
    files = resources.files("gsacluster").joinpath("presets")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str):
    files = resources.files("gsacluster").joinpath("presets")
    path = files.joinpath(f"{name}.json")
    if not path.is_file():
        raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return scenario_from_dict(json.loads(path.read_text()))


def _apply_seed_override(scenario, seed):
    if seed is not None:
        scenario.seeds = [seed]
    return scenario


def _cmd_run(args) -> int:
    scenario = _apply_seed_override(load_scenario(args.scenario), args.seed)
    return _execute(scenario, args)


def _cmd_preset(args) -> int:
    scenario = _apply_seed_override(load_preset(args.name), args.seed)
    return _execute(scenario, args)


def _execute(scenario, args) -> int:
    records = run_scenario(scenario, args.out_dir, jobs=args.jobs)
    failed = [r for r in records if r.summary is None]
    for r in records:
        if r.summary is None:
            print(f"[infeasible] {r.run_id}: {r.error}")
        else:
            print(f"[done] {r.run_id}: lifetime={r.summary.lifetime_rounds} "
                  f"energy/sensor/round={r.summary.mean_energy_per_sensor_round:.3e}")
    print(f"{len(records) - len(failed)}/{len(records)} runs completed; "
          f"outputs in {Path(args.out_dir) / scenario.name}")
    return 1 if len(failed) == len(records) else 0


def _cmd_plot_data(args) -> int:
    records = records_from_out_dir(args.from_dir)
    rows = emit_plot_data(records, args.figure)
    out = Path(args.out) if args.out else None
    text = "\n".join(rows) + "\n"
    if out:
        out.write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_oracle(args) -> int:
    """Compare GSA assignments with brute-force optima on small instances."""
    form = args.form
    weights = default_weights(form)
    failures = 0
    total = 0
    for inst in range(args.instances):
        dep = deploy_random(args.heads, args.gateways, args.field_side,
                            seed=args.seed + inst)
        heads = [s.id for s in dep.sensors]
        try:
            _, opt = assign_mod.brute_force_assignment(
                heads, dep, weights, comm_range=args.range)
        except assign_mod.InfeasibleAssignmentError as e:
            print(f"instance {inst}: infeasible ({e}); skipped")
            continue
        for s in range(args.gsa_seeds):
            total += 1
            _, fit = assign_mod.assign_heads(
                heads, dep, weights,
                GsaParams(np.zeros(1), np.ones(1)),
                seed=1000 * inst + s, comm_range=args.range)
            gap = (fit - opt) / abs(opt) if opt else 0.0
            ok = gap <= args.tolerance
            failures += not ok
            print(f"instance {inst} seed {s}: gsa={fit:.6g} optimum={opt:.6g} "
                  f"gap={gap:.2%} {'ok' if ok else 'MISS'}")
    if total == 0:
        print("no feasible instances")
        return 1
    rate = 1.0 - failures / total
    print(f"within {args.tolerance:.0%} of the optimum in {rate:.1%} of runs")
    return 0 if rate >= 0.9 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gsacluster",
                                     description="WSN two-level clustering experiments")
    parser.add_argument("--seed", type=int, default=None,
                        help="override scenario seeds with a single seed")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel runs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario JSON file")
    p_run.add_argument("scenario")
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="run a built-in scenario preset")
    p_preset.add_argument("name", help=f"one of: {', '.join(preset_names())}")
    p_preset.set_defaults(func=_cmd_preset)

    p_plot = sub.add_parser("plot-data", help="emit figure CSV from finished runs")
    p_plot.add_argument("figure", help=f"one of: {', '.join(FIGURES)}")
    p_plot.add_argument("--from", dest="from_dir", required=True,
                        help="scenario output directory")
    p_plot.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_plot.set_defaults(func=_cmd_plot_data)

    p_oracle = sub.add_parser("oracle", help="brute-force assignment check")
    p_oracle.add_argument("--heads", type=int, default=4)
    p_oracle.add_argument("--gateways", type=int, default=3)
    p_oracle.add_argument("--instances", type=int, default=5)
    p_oracle.add_argument("--gsa-seeds", type=int, default=3)
    p_oracle.add_argument("--field-side", type=float, default=100.0)
    p_oracle.add_argument("--range", type=float, default=150.0)
    p_oracle.add_argument("--form", choices=[FF1, FF2], default=FF1)
    p_oracle.add_argument("--tolerance", type=float, default=0.05)
    p_oracle.set_defaults(func=_cmd_oracle)

    args = parser.parse_args(argv)
    if args.command == "oracle" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except (ScenarioError, MissingRunsError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
