"""Command-line front end: plan / benchmark / tune / render.

Exit codes: 0 success, 1 planning failure, 2 input error.  The default
seed is 0 and can be overridden by the BNMCO_SEED environment variable or
the --seed flag.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .bayesnet import parse_net_dump
from .bench import (benchmark, read_trajectory, run_once, summary_table,
                    tune, tune_tables_text, write_trajectory)
from .errors import BnmcoError, ScenarioFormatError
from .render import render_svg
from .scenario import list_scenarios, load_scenario


def _default_seed():
    return int(os.environ.get("BNMCO_SEED", "0"))


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ScenarioFormatError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key] = json.loads(value)
    return overrides


def _cmd_plan(args):
    scenario = load_scenario(args.scenario)
    overrides = _parse_overrides(args.set)
    if args.config:
        with open(args.config) as fh:
            overrides = {**json.load(fh), **overrides}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    record, traj = run_once(scenario, args.planner, args.seed,
                            overrides=overrides, budget=args.budget)
    diag_path = out_dir / f"{scenario.name}_{args.planner}_{args.seed}.json"
    diag_path.write_text(json.dumps(record.to_dict(), indent=2,
                                    sort_keys=True) + "\n")
    if traj is not None:
        write_trajectory(out_dir / f"{scenario.name}_{args.planner}_"
                                   f"{args.seed}.traj", traj)
    status = "success" if record.success else "failure"
    print(f"{scenario.name} / {args.planner} / seed {args.seed}: {status} "
          f"({record.wall_time_s:.2f} s)")
    return 0 if record.success else 1


def _scenario_files(directory):
    files = list_scenarios(directory)
    if not files:
        raise ScenarioFormatError(f"{directory}: no scenario files found")
    return files


def _cmd_benchmark(args):
    files = _scenario_files(args.dir)
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    if not planners:
        raise ScenarioFormatError("--planners must name at least one planner")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, summary = benchmark(files, planners, args.seeds,
                                 budget=args.budget, jobs=args.jobs,
                                 results_path=out_dir / "results.jsonl")
    table = summary_table(summary)
    print(table)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2,
                                                     sort_keys=True) + "\n")
    (out_dir / "summary.txt").write_text(table + "\n")
    return 0


def _cmd_tune(args):
    files = _scenario_files(args.dir)
    grid_arg = args.grid
    if Path(grid_arg).exists():
        grid = json.loads(Path(grid_arg).read_text())
    else:
        grid = json.loads(grid_arg)
    if not grid:
        raise ScenarioFormatError("--grid names no parameters")
    tables = tune(files, grid, args.seeds, budget=args.budget, jobs=args.jobs)
    text = tune_tables_text(tables)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        serializable = {
            kind: {" | ".join(k): v for k, v in cells.items()}
            for kind, cells in tables.items()}
        (out_dir / "tune.json").write_text(json.dumps(serializable, indent=2,
                                                      sort_keys=True) + "\n")
        (out_dir / "tune.txt").write_text(text + "\n")
    return 0


def _cmd_render(args):
    scenario = load_scenario(args.scenario)
    trajectory = read_trajectory(args.trajectory) if args.trajectory else None
    net = None
    if args.net:
        net = parse_net_dump(Path(args.net).read_text())
    render_svg(scenario, trajectory=trajectory, net=net, out_path=args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bnmco")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run one planner on one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--planner", default="bnmco")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default="out")
    p.add_argument("--budget", type=float, default=30.0)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="parameter override, repeatable")
    p.add_argument("--config", help="JSON file of parameter overrides")
    p.set_defaults(fn=_cmd_plan)

    b = sub.add_parser("benchmark", help="sweep scenarios x planners x seeds")
    b.add_argument("--dir", required=True)
    b.add_argument("--planners", required=True,
                   help="comma-separated planner names")
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--budget", type=float, default=30.0)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="out")
    b.set_defaults(fn=_cmd_benchmark)

    t = sub.add_parser("tune", help="learning-factor / beta grid sweep")
    t.add_argument("--dir", required=True)
    t.add_argument("--grid", required=True,
                   help="JSON grid spec (inline or a file path)")
    t.add_argument("--seeds", type=int, default=5)
    t.add_argument("--budget", type=float, default=30.0)
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--out", default=None)
    t.set_defaults(fn=_cmd_tune)

    r = sub.add_parser("render", help="render a scenario to SVG")
    r.add_argument("--scenario", required=True)
    r.add_argument("--trajectory", default=None)
    r.add_argument("--net", default=None)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=_cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioFormatError as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2
    except BnmcoError as err:
        print(f"planning failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
