"""Deterministic run records, the benchmark loop, and the tuning grid.

A run is identified by its (scenario, planner, seed) triple; repeating a
triple reproduces the record byte-for-byte once wall-clock fields are
stripped (``canonical_dict``).  Planner names accept an ``-N`` suffix to
override the planner's sample budget, e.g. ``bnmco-400``.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines
from .baselines import BaselineConfig
from .errors import BnmcoError, BudgetExceededError, PlanningFailedError
from .pathfinder import plan
from .scenario import PlannerParams, load_scenario
from .util import Deadline, make_rng

BASELINE_FUNCS = {"rrt-connect": baselines.rrt_connect,
                  "prm": baselines.prm,
                  "pf-descent": baselines.pf_descent}


def parse_planner(name):
    """Split an optional sample-budget suffix off a planner name."""
    if name in BASELINE_FUNCS or name == "bnmco":
        return name, {}
    base, _, suffix = name.rpartition("-")
    if base == "bnmco" and suffix.isdigit():
        return "bnmco", {"n_samples": int(suffix)}
    raise BnmcoError(f"unknown planner {name!r}")


@dataclass
class RunRecord:
    scenario: str
    planner: str
    seed: int
    success: bool
    wall_time_s: float
    trajectory_length: float
    diagnostics: dict

    def to_dict(self):
        return {"scenario": self.scenario, "planner": self.planner,
                "seed": self.seed, "success": self.success,
                "wall_time_s": self.wall_time_s,
                "trajectory_length": self.trajectory_length,
                "diagnostics": self.diagnostics}

    def canonical_dict(self):
        """Record with every wall-clock-derived field removed; two runs of
        the same triple must agree on this exactly."""
        d = self.to_dict()
        d.pop("wall_time_s")
        diag = dict(d["diagnostics"])
        diag.pop("phases_ms", None)
        d["diagnostics"] = diag
        return d


def run_once(scenario, planner_name, seed, base_params=None, overrides=None,
             budget=None):
    """Run one triple under an optional wall-clock budget.

    Budget overruns are recorded as failures with wall_time pinned to the
    budget.  Returns (RunRecord, trajectory-or-None).
    """
    kind, suffix_overrides = parse_planner(planner_name)
    extra = {**(overrides or {}), **suffix_overrides}
    params = scenario.params(base=base_params, extra=extra)
    deadline = Deadline(budget)
    traj = None
    diagnostics = {}
    success = False
    try:
        if kind == "bnmco":
            traj, diagnostics = plan(scenario, params, seed,
                                     deadline=deadline)
            success = True
        else:
            config = BaselineConfig(planner=kind)
            fn = BASELINE_FUNCS[kind]
            if kind == "pf-descent":
                traj, diagnostics = fn(scenario, config, params,
                                       deadline=deadline)
            else:
                traj, diagnostics = fn(scenario, config, params,
                                       make_rng(seed), deadline=deadline)
            success = traj is not None
    except PlanningFailedError as err:
        diagnostics = dict(err.diagnostics)
        diagnostics["phase"] = err.phase
        diagnostics["failure"] = str(err)
    except BudgetExceededError:
        diagnostics = {"phase": "budget",
                       "failure": "wall-clock budget exhausted"}
    wall = deadline.elapsed()
    if budget is not None and (wall > budget or
                               diagnostics.get("phase") == "budget"):
        wall = float(budget)
        success = False
        traj = None
    record = RunRecord(scenario=scenario.name, planner=planner_name,
                       seed=int(seed), success=bool(success),
                       wall_time_s=round(wall, 6),
                       trajectory_length=(round(traj.arc_length(), 9)
                                          if traj is not None else None),
                       diagnostics=diagnostics)
    return record, traj


def _run_triple(args):
    path, planner_name, seed, overrides, budget = args
    scenario = load_scenario(path)
    record, _ = run_once(scenario, planner_name, seed, overrides=overrides,
                         budget=budget)
    return record


def benchmark(scenario_paths, planner_names, n_seeds, budget=None, jobs=1,
              overrides=None, results_path=None):
    """Every (scenario, planner, seed) triple in deterministic order.

    Returns (records, summary).  Records are merged by triple index, never
    by completion order, so worker count does not affect the output.
    """
    triples = [(str(path), planner, seed, overrides or {}, budget)
               for path in scenario_paths
               for planner in planner_names
               for seed in range(n_seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_triple, triples))
    else:
        records = [_run_triple(t) for t in triples]
    if results_path:
        with open(results_path, "a") as fh:
            for rec in records:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    return records, summarize(records, planner_names)


def summarize(records, planner_names=None):
    """Per-planner success rate / mean time / time standard deviation."""
    if planner_names is None:
        planner_names = sorted({r.planner for r in records})
    summary = {}
    for name in planner_names:
        runs = [r for r in records if r.planner == name]
        times = np.array([r.wall_time_s for r in runs]) if runs else np.array([0.0])
        n_ok = sum(r.success for r in runs)
        summary[name] = {
            "runs": len(runs),
            "success_rate_pct": round(100.0 * n_ok / len(runs), 2) if runs else 0.0,
            "mean_time_s": round(float(times.mean()), 4),
            "std_time_s": round(float(times.std()), 4),
        }
    return summary


def summary_table(summary):
    """Aligned text table: one column per planner, the three benchmark rows."""
    names = list(summary)
    width = max([len(n) for n in names] + [10])
    rows = [("success rate (%)", "success_rate_pct"),
            ("average time (s)", "mean_time_s"),
            ("standard deviation (s)", "std_time_s")]
    header = " " * 24 + "".join(f"{n:>{width + 2}}" for n in names)
    lines = [header]
    for label, key in rows:
        cells = "".join(f"{summary[n][key]:>{width + 2}}" for n in names)
        lines.append(f"{label:<24}" + cells)
    return "\n".join(lines)


def tune(scenario_paths, grid, n_seeds, budget=None, jobs=1):
    """Parameter grid sweep for the learning factors and the time-law beta.

    ``grid`` may hold ``eta_pi`` (list) with ``eta_mu_sigma`` (list of
    [eta_mu, eta_sigma] pairs), and/or ``beta`` (list).  Each cell runs the
    full scenario x seed block and reports success rate and mean time.
    """
    tables = {}
    if "eta_pi" in grid:
        pairs = grid.get("eta_mu_sigma") or [[None, None]]
        cells = {}
        for eta_pi in grid["eta_pi"]:
            for pair in pairs:
                overrides = {"eta_pi": eta_pi}
                label_col = "default"
                if pair[0] is not None:
                    overrides.update(eta_mu=pair[0], eta_sigma=pair[1])
                    label_col = f"{pair[0]}/{pair[1]}"
                records, _ = benchmark(scenario_paths, ["bnmco"], n_seeds,
                                       budget=budget, jobs=jobs,
                                       overrides=overrides)
                cells[(str(eta_pi), label_col)] = _cell_stats(records)
        tables["eta"] = cells
    if "beta" in grid:
        cells = {}
        for beta in grid["beta"]:
            records, _ = benchmark(scenario_paths, ["bnmco"], n_seeds,
                                   budget=budget, jobs=jobs,
                                   overrides={"beta": beta})
            cells[(str(beta),)] = _cell_stats(records)
        tables["beta"] = cells
    return tables


def _cell_stats(records):
    n_ok = sum(r.success for r in records)
    times = np.array([r.wall_time_s for r in records])
    return {"success_rate_pct": round(100.0 * n_ok / len(records), 2),
            "mean_time_s": round(float(times.mean()), 4)}


def tune_tables_text(tables):
    lines = []
    if "eta" in tables:
        cells = tables["eta"]
        rows = sorted({k[0] for k in cells}, key=float)
        cols = sorted({k[1] for k in cells})
        lines.append("eta_pi \\ eta_mu/eta_sigma:  success (%) | time (s)")
        header = f"{'':>8}" + "".join(f"{c:>18}" for c in cols)
        lines.append(header)
        for r in rows:
            row = [f"{r:>8}"]
            for c in cols:
                s = cells[(r, c)]
                row.append(f"{s['success_rate_pct']:>8.1f} |{s['mean_time_s']:>7.2f}")
            lines.append("".join(row))
    if "beta" in tables:
        cells = tables["beta"]
        keys = list(cells)
        lines.append("beta:      " + "".join(f"{k[0]:>16}" for k in keys))
        lines.append("(%)|(s):   " + "".join(
            f"{cells[k]['success_rate_pct']:>8.1f} |{cells[k]['mean_time_s']:>5.2f}"
            for k in keys))
    return "\n".join(lines)


def write_trajectory(path, traj):
    """One configuration per line, space-separated full-precision values."""
    lines = [" ".join(repr(float(v)) for v in wp) for wp in traj.waypoints]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path):
    rows = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        rows.append([float(v) for v in line.split()])
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2:
        raise BnmcoError(f"{path}: malformed trajectory file")
    return arr
