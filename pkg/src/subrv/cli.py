"""Batch driver: ``subrv run``, ``subrv list-tasks``, ``subrv print-conventions``.

The configuration is one JSON document (``schema_version: 1``); see
``docs/config.md`` for the schema.  Unknown keys are errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import json
import math
import sys
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import conventions as conv
from . import presets
from .tasks import FAIL, TASKS, TaskResult

SCHEMA_VERSION = 1
DEFAULT_SEED = 42

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "seed": DEFAULT_SEED,
    "tasks": list(TASKS),
    "bcv": {"lam": [-1.0, -0.5, 0.0, 0.5, 1.0], "tau": [0.5, 1.0, 2.0], "L": [1.0, 2.0, 4.0]},
    "points": 100,
    "twisted_specs": 5,
    "twisted_points": 50,
    "omega_specs": 3,
    "surface": {"preset": "quadratic-graph", "coefficients": {"a": 0.3, "b": -0.2, "c": 0.0},
                "lam": 0.0, "tau": 0.8},
    "base_metric": "diagonal-exp",
    "f": "twisted",
    "L_grid": [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8],
    "tolerances": {"lemma1": 1e-10, "lemma2": 1e-9, "twisted": 1e-8, "gauss": 1e-8, "limit_a": 1e-4,
                   "limit_h": 1e-6, "limit_area": 1e-6, "omega4": 1e-7, "conformal": 1e-6, "referee": 2e-2,
                   "constants": 1e-14},
    "nodes": {"base": [4, 4], "fiber": [5, 5]},
    "boxes": {"base": [[-0.5, -0.5], [0.5, 0.5]], "fiber": [[0.6, 0.5], [1.2, 1.1]]},
    "output": None,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int
    tasks: list
    bcv: dict
    points: int
    twisted_specs: int
    twisted_points: int
    omega_specs: int
    surface: dict
    base_metric: str
    f: str
    L_grid: list
    tolerances: dict
    nodes: dict
    boxes: dict
    output: str | None

    def as_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update({k: copy.deepcopy(getattr(self, k)) for k in self.__dataclass_fields__})
        return d


def _merge(default, given, path):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    out = copy.deepcopy(default)
    for k, v in given.items():
        where = f"{path}.{k}" if path else k
        if k not in default:
            raise ConfigError(f"unknown key {where!r}")
        if isinstance(default[k], dict) and k != "coefficients":
            out[k] = _merge(default[k], v, where)
        else:
            out[k] = v
    return out


def _number(v, where, positive=False, integer=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}: must be > 0, got {v!r}")
    return int(v) if integer else float(v)


def _number_list(v, where, positive=False):
    vals = v if isinstance(v, list) else [v]
    if not vals:
        raise ConfigError(f"{where}: must not be empty")
    return [_number(x, f"{where}[{i}]", positive) for i, x in enumerate(vals)]


def _pair(v, where):
    if not (isinstance(v, list) and len(v) == 2):
        raise ConfigError(f"{where}: expected a 2-element list")
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(v)]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    if "schema_version" not in doc:
        raise ConfigError("schema_version: required (expected 1)")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {doc['schema_version']!r} (expected 1)")
    d = _merge(DEFAULTS, doc, "")

    seed = _number(d["seed"], "seed", integer=True)
    if not isinstance(d["tasks"], list) or not all(isinstance(t, str) for t in d["tasks"]):
        raise ConfigError("tasks: expected a list of task names")
    for t in d["tasks"]:
        if t not in TASKS:
            raise ConfigError(f"tasks: unknown task {t!r}")
    bcv = {"lam": _number_list(d["bcv"]["lam"], "bcv.lam"),
           "tau": _number_list(d["bcv"]["tau"], "bcv.tau", positive=True),
           "L": _number_list(d["bcv"]["L"], "bcv.L", positive=True)}
    counts = {k: _number(d[k], k, positive=True, integer=True)
              for k in ("points", "twisted_specs", "twisted_points", "omega_specs")}
    if counts["points"] < 2:
        raise ConfigError("points: must be >= 2")
    s = d["surface"]
    if s["preset"] not in presets.SURFACE_PRESETS:
        raise ConfigError(f"surface.preset: unknown preset {s['preset']!r}")
    if not isinstance(s["coefficients"], dict):
        raise ConfigError("surface.coefficients: expected an object")
    try:
        presets.graph_function(s["preset"], s["coefficients"] if s["preset"] != "plane" else None)
    except ValueError as exc:
        raise ConfigError(f"surface.coefficients: {exc}") from None
    surface = {"preset": s["preset"],
               "coefficients": {k: _number(v, f"surface.coefficients.{k}") for k, v in s["coefficients"].items()}
               if s["preset"] != "plane" else {},
               "lam": _number(s["lam"], "surface.lam"), "tau": _number(s["tau"], "surface.tau", positive=True)}
    if d["base_metric"] not in presets.BASE_PRESETS:
        raise ConfigError(f"base_metric: unknown preset {d['base_metric']!r}")
    if d["f"] not in presets.F_PRESETS:
        raise ConfigError(f"f: unknown preset {d['f']!r}")
    grid = _number_list(d["L_grid"], "L_grid", positive=True)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("L_grid: must be strictly increasing")
    tol = {k: _number(v, f"tolerances.{k}") for k, v in d["tolerances"].items()}
    for k, v in tol.items():
        if not v > 0:
            raise ConfigError(f"tolerances.{k}: tolerances > 0 required, got {v!r}")
    nodes = {}
    for k in ("base", "fiber"):
        v = d["nodes"][k]
        vals = v if isinstance(v, list) else [v, v]
        if len(vals) != 2:
            raise ConfigError(f"nodes.{k}: expected an integer or a 2-element list")
        nodes[k] = [_number(x, f"nodes.{k}", positive=True, integer=True) for x in vals]
        if min(nodes[k]) < 2:
            raise ConfigError(f"nodes.{k}: node counts must be >= 2")
    boxes = {}
    for k in ("base", "fiber"):
        v = d["boxes"][k]
        if not (isinstance(v, list) and len(v) == 2):
            raise ConfigError(f"boxes.{k}: expected [lo, hi]")
        lo, hi = _pair(v[0], f"boxes.{k}[0]"), _pair(v[1], f"boxes.{k}[1]")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ConfigError(f"boxes.{k}: need lo < hi component-wise")
        boxes[k] = [lo, hi]
    if any(t.startswith("referee") for t in d["tasks"]) and 1e6 not in grid:
        raise ConfigError("L_grid: the referee tasks compare at L = 1e6, which must be on the grid")
    if len(grid) < 4 or grid[-1] / grid[0] < 1e4:
        raise ConfigError("L_grid: limit fits need at least 4 values spanning 4 decades")
    out = d["output"]
    if out is not None and not isinstance(out, str):
        raise ConfigError("output: expected a path string or null")
    return RunConfig(seed, list(d["tasks"]), bcv, counts["points"], counts["twisted_specs"],
                     counts["twisted_points"], counts["omega_specs"], surface, d["base_metric"], d["f"], grid,
                     tol, nodes, boxes, out)


def _task_rng(seed: int, name: str) -> np.random.Generator:
    # independent of task order
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def run(cfg: RunConfig, timestamp: str | None = None) -> dict:
    """Execute the configured tasks in order and assemble the report."""
    results: list[TaskResult] = []
    for name in cfg.tasks:
        try:
            res = TASKS[name](cfg, _task_rng(cfg.seed, name))
        except Exception as exc:  # a crashing task is a failed task; the report is still written
            res = TaskResult(name, FAIL, {"error": f"{type(exc).__name__}: {exc}"})
        results.append(res)
    counts = {s: sum(r.status == s for r in results) for s in ("PASS", "FLAGGED", "FAIL")}
    report = {
        "schema_version": SCHEMA_VERSION,
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.as_dict(),
        "conventions": conv.describe(),
        "tasks": [{"name": r.name, "status": r.status, "payload": r.payload,
                   "samples": {k: [[L, v] for L, v in s] for k, s in r.samples.items()}} for r in results],
        "summary": counts,
        "status": "FAIL" if counts["FAIL"] else "PASS",
    }
    return _clean(report)


def exit_code(report: dict) -> int:
    return 1 if report["status"] == "FAIL" else 0


def write_report(report: dict, out: Path | None) -> list[Path]:
    """Write the JSON report (stdout when ``out`` is None) and the CSV sample tables."""
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out is None:
        sys.stdout.write(text)
        return []
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    written = [out]
    for task in report["tasks"]:
        for label, rows in task["samples"].items():
            path = out.with_name(f"{out.stem}.{task['name']}.{label}.csv")
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["L", "value"])
                for L, v in rows:
                    w.writerow([repr(L), repr(v)])
            written.append(path)
    return written


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    report = run(cfg)
    out = args.out or cfg.output
    write_report(report, Path(out) if out else None)
    for t in report["tasks"]:
        print(f"{t['status']:8s} {t['name']}", file=sys.stderr)
    return exit_code(report)


def _cmd_list(args) -> int:
    for name, fn in TASKS.items():
        doc = (fn.__doc__ or "").strip().splitlines()
        print(f"{name:20s} {doc[0] if doc else ''}")
    return 0


def _cmd_conventions(args) -> int:
    print(json.dumps(conv.describe(), indent=2, ensure_ascii=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subrv", description="Sub-Riemannian limit verification campaigns.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the tasks of a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="report path (CSV tables are written next to it)")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    r.set_defaults(func=_cmd_run)
    sub.add_parser("list-tasks", help="list task names").set_defaults(func=_cmd_list)
    sub.add_parser("print-conventions", help="print the sign-convention ledger").set_defaults(func=_cmd_conventions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
