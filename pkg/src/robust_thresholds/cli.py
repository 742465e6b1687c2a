"""Command line interface: configuration in, CSV artifacts out.

Commands
    weak-front        trace the weak Pareto front and reconstruct the set
    strong-front      walk sequential chains to strong Pareto maxima
    membership        decide one threshold, optionally cross-checked by oracles
    value             print the maximin value W(xi, c) for one threshold
    oracle-check      compare the solver against all brute-force oracles
    analytic-fishery  emit the closed-form benchmark curves for overlays

Every output file starts with a comment header embedding the fully resolved
configuration.  The exit code is 0 only when every postcondition validation
passed (1 for validation failures, 2 for errors).
"""

from __future__ import annotations

import argparse
import itertools
import sys as _sys
from pathlib import Path

import numpy as np

from . import dp, oracle, pareto
from .config import ConfigError, Problem, build_problem, parse_config, serialize
from .fishery import FisheryParams
from .mesh import build_reachable_sets, full_grid_sets
from .model import as_threshold

__all__ = ["main"]


def _fmt(x) -> str:
    return repr(float(x))


def _header(command: str, problem: Problem) -> str:
    lines = [f"# robust-thresholds {command}", "# config:"]
    lines += [f"#   {line}" for line in serialize(problem.config).rstrip().splitlines()]
    return "\n".join(lines) + "\n"


def _write(path: Path, header: str, column_names: list, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(header)
        fh.write(",".join(column_names) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row) + "\n")


def _prepare(problem: Problem):
    """Compile the discretization and reachable sets once per run."""
    compiled = dp.compile_system(problem.sys, problem.grid, problem.controls,
                                 interp=problem.config.interpolation)
    if problem.config.full_grid:
        reach = full_grid_sets(problem.grid, problem.sys.horizon)
    else:
        reach = build_reachable_sets(problem.xi, problem.grid, problem.sys,
                                     problem.controls, compiled=compiled)
    return compiled, reach


def _load_problem(args) -> Problem:
    text = Path(args.config).read_text()
    cfg = parse_config(text)
    overrides = {}
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "jobs", None):
        overrides["jobs"] = args.jobs
    if getattr(args, "interp", None):
        overrides["interpolation"] = args.interp
    if getattr(args, "full_grid", False):
        overrides["full_grid"] = True
    if getattr(args, "oracle", False):
        overrides["oracle"] = True
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **{
            {"output_dir": "output_dir", "jobs": "jobs",
             "interpolation": "interpolation", "full_grid": "full_grid",
             "oracle": "oracle"}[k]: v for k, v in overrides.items()})
    return build_problem(cfg)


def _parse_threshold(text: str, m: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"threshold {text!r} is not a comma-separated vector") from exc
    return as_threshold(vals, m)


# -- commands ----------------------------------------------------------------


def cmd_weak_front(args) -> int:
    problem = _load_problem(args)
    cfg = problem.config
    compiled, reach = _prepare(problem)
    front = pareto.weak_front(problem.xi, problem.ray_mesh, problem.sys,
                              problem.grid, problem.controls,
                              front_tol=cfg.front_tol, compiled=compiled,
                              reach=reach, jobs=cfg.jobs)
    out = Path(cfg.output_dir)
    header = _header("weak-front", problem)
    m = problem.sys.threshold_dim

    cols = [f"c_{j + 1}" for j in range(m)] + ["W"] + [f"p_{j + 1}" for j in range(m)]
    rows = [(*front.sources[i], front.values[i], *front.points[i])
            for i in range(len(front))]
    _write(out / "front.csv", header, cols, rows)

    samples = _membership_sample(front, problem)
    _write(out / "set_membership.csv", header,
           [f"c_{j + 1}" for j in range(m)] + ["member"],
           [(*c, int(flag)) for c, flag in samples])

    if cfg.model_kind == "fishery-beverton-holt":
        _write_analytic(out / "analytic_fishery.csv", header, problem)
    _emit_plot_script(out)

    if getattr(args, "debug_export", False):
        _write(out / "reachable_sets.csv", header,
               ["stage", "node", *(f"x_{d + 1}" for d in range(problem.grid.dim))],
               reach.to_rows())

    for note in front.diagnostics:
        print(f"warning: {note}")
    print(f"front: {len(front)} points "
          f"({len(front.skipped_sources)} mesh points skipped), "
          f"max revalidation residual {front.max_residual:.3g} "
          f"(tolerance {front.front_tol:.3g})")
    print(f"wrote {out / 'front.csv'}")
    hard = [d for d in front.diagnostics if "residual" in d or "decreases" in d]
    return 1 if hard else 0


def _membership_sample(front: pareto.FrontResult, problem: Problem,
                       per_axis: int = 41):
    """Reconstruction sample on a regular threshold grid below the anchors."""
    m = problem.sys.threshold_dim
    hi = np.asarray(problem.config.ray_anchors, dtype=float)
    axes = [np.linspace(0.0, hi[j], per_axis) for j in range(m)]
    out = []
    for c in itertools.product(*axes):
        out.append((c, front.contains(np.asarray(c))))
    return out


def _write_analytic(path: Path, header: str, problem: Problem) -> None:
    params: FisheryParams = problem.config.fishery
    xi = float(problem.xi)
    ks = [params.K[w] for w in params.scenarios]
    xs = np.linspace(0.0, max(ks), 501)
    cap = min(xi, min(ks))
    rows = []
    for x in xs:
        sig = [float(params.surplus(x, w)) for w in params.scenarios]
        inter = min(sig) if x <= cap else float("nan")
        rows.append((x, *sig, inter))
    cols = ["x"] + [f"sigma_{w}" for w in params.scenarios] + ["intersection_height"]
    _write(path, header, cols, rows)


_PLOT_SCRIPT = '''"""Plot the traced front (run from the output directory)."""
import csv

import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    head, data = rows[0], rows[1:]
    cols = {name: [float(r[i]) if r[i] != "nan" else float("nan") for r in data]
            for i, name in enumerate(head)}
    return cols

front = read_csv("front.csv")
fig, ax = plt.subplots(figsize=(7, 6))
ax.plot(front["p_1"], front["p_2"], "g.", markersize=4, label="computed weak front")
ANALYTIC = True
try:
    ana = read_csv("analytic_fishery.csv")
except OSError:
    ANALYTIC = False
if ANALYTIC:
    ax.plot(ana["x"], ana["sigma_a"], "r--", linewidth=1, label="surplus, scenario a")
    ax.plot(ana["x"], ana["sigma_b"], "b--", linewidth=1, label="surplus, scenario b")
    ax.plot(ana["x"], ana["intersection_height"], "k-", linewidth=1.5,
            label="closed-form intersection boundary")
ax.set_xlabel("stock floor")
ax.set_ylabel("harvest floor")
ax.set_xlim(left=0)
ax.set_ylim(bottom=0)
ax.legend()
fig.tight_layout()
fig.savefig("front.png", dpi=150)
print("wrote front.png")
'''


def _emit_plot_script(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "plot_front.py").write_text(_PLOT_SCRIPT)


def cmd_strong_front(args) -> int:
    problem = _load_problem(args)
    cfg = problem.config
    m = problem.sys.threshold_dim
    c0 = _parse_threshold(args.start, m)
    compiled, reach = _prepare(problem)
    if args.perm == "all":
        perms = list(itertools.permutations(range(m)))
    else:
        perm = tuple(int(v) - 1 for v in args.perm.split(","))
        perms = [perm]
    out = Path(cfg.output_dir)
    header = _header("strong-front", problem)
    failed = False
    for perm in perms:
        chain = pareto.strong_pareto_point(
            problem.xi, c0, perm, problem.sys, problem.grid, problem.controls,
            compiled=compiled, reach=reach, membership_tol=cfg.membership_tol)
        label = "-".join(str(i + 1) for i in perm)
        cols = (["i", "sigma_i"] + [f"c_{j + 1}" for j in range(m)] + ["value"])
        rows = [(0, "", *chain.chain[0], float("nan"))]
        for i in range(m):
            rows.append((i + 1, perm[i] + 1, *chain.chain[i + 1], chain.values[i]))
        _write(out / f"strong_chain_{label}.csv", header, cols, rows)
        print(f"permutation ({label}): endpoint "
              f"{[round(v, 6) for v in chain.endpoint.tolist()]}, "
              f"monotone residual {chain.residual_monotone:.3g}, "
              f"identity residual {chain.residual_identity:.3g}")
        for note in chain.diagnostics:
            print(f"warning: {note}")
            failed = True
    print(f"wrote chains to {out}")
    return 1 if failed else 0


def cmd_membership(args) -> int:
    problem = _load_problem(args)
    cfg = problem.config
    c = _parse_threshold(args.threshold, problem.sys.threshold_dim)
    compiled, reach = _prepare(problem)
    w = dp.solve_value(problem.xi, c, problem.sys, problem.grid, problem.controls,
                       compiled=compiled, reach=reach)
    verdict = w >= -cfg.membership_tol
    lines = [f"W(xi, c) = {_fmt(w)}",
             f"membership (tol {cfg.membership_tol}): {verdict}"]
    if cfg.oracle:
        budget = oracle.OracleBudget(cfg.oracle_budget)
        cl = oracle.closedloop_maximin(problem.xi, c, problem.sys, problem.controls,
                                       budget=budget)
        ol = oracle.openloop_maximin(problem.xi, c, problem.sys, problem.controls,
                                     budget=budget)
        ex = oracle.exhaustive_membership(problem.xi, c, problem.sys,
                                          problem.controls, budget=budget)
        lines += [f"oracle closed-loop value = {_fmt(cl)}",
                  f"oracle open-loop value  = {_fmt(ol)}",
                  f"oracle exhaustive membership = {ex}",
                  f"oracle expansions used = {budget.used}"]
    report = "\n".join(lines)
    print(report)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "membership_report.txt").write_text(
        _header("membership", problem) + report + "\n")
    if getattr(args, "debug_export", False):
        tables, _ = dp.backward_recursion(problem.sys, problem.grid, problem.controls,
                                          reach, c, compiled=compiled,
                                          want_policy=False)
        coords = problem.grid.node_coordinates()
        rows = []
        for t in tables:
            for i in np.flatnonzero(t.populated):
                rows.append((t.stage, *coords[i], t.values[i]))
        _write(out / "value_tables.csv", _header("membership", problem),
               ["stage", *(f"x_{d + 1}" for d in range(problem.grid.dim)), "value"],
               rows)
    return 0


def cmd_value(args) -> int:
    problem = _load_problem(args)
    c = _parse_threshold(args.threshold, problem.sys.threshold_dim)
    compiled, reach = _prepare(problem)
    w = dp.solve_value(problem.xi, c, problem.sys, problem.grid, problem.controls,
                       compiled=compiled, reach=reach)
    print(_fmt(w))
    return 0


def cmd_oracle_check(args) -> int:
    problem = _load_problem(args)
    cfg = problem.config
    c = _parse_threshold(args.threshold, problem.sys.threshold_dim)
    compiled, reach = _prepare(problem)
    w = dp.solve_value(problem.xi, c, problem.sys, problem.grid, problem.controls,
                       compiled=compiled, reach=reach)
    budget = oracle.OracleBudget(cfg.oracle_budget)
    cl = oracle.closedloop_maximin(problem.xi, c, problem.sys, problem.controls,
                                   budget=budget)
    ol = oracle.openloop_maximin(problem.xi, c, problem.sys, problem.controls,
                                 budget=budget)
    ex = oracle.exhaustive_membership(problem.xi, c, problem.sys, problem.controls,
                                      budget=budget)
    print(f"solver W                 = {_fmt(w)}")
    print(f"closed-loop oracle       = {_fmt(cl)}  (gap {_fmt(w - cl)})")
    print(f"open-loop oracle         = {_fmt(ol)}  (information gap {_fmt(cl - ol)})")
    print(f"exhaustive membership    = {ex}")
    print(f"expansions used          = {budget.used}")
    if ol > cl + 1e-9:
        print("warning: open-loop value exceeds closed-loop value")
        return 1
    return 0


def cmd_analytic_fishery(args) -> int:
    problem = _load_problem(args)
    if problem.config.model_kind != "fishery-beverton-holt":
        raise ConfigError("analytic-fishery requires a fishery model")
    out = Path(problem.config.output_dir)
    _write_analytic(out / "analytic_fishery.csv",
                    _header("analytic-fishery", problem), problem)
    params = problem.config.fishery
    for w in params.scenarios:
        print(f"scenario {w}: msy stock = {params.msy_stock(w):.6g}, "
              f"msy harvest = {params.msy_harvest(w):.6g}")
    print(f"wrote {out / 'analytic_fishery.csv'}")
    return 0


# -- argument parsing ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the YAML configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--jobs", type=int, help="parallel workers over thresholds")
    p.add_argument("--interp", choices=("multilinear", "nearest"),
                   help="interpolation mode override")
    p.add_argument("--full-grid", action="store_true", dest="full_grid",
                   help="skip reachability, populate every grid node")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-thresholds",
        description="Robust sustainable threshold sets of uncertain "
                    "discrete-time control systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weak-front", help="trace the weak Pareto front")
    _add_common(p)
    p.add_argument("--debug-export", action="store_true",
                   help="also export reachable sets as CSV")
    p.set_defaults(func=cmd_weak_front)

    p = sub.add_parser("strong-front", help="sequential strong Pareto chains")
    _add_common(p)
    p.add_argument("--start", required=True,
                   help="sustainable starting threshold, e.g. '10,2'")
    p.add_argument("--perm", default="all",
                   help="component order (1-based, e.g. '2,1') or 'all'")
    p.set_defaults(func=cmd_strong_front)

    p = sub.add_parser("membership", help="decide one threshold")
    _add_common(p)
    p.add_argument("--threshold", required=True, help="threshold vector 'c1,c2,...'")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with brute-force oracles")
    p.add_argument("--debug-export", action="store_true",
                   help="also export value tables as CSV")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("value", help="print W(xi, c)")
    _add_common(p)
    p.add_argument("--threshold", required=True, help="threshold vector 'c1,c2,...'")
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("oracle-check", help="solver versus brute-force oracles")
    _add_common(p)
    p.add_argument("--threshold", required=True, help="threshold vector 'c1,c2,...'")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("analytic-fishery", help="closed-form benchmark curves")
    _add_common(p)
    p.set_defaults(func=cmd_analytic_fishery)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, oracle.BudgetExceededError,
            pareto.InfeasibleThresholdError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
