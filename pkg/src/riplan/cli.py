"""Command-line entry point: ``riplan plan | sweep | verify``.

Exit codes: 0 success, 2 no path found, 3 invalid scenario or usage,
4 verification failure, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import statistics
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import checks, ricost
from .matnum import InvalidInputError, NotPDError, NotPSDError
from .pathspace import vech, vech_labels
from .planner import CorruptedTreeError, InfeasibleStartError, PlanResult, plan
from .render import render_scene
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK, EXIT_INTERNAL, EXIT_NO_PATH, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3, 4
AUDIT_TOL = 1e-6


class AuditError(RuntimeError):
    pass


@dataclass
class RunReport:
    label: str
    seed: int
    alpha: float
    n_iterations: int
    found: bool
    best_cost: float
    euclid_len: float
    info_bits: float
    n_nodes: int
    n_edges: int
    prune_removed: int
    cost_curve: list = field(default_factory=list, repr=False)
    wall_time: float = 0.0

    def summary(self) -> dict:
        """JSON-ready summary; leaves out timing so reruns are byte-identical."""
        d = asdict(self)
        d.pop("cost_curve")
        d.pop("wall_time")
        for k in ("best_cost", "euclid_len", "info_bits"):
            if not math.isfinite(d[k]):
                d[k] = None
        return d


def audit_result(result: PlanResult, alpha: float) -> None:
    """Cost decomposition and anytime monotonicity of one planner run."""
    curve = result.cost_curve
    if np.any(curve[1:] > curve[:-1]):
        raise AuditError("cost curve increases")
    if result.best_path is None:
        return
    recomposed = result.euclid_len + alpha * result.info_bits
    if abs(result.best_cost - recomposed) > AUDIT_TOL * max(1.0, abs(result.best_cost)):
        raise AuditError(f"best cost {result.best_cost!r} != euclid + alpha*bits = {recomposed!r}")


def make_report(scenario: Scenario, result: PlanResult) -> RunReport:
    tree = result.tree
    n_alive = len(tree)
    return RunReport(
        label=scenario.label, seed=scenario.planner.seed, alpha=scenario.params.alpha,
        n_iterations=scenario.planner.n_nodes, found=result.best_path is not None,
        best_cost=result.best_cost, euclid_len=result.euclid_len, info_bits=result.info_bits,
        n_nodes=n_alive, n_edges=n_alive - 1, prune_removed=result.prune_removed,
        cost_curve=[float(v) for v in result.cost_curve], wall_time=result.wall_time)


# ---------------------------------------------------------------------------
# artifacts


def _csv_text(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def _num(v: float) -> str:
    return repr(float(v))


def artifact_texts(scenario: Scenario, result: PlanResult, report: RunReport) -> dict[str, str]:
    tree = result.tree
    d = scenario.dim
    ids = tree.alive_ids
    nodes = _csv_text(
        ["id", "parent"] + [f"x{i + 1}" for i in range(d)] + vech_labels(d) + ["path_cost"],
        ([int(i), int(tree.parent[i])] + [_num(v) for v in tree.X[i]] + [_num(v) for v in vech(tree.P[i])]
         + [_num(tree.path_cost[i])] for i in ids))
    edges = _csv_text(["parent_id", "child_id", "edge_cost"],
                      ([int(tree.parent[i]), int(i), _num(tree.edge_cost[i])] for i in ids[1:]))
    if result.best_path is not None:
        best = result.best_path.to_csv()
    else:
        best = _csv_text(["t"] + [f"x{i + 1}" for i in range(d)] + vech_labels(d), [])
    curve = _csv_text(["iteration", "best_cost"],
                      ([k + 1, _num(c)] for k, c in enumerate(result.cost_curve)))
    return {
        "nodes.csv": nodes,
        "edges.csv": edges,
        "best_path.csv": best,
        "cost_curve.csv": curve,
        "scene.svg": render_scene(scenario, tree, result.best_ids),
        "report.json": json.dumps(report.summary(), indent=2, sort_keys=True) + "\n",
    }


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# operations


def run_plan(scenario: Scenario, out_dir=None, *, n_nodes=None, seed=None, alpha=None
             ) -> tuple[RunReport, PlanResult]:
    """Plan once, audit the result and (optionally) write all artifacts to ``out_dir``."""
    sc = scenario.with_overrides(n_nodes=n_nodes, seed=seed, alpha=alpha)
    result = plan(sc)
    audit_result(result, sc.params.alpha)
    report = make_report(sc, result)
    if out_dir is not None:
        for name, text in artifact_texts(sc, result, report).items():
            write_atomic(Path(out_dir) / name, text)
    return report, result


SWEEP_COLUMNS = ["alpha", "seed", "best_cost", "euclid_len", "info_bits", "status"]


def run_sweep(scenario: Scenario, alphas, seeds, out_dir=None, *, n_nodes=None) -> list[dict]:
    """Every (alpha, seed) pair; failed runs are recorded and the sweep continues.

    Returns per-run rows followed by one ``seed = "median"`` row per alpha
    (medians over runs that found a path).
    """
    alphas, seeds = list(alphas), list(seeds)
    if not alphas or not seeds:
        raise ValueError("sweep needs at least one alpha and one seed")
    rows = []
    for a in alphas:
        for s in seeds:
            row = {"alpha": float(a), "seed": int(s)}
            try:
                rep, _ = run_plan(scenario, n_nodes=n_nodes, seed=s, alpha=a)
                row.update(best_cost=rep.best_cost, euclid_len=rep.euclid_len, info_bits=rep.info_bits,
                           status="ok" if rep.found else "no-path")
            except (InfeasibleStartError, CorruptedTreeError, AuditError, InvalidInputError) as exc:
                row.update(best_cost=math.nan, euclid_len=math.nan, info_bits=math.nan,
                           status=f"error: {exc}")
            rows.append(row)
    for a in alphas:
        ok = [r for r in rows if r["alpha"] == float(a) and r["status"] == "ok"]
        med = {k: statistics.median(r[k] for r in ok) if ok else math.nan
               for k in ("best_cost", "euclid_len", "info_bits")}
        rows.append({"alpha": float(a), "seed": "median", **med, "status": f"{len(ok)} ok"})
    if out_dir is not None:
        write_atomic(Path(out_dir) / "sweep.csv", _csv_text(
            SWEEP_COLUMNS,
            ([_num(r["alpha"]), r["seed"]] + [_num(r[k]) for k in ("best_cost", "euclid_len", "info_bits")]
             + [r["status"]] for r in rows)))
    return rows


def run_verify(quick: bool = True, d_info: Callable = ricost.d_info, echo=print) -> bool:
    """Run the seeded oracle and property gates; ``d_info`` can be swapped for a negative control."""
    results = checks.run_all(quick=quick, d_info=d_info)
    for r in results:
        echo(r.line())
    ok = all(r.passed for r in results)
    echo(f"{sum(r.passed for r in results)}/{len(results)} gates passed")
    return ok


# ---------------------------------------------------------------------------
# argument parsing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riplan", description="Rationally inattentive path planning over (x, P) states.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pp = sub.add_parser("plan", help="run the planner once and write artifacts")
    pp.add_argument("scenario", help="scenario file or bundled name (oneD, funnel, multiobs)")
    pp.add_argument("--nodes", type=int, help="number of sampling iterations")
    pp.add_argument("--seed", type=int)
    pp.add_argument("--alpha", type=float)
    pp.add_argument("--out", type=Path, help="output directory (default: riplan-out/<label>)")

    ps = sub.add_parser("sweep", help="cross product of alphas and seeds")
    ps.add_argument("scenario")
    ps.add_argument("--alphas", type=float, nargs="*", required=True)
    ps.add_argument("--seeds", type=int, nargs="*", required=True)
    ps.add_argument("--nodes", type=int)
    ps.add_argument("--out", type=Path)

    pv = sub.add_parser("verify", help="run the oracle gates")
    pv.add_argument("--full", action="store_true", help="use the full sample counts (slower)")
    return p


def _fmt(v: float) -> str:
    return "nan" if not math.isfinite(v) else f"{v:.6f}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "sweep" and (not args.alphas or not args.seeds):
            raise _UsageError("riplan sweep: error: --alphas and --seeds need at least one value")
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_INVALID

    if args.command == "verify":
        return EXIT_OK if run_verify(quick=not args.full) else EXIT_VERIFY

    try:
        scenario = load_scenario(args.scenario)
        if args.command == "plan":
            out = args.out or Path("riplan-out") / scenario.label
            report, _ = run_plan(scenario, out, n_nodes=args.nodes, seed=args.seed, alpha=args.alpha)
            print(f"{report.label}: seed={report.seed} alpha={report.alpha:g} "
                  f"best_cost={_fmt(report.best_cost)} euclid_len={_fmt(report.euclid_len)} "
                  f"info_bits={_fmt(report.info_bits)} nodes={report.n_nodes} "
                  f"time={report.wall_time:.1f}s -> {out}")
            if not report.found:
                print("no path to the goal region was found", file=sys.stderr)
                return EXIT_NO_PATH
            return EXIT_OK
        out = args.out or Path("riplan-out") / f"{scenario.label}-sweep"
        rows = run_sweep(scenario, args.alphas, args.seeds, out, n_nodes=args.nodes)
        for r in rows:
            print(f"alpha={r['alpha']:g} seed={r['seed']} best_cost={_fmt(r['best_cost'])} "
                  f"euclid_len={_fmt(r['euclid_len'])} info_bits={_fmt(r['info_bits'])} {r['status']}")
        print(f"-> {out / 'sweep.csv'}")
        return EXIT_OK
    except (ScenarioError, InvalidInputError, NotPDError, NotPSDError, InfeasibleStartError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CorruptedTreeError, AuditError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
