"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import statistics
import sys
import time

import numpy as np
import pytest

from riplan import checks
from riplan.cli import run_plan
from riplan.oracle import analytic_1d_optimum, default_grid, grid_dijkstra
from riplan.planner import plan
from riplan.scenario import BUNDLED, load_scenario

pytestmark = pytest.mark.slow

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_01_maxdet_gate():
    t0 = time.perf_counter()
    gate = checks.gate_maxdet(1000, dims=(1, 2, 3))
    elapsed = time.perf_counter() - t0
    report(1, "closed-form info cost vs max-det oracle", gate.passed and elapsed < 30.0,
           f"max |diff| = {gate.residual:.2e} (tol 1e-6) over {gate.samples} pairs, {elapsed:.1f}s (< 30s)")


def test_02_oned_convergence():
    sc = load_scenario("oneD")
    exact = analytic_1d_optimum(sc.init.x, sc.init.P, sc.goal, sc.params)
    worst_err, worst_time, monotone = 0.0, 0.0, True
    for seed in range(1, 21):
        r = plan(sc.with_overrides(n_nodes=10_000, seed=seed))
        worst_err = max(worst_err, abs(r.best_cost - exact) / exact)
        worst_time = max(worst_time, r.wall_time)
        curve = r.cost_curve
        monotone &= not np.any(curve[1:] > curve[:-1])
    ok = worst_err <= 0.05 and monotone and worst_time < 120.0
    report(2, "1-D convergence to the analytic optimum", ok,
           f"worst rel. error {worst_err:.2%} (<= 5%) over 20 seeds, curves non-increasing={monotone}, "
           f"slowest run {worst_time:.1f}s (< 120s)")


def test_03_alpha_zero_matches_grid():
    t0 = time.perf_counter()
    sc = load_scenario("multiobs").with_overrides(alpha=0.0, n_nodes=4000)
    r = plan(sc)
    grid = grid_dijkstra(sc, default_grid(sc, resolution=200), alpha=0.0)
    elapsed = time.perf_counter() - t0
    rel = abs(r.euclid_len - grid) / grid
    report(3, "alpha = 0 reduces to Euclidean planning", rel <= 0.10 and elapsed < 180.0,
           f"planner length {r.euclid_len:.4f} vs grid {grid:.4f}: {rel:.2%} (<= 10%), {elapsed:.1f}s (< 180s)")


def test_04_alpha_sweep_trend():
    t0 = time.perf_counter()
    sc = load_scenario("multiobs")
    alphas = (0.0, 0.1, 0.3)
    bits, lens = [], []
    for a in alphas:
        runs = [plan(sc.with_overrides(alpha=a, seed=s)) for s in range(1, 11)]
        found = [r for r in runs if r.best_path is not None]
        assert len(found) == len(runs), f"alpha={a}: {len(runs) - len(found)} runs found no path"
        bits.append(statistics.median(r.info_bits for r in found))
        lens.append(statistics.median(r.euclid_len for r in found))
    elapsed = time.perf_counter() - t0
    ok = (all(b1 >= b2 for b1, b2 in zip(bits, bits[1:])) and all(l1 <= l2 for l1, l2 in zip(lens, lens[1:]))
          and elapsed < 1800.0)
    report(4, "alpha sweep trades travel for information", ok,
           "median bits " + " >= ".join(f"{b:.3f}" for b in bits) + "; median length "
           + " <= ".join(f"{v:.3f}" for v in lens) + f"; {elapsed:.0f}s (< 1800s)")


def corridor(result) -> str | None:
    """Which way round the central block: "A" above the diagonal, "B" below."""
    if result.best_path is None:
        return None
    X = result.tree.X[result.best_ids]
    return "A" if float(np.mean(X[:, 1] - X[:, 0])) > 0 else "B"


def test_05_funnel_asymmetry():
    sc = load_scenario("funnel")
    fwd = [corridor(plan(sc.with_overrides(seed=s))) for s in range(1, 11)]
    swp = [corridor(plan(sc.swapped().with_overrides(seed=s))) for s in range(1, 11)]
    n_fwd, n_swp = fwd.count("B"), swp.count("A")
    report(5, "route choice flips with direction", n_fwd >= 7 and n_swp >= 7,
           f"forward via the funnel-exiting corridor {n_fwd}/10 (>= 7), swapped via the other {n_swp}/10 (>= 7)")


def test_06_sup_below_tv():
    g = checks.gate_sup_tv(10_000)
    report(6, "sup norm <= TV norm", g.passed, f"{g.detail} over {g.samples} random paths")


def test_07_lipschitz_and_tv_perturbation():
    a = checks.gate_lipschitz(10_000)
    b = checks.gate_tv_perturbation(1000)
    report(7, "Lipschitz bound and TV perturbation bound (d = 1)", a.passed and b.passed,
           f"one-step {a.detail} on {a.samples} tuples; path {b.detail} on {b.samples} pairs (zero violations)")


def test_08_split_never_cheaper():
    g = checks.gate_split(10_000)
    report(8, "an extra measurement never helps in free 1-D space", g.passed,
           f"worst violation {g.residual:.1e} (tol 1e-9), {g.detail}, {g.samples} splits")


def test_09_integral_vs_partition():
    g = checks.gate_integral(100)
    report(9, "integral form matches the partition limit", g.passed,
           f"worst rel. difference {g.residual:.2e} (<= 1e-4) on {g.samples} smooth paths")


def test_10_determinism_and_audits(tmp_path):
    details, ok = [], True
    for name in BUNDLED:
        sc = load_scenario(name)
        outs = []
        for k in range(2):
            d = tmp_path / f"{name}-{k}"
            # run_plan audits the tree, pruning and the cost decomposition.
            run_plan(sc, d)
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        same = outs[0] == outs[1]
        ok &= same
        details.append(f"{name} {'identical' if same else 'DIFFERENT'}")
    report(10, "determinism and audits on bundled scenes", ok, ", ".join(details) + "; all audits passed")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
