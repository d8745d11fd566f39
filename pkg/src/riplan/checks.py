"""Seeded property gates shared by ``riplan verify`` and the acceptance tests.

Every gate returns a :class:`GateResult` holding the worst residual seen and the
tolerance it is judged against.  A residual is "how far the property is from
failing": positive values are violations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle, ricost
from .pathspace import PiecewisePath, path_cost_integral, path_cost_partition, path_cost_sup, sup_norm, tv_norm
from .ricost import LOG2E, GoalRegion, RiParams, UncertainState

EPS = 0.5
DELTA = 0.25


def lipschitz_const(eps: float = EPS) -> float:
    return max(1.0 + LOG2E / eps, LOG2E / eps ** 2)


@dataclass(frozen=True)
class GateResult:
    name: str
    residual: float
    tol: float
    samples: int
    seconds: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return (f"{status}  {self.name:<22} residual={self.residual:.3e}  tol={self.tol:.1e}  "
                f"n={self.samples}  {self.seconds:.2f}s{extra}")


def random_pd(rng: np.random.Generator, d: int, lo: float = 0.05, hi: float = 5.0) -> np.ndarray:
    """Random rotation of a diagonal with log-uniform eigenvalues in ``[lo, hi]``."""
    lam = np.exp(rng.uniform(math.log(lo), math.log(hi), size=d))
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    M = (Q * lam) @ Q.T
    return 0.5 * (M + M.T)


# ---------------------------------------------------------------------------


def gate_maxdet(n: int = 1000, seed: int = 7, dims=(1, 2, 3),
                d_info: Callable = ricost.d_info) -> GateResult:
    """Closed-form information cost against the numerical max-det solution."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for d in dims:
        for _ in range(n):
            A, B = random_pd(rng, d), random_pd(rng, d)
            r = abs(float(d_info(A, B)) - oracle.maxdet_oracle(A, B))
            if r > worst:
                worst, where = r, f"worst at d={d}"
    return GateResult("maxdet_vs_closed_form", worst, 1e-6, n * len(dims),
                      time.perf_counter() - t0, where)


def random_polyline(rng: np.random.Generator, d: int, n_seg: int | None = None) -> PiecewisePath:
    n_seg = n_seg or int(rng.integers(1, 12))
    t = np.concatenate(([0.0], np.cumsum(rng.uniform(0.05, 1.0, n_seg))))
    X = rng.normal(scale=rng.uniform(0.1, 5.0), size=(n_seg + 1, d))
    P = np.stack([random_pd(rng, d, 0.01, 10.0) for _ in range(n_seg + 1)])
    return PiecewisePath(t, X, P)


def gate_sup_tv(n: int = 10_000, seed: int = 11) -> GateResult:
    """``||g||_inf <= |g|_TV`` on random piecewise-linear paths (d = 1, 2, 3)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, bad = -math.inf, 0
    for i in range(n):
        path = random_polyline(rng, 1 + i % 3)
        r = sup_norm(path) - tv_norm(path)
        bad += r > 1e-12 * (1.0 + tv_norm(path))
        worst = max(worst, r)
    return GateResult("sup_norm_le_tv_norm", max(worst, 0.0) if bad else 0.0, 0.0, n,
                      time.perf_counter() - t0, f"violations={bad}")


def _d1(x0, x1, P0, P1) -> float:
    """RI distance in 1-D with alpha = W = 1."""
    L = abs(x1 - x0)
    return L + max(0.0, 0.5 * math.log2((P0 + L) / P1))


def gate_lipschitz(n: int = 10_000, seed: int = 13, eps: float = EPS, delta: float = DELTA) -> GateResult:
    """One-step Lipschitz bound for the 1-D distance on ``P >= eps`` and perturbations ``<= delta``."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    L_eps = lipschitz_const(eps)
    worst = -math.inf
    for _ in range(n):
        x0, x1 = rng.uniform(-5, 5, 2)
        # Mix of moderate and near-floor covariances.
        P0, P1 = eps + np.where(rng.random(2) < 0.3, rng.uniform(0, 0.05, 2), rng.exponential(2.0, 2))
        dx0, dx1, dP0, dP1 = rng.uniform(-delta, delta, 4)
        P0p, P1p = P0 + dP0, P1 + dP1
        if min(P0p, P1p) < eps:
            dP0, dP1 = abs(dP0), abs(dP1)
            P0p, P1p = P0 + dP0, P1 + dP1
        lhs = abs(_d1(x0 + dx0, x1 + dx1, P0p, P1p) - _d1(x0, x1, P0, P1))
        rhs = L_eps * (abs(dx1 - dx0) + abs(dP1 - dP0) + delta * abs(P1 - P0) + delta * abs(x1 - x0))
        worst = max(worst, lhs - rhs)
    return GateResult("info_cost_lipschitz", max(worst, 0.0), 0.0, n, time.perf_counter() - t0,
                      f"max(lhs-rhs)={worst:.3e}")


def gate_tv_perturbation(n: int = 1000, seed: int = 17, eps: float = EPS, delta: float = DELTA) -> GateResult:
    """Partition-level TV perturbation bound ``|c(g') - c(g)| <= L (|g'-g|_TV + delta |g|_TV)``."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    params = RiParams(1.0, 1.0)
    L_eps = lipschitz_const(eps)
    worst = -math.inf
    for _ in range(n):
        m = int(rng.integers(2, 40))
        t = np.concatenate(([0.0], np.cumsum(rng.uniform(0.05, 1.0, m))))
        X = np.cumsum(rng.normal(scale=rng.uniform(0.05, 2.0), size=m + 1))
        P = 2 * eps + np.abs(np.cumsum(rng.normal(scale=rng.uniform(0.05, 1.0), size=m + 1)))
        # Perturbation whose sup norm stays below delta.
        dX = rng.uniform(-1, 1, m + 1) * rng.uniform(0, delta) * 0.5
        dP = rng.uniform(-1, 1, m + 1) * rng.uniform(0, delta) * 0.5
        g = PiecewisePath(t, X, P)
        gp = PiecewisePath(t, X + dX, P + dP)
        diff = PiecewisePath(t, dX, dP)
        lhs = abs(path_cost_partition(gp, params) - path_cost_partition(g, params))
        rhs = L_eps * (tv_norm(diff) + delta * tv_norm(g))
        worst = max(worst, lhs - rhs)
    return GateResult("tv_perturbation_bound", max(worst, 0.0), 0.0, n, time.perf_counter() - t0,
                      f"max(lhs-rhs)={worst:.3e}")


def gate_split(n: int = 10_000, seed: int = 19, tol: float = 1e-9) -> GateResult:
    """An extra intermediate measurement never beats sensing once on arrival."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = -math.inf
    min_gap = math.inf
    degenerate_err = 0.0
    for i in range(n):
        params = RiParams(float(rng.uniform(0.1, 3.0)), float(rng.uniform(0.05, 2.0)))
        W = float(params.W[0, 0])
        x0 = float(rng.uniform(-5, 5))
        xT = x0 + float(rng.choice([-1, 1]) * rng.uniform(0.1, 10.0))
        L = abs(xT - x0)
        P0 = float(rng.uniform(0.05, 5.0))
        beta = float(rng.uniform(0.01, 0.99))
        prior_a = P0 + beta * L * W
        P_a = prior_a if i % 10 == 0 else float(rng.uniform(0.02, 1.0)) * prior_a
        P_T = float(rng.uniform(0.02, 0.999)) * (P_a + (1 - beta) * L * W)
        single = oracle.analytic_1d_optimum(x0, P0, GoalRegion([xT], [xT], P_T), params)
        split = oracle.split_cost_1d(x0, P0, xT, P_T, beta, P_a, params)
        worst = max(worst, single - split)
        if P_a == prior_a:
            degenerate_err = max(degenerate_err, abs(split - single))
        else:
            min_gap = min(min_gap, split - single)
    residual = max(worst, degenerate_err, 0.0)
    # Non-degenerate splits must cost strictly more than the tolerance.
    if min_gap <= tol:
        residual = math.inf
    return GateResult("split_never_cheaper", residual, tol, n, time.perf_counter() - t0,
                      f"min non-degenerate gap={min_gap:.3e}")


def gate_grid_1d(resolution: int = 141) -> GateResult:
    """Lattice baseline on the empty 1-D line against the closed-form optimum."""
    from .scenario import load_scenario

    t0 = time.perf_counter()
    sc = load_scenario("oneD")
    exact = oracle.analytic_1d_optimum(sc.init.x, sc.init.P, sc.goal, sc.params)
    grid = oracle.default_grid(sc, resolution=resolution)
    val = oracle.grid_dijkstra(sc, grid)
    cell = float(sc.bounds.hi[0] - sc.bounds.lo[0]) / (resolution - 1)
    # One cell of travel plus the extra information it can cost.
    slack = cell * (1.0 + sc.params.alpha * 0.5 * LOG2E * float(sc.params.W[0, 0]) / float(sc.goal.P_max[0, 0]))
    return GateResult("grid_vs_analytic_1d", abs(val - exact), slack, 1, time.perf_counter() - t0,
                      f"grid={val:.6f} exact={exact:.6f}")


# ---------------------------------------------------------------------------
# smooth paths for the integral form


@dataclass(frozen=True)
class SmoothPath:
    """Closed-form path with analytic derivatives and bounded-below speed."""

    x0: np.ndarray
    u: np.ndarray
    n: np.ndarray
    v: float
    a: float
    omega: float
    P0: np.ndarray
    W: np.ndarray
    K: np.ndarray
    b0: float
    b1: float
    omega2: float
    c: float
    T: float

    @property
    def v_min(self) -> float:
        return self.v - self.a * self.omega

    def __call__(self, ts):
        X, P, _, _ = self.derivs(ts)
        return X, P

    def derivs(self, ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        s = np.sin(self.omega * ts)
        X = self.x0 + np.outer(self.v * ts, self.u) + np.outer(self.a * s, self.n)
        Xd = np.outer(np.full_like(ts, self.v), self.u) + np.outer(self.a * self.omega * np.cos(self.omega * ts), self.n)
        g = self.b0 * ts + self.b1 * np.sin(self.omega2 * ts) / self.omega2
        gd = self.b0 + self.b1 * np.cos(self.omega2 * ts)
        vm = self.v_min
        P = self.P0 + vm * (g[:, None, None] * self.W - (self.c * ts)[:, None, None] * self.K)
        Pd = vm * (gd[:, None, None] * self.W - self.c * self.K[None])
        return X, P, Xd, Pd


def random_smooth_path(rng: np.random.Generator, d: int) -> SmoothPath:
    """Path with ``W |xdot| - Pdot`` positive semidefinite everywhere and ``P`` PD."""
    while True:
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        nvec = u.copy() if d == 1 else np.array([-u[1], u[0]])
        v = float(rng.uniform(0.5, 2.0))
        omega = float(rng.uniform(0.5, 4.0))
        a = float(rng.uniform(0.0, 0.45)) * v / omega
        W = random_pd(rng, d, 0.05, 1.0)
        K = random_pd(rng, d, 0.05, 1.0)
        b0 = float(rng.uniform(0.0, 1.0))
        b1 = float(rng.uniform(-1.0, 1.0)) * (1.0 - b0)
        c = float(rng.uniform(0.0, 0.3))
        T = float(rng.uniform(0.5, 3.0))
        P0 = random_pd(rng, d, 0.2, 3.0)
        path = SmoothPath(rng.normal(size=d), u, nvec, v, a, omega, P0, W, K, b0, b1,
                          float(rng.uniform(0.5, 5.0)), c, T)
        _, P = path(np.linspace(0, T, 257))
        if np.min(np.linalg.eigvalsh(P)) > 0.05:
            return path


def gate_integral(n: int = 100, seed: int = 23, tol: float = 1e-4) -> GateResult:
    """Quadrature of the integral form against converged partition sums (d = 1, 2)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        d = 1 + i % 2
        path = random_smooth_path(rng, d)
        params = RiParams(float(rng.uniform(0.1, 2.0)), path.W)
        sup = path_cost_sup(path, path.T, params, rel_tol=1e-6)
        integ = path_cost_integral(path.derivs, path.T, params, n_quad=2048)
        worst = max(worst, abs(sup - integ) / abs(sup))
    return GateResult("integral_vs_partition", worst, tol, n, time.perf_counter() - t0)


def run_all(quick: bool = True, d_info: Callable = ricost.d_info) -> list[GateResult]:
    """All gates with fixed seeds; ``quick`` shrinks sample counts for interactive use."""
    k = 10 if quick else 1
    return [
        gate_maxdet(1000 // k, d_info=d_info),
        gate_sup_tv(10_000 // k),
        gate_lipschitz(10_000 // k),
        gate_tv_perturbation(1000 // k),
        gate_split(10_000 // k),
        gate_grid_1d(),
        gate_integral(100 // k),
    ]


__all__ = [
    "DELTA", "EPS", "GateResult", "SmoothPath", "gate_grid_1d", "gate_integral", "gate_lipschitz",
    "gate_maxdet", "gate_split", "gate_sup_tv", "gate_tv_perturbation", "lipschitz_const", "random_pd",
    "random_polyline", "random_smooth_path", "run_all", "UncertainState",
]
