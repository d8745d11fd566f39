"""Independent reference computations used to check the fast paths.

* :func:`maxdet_oracle` solves the information-cost max-det program numerically
  with a log-barrier Newton method; it shares no code with the closed form in
  :mod:`riplan.ricost`.
* :func:`grid_dijkstra` is a lattice shortest-path baseline over
  (grid cell, covariance level) pairs.
* :func:`analytic_1d_optimum` and :func:`split_cost_1d` are the closed-form
  1-D move-and-sense costs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .collision import state_clear_many, transitions_clear_many
from .matnum import InvalidInputError
from .ricost import GoalRegion, RiParams, d_info_many

LN2 = math.log(2.0)


class InvalidSplitError(ValueError):
    pass


class StartInCollisionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# max-det


def _sym_basis(d: int) -> np.ndarray:
    basis = []
    for i in range(d):
        for j in range(i, d):
            E = np.zeros((d, d))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return np.array(basis)


def _chol_logdet(M: np.ndarray) -> float | None:
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def maxdet_oracle(P_hat, P_next, gap_tol: float = 1e-9, max_newton: int = 200) -> float:
    """Bits of ``max log det Q  s.t.  0 < Q <= P_hat, Q <= P_next``, solved numerically.

    Barrier method: maximise ``t log det Q + log det(P_hat - Q) + log det(P_next - Q)``
    by damped Newton steps in the coordinates of a symmetric-matrix basis, then
    raise ``t`` fiftyfold until the duality-gap bound ``2d/t`` falls below
    ``gap_tol``.  Starts from half the smaller of the two minimum eigenvalues
    times the identity, which is strictly feasible.
    """
    A = np.atleast_2d(np.asarray(P_hat, dtype=float))
    B = np.atleast_2d(np.asarray(P_next, dtype=float))
    d = A.shape[0]
    basis = _sym_basis(d)
    lam_min = min(np.linalg.eigvalsh(A)[0], np.linalg.eigvalsh(B)[0])
    if lam_min <= 0:
        raise InvalidInputError("both covariances must be positive definite")
    Q = 0.5 * lam_min * np.eye(d)

    def feasible(Qc: np.ndarray) -> bool:
        return all(_chol_logdet(M) is not None for M in (Qc, A - Qc, B - Qc))

    t = 1.0
    while True:
        w = np.array([t, -1.0, -1.0])
        for _ in range(max_newton):
            inv = np.linalg.inv(np.array([Q, A - Q, B - Q]))
            ME = np.einsum("kij,ajl->kail", inv, basis)           # M_k E_a
            grad = np.einsum("k,kaii->a", w, ME)
            H = -np.einsum("k,kaij,kbji->ab", np.abs(w), ME, ME)
            step = np.linalg.solve(H, -grad)
            lam2 = float(grad @ step)
            if lam2 < 1e-9:
                break
            # Damped Newton: the barrier is self-concordant, so 1/(1+lambda) keeps Q feasible.
            s = 1.0 if lam2 < 0.0625 else 1.0 / (1.0 + math.sqrt(lam2))
            dQ = np.tensordot(step, basis, axes=1)
            while not feasible(Q + s * dQ):
                s *= 0.5
                if s < 1e-12:
                    break
            if s < 1e-12:
                break
            Q = Q + s * dQ
            Q = 0.5 * (Q + Q.T)
        if 2.0 * d / t < gap_tol:
            break
        t *= 10.0
    bits = 0.5 * (_chol_logdet(A) - _chol_logdet(Q)) / LN2
    return max(bits, 0.0)


# ---------------------------------------------------------------------------
# 1-D closed forms


def analytic_1d_optimum(x0: float, P0: float, goal: GoalRegion, params: RiParams) -> float:
    """Obstacle-free 1-D optimum: travel straight to the goal box, sense once on arrival."""
    lo, hi = float(goal.lo[0]), float(goal.hi[0])
    x0 = float(np.asarray(x0).ravel()[0])
    P0 = float(np.asarray(P0).ravel()[0])
    W = float(params.W[0, 0])
    P_max = float(goal.P_max[0, 0])
    dist = max(lo - x0, 0.0, x0 - hi)
    return dist + params.alpha * max(0.0, 0.5 * math.log2((P0 + dist * W) / P_max))


def split_cost_1d(x0: float, P0: float, xT: float, P_T: float, beta: float, P_a: float,
                  params: RiParams) -> float:
    """Cost of reaching ``(xT, P_T)`` with an extra measurement a fraction ``beta`` of the way.

    Requires ``P0 + beta L W >= P_a`` (equality is the degenerate split with an
    empty first measurement) and ``P_a + (1 - beta) L W > P_T``.
    """
    W = float(params.W[0, 0])
    L = abs(float(xT) - float(x0))
    if not 0.0 < beta < 1.0:
        raise InvalidSplitError(f"beta must lie in (0, 1), got {beta}")
    prior_a = P0 + beta * L * W
    prior_T = P_a + (1.0 - beta) * L * W
    if not (P_a > 0 and prior_a >= P_a and prior_T > P_T > 0):
        raise InvalidSplitError("split must shrink the covariance at both measurements")
    return L + 0.5 * params.alpha * (math.log2(prior_a / P_a) + math.log2(prior_T / P_T))


# ---------------------------------------------------------------------------
# grid baseline


@dataclass(frozen=True)
class GridSpec:
    """Lattice for :func:`grid_dijkstra`.

    ``resolution`` is the number of lattice points per axis; ``levels`` is an
    ascending list of covariance matrices (scalars for d=1).  ``max_run`` is
    the longest straight run, in cells, the vehicle may travel between two
    measurements.
    """

    resolution: tuple
    levels: tuple
    max_run: int = 1

    def __post_init__(self):
        if len(self.levels) == 0 or len(self.levels) > 64:
            raise InvalidInputError("need 1..64 covariance levels")
        for L in self.levels:
            if np.linalg.eigvalsh(np.atleast_2d(L))[0] <= 0:
                raise InvalidInputError("covariance levels must be positive definite")
        if any(int(r) < 2 for r in self.resolution):
            raise InvalidInputError("need at least two lattice points per axis")
        if self.max_run < 1:
            raise InvalidInputError("max_run must be at least 1")


def default_grid(scenario, resolution: int = 200, n_levels: int = 8) -> GridSpec:
    """Isotropic levels log-spaced over the planner's covariance sampling range.

    In 1-D the vehicle may cross the whole line between measurements; higher
    dimensions sense after every cell to keep the graph small.
    """
    lo, hi = scenario.planner.cov_eig_range
    d = scenario.dim
    vals = np.geomspace(lo, hi, n_levels)
    run = resolution - 1 if d == 1 else 1
    return GridSpec(tuple([resolution] * d), tuple(v * np.eye(d) for v in vals), run)


def _moves(d: int) -> list[tuple]:
    return [m for m in itertools.product((-1, 0, 1), repeat=d) if any(m)]


def grid_dijkstra(scenario, grid: GridSpec, alpha: float | None = None) -> float:
    """Cheapest lattice path cost from the start to the goal set, or ``inf``.

    Lattice states are (grid point, covariance level).  The vehicle travels
    in a straight run of up to ``grid.max_run`` cells, its covariance growing
    by ``W`` per unit length, and then senses to any level.  Every cell step
    is kept only if its move-and-sense transition is clear.  The start enters
    the lattice at the nearest grid point, carrying its own covariance as an
    extra level.
    """
    d = scenario.dim
    params = scenario.params if alpha is None else RiParams(alpha, scenario.params.W)
    W = params.W
    lo, hi = scenario.bounds.lo, scenario.bounds.hi
    axes = [np.linspace(lo[i], hi[i], grid.resolution[i]) for i in range(d)]
    shape = tuple(int(r) for r in grid.resolution)
    n_cells = int(np.prod(shape))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(n_cells, d)
    levels = [np.atleast_2d(np.asarray(L, float)) for L in grid.levels]
    levels.append(scenario.init.P)
    nL = len(levels)
    Ls = np.array(levels)
    chi2, obstacles, bounds, ds = scenario.chi2, scenario.obstacles, scenario.bounds, scenario.planner.ds

    start_cell = np.ravel_multi_index(
        tuple(int(np.argmin(np.abs(axes[i] - scenario.init.x[i]))) for i in range(d)), shape)
    if not state_clear_many(mesh[start_cell][None], scenario.init.P[None], chi2, obstacles, bounds)[0]:
        raise StartInCollisionError("start cell is in collision")

    clear = np.zeros((n_cells, nL), dtype=bool)
    for k in range(nL):
        clear[:, k] = state_clear_many(mesh, np.broadcast_to(Ls[k], (n_cells, d, d)), chi2,
                                       obstacles, bounds)
    steps = np.array([(hi[i] - lo[i]) / (shape[i] - 1) for i in range(d)])
    moves = [np.array(m) for m in _moves(d)]
    R = int(grid.max_run)
    # With single-cell runs, moves of equal length share pre-measurement nodes.
    if R == 1:
        lengths = sorted({round(float(np.linalg.norm(m * steps)), 12) for m in moves})
        key_of = [lengths.index(round(float(np.linalg.norm(m * steps)), 12)) for m in moves]
        key_len = [float(v) for v in lengths]
    else:
        key_of = list(range(len(moves)))
        key_len = [float(np.linalg.norm(m * steps)) for m in moves]
    n_keys = len(key_len)
    n_state = n_cells * nL

    # Pre-measurement node: (cell, start level k, run key, cells travelled n).
    def pre_id(cell, k, key, n):
        return n_state + ((cell * nL + k) * n_keys + key) * R + (n - 1)

    rows, cols, vals = [], [], []
    idx = np.indices(shape).reshape(d, n_cells).T
    for m, key in zip(moves, key_of):
        tgt = idx + m
        inside = np.all((tgt >= 0) & (tgt < np.array(shape)), axis=1)
        src_all = np.nonzero(inside)[0]
        dst_all = np.ravel_multi_index(tuple(tgt[src_all].T), shape)
        length = key_len[key]
        for k in range(nL):
            for n in range(1, R + 1):
                if n == 1:
                    ok = clear[src_all, k]
                    s, t = src_all[ok], dst_all[ok]
                else:
                    s, t = src_all, dst_all
                if s.size == 0:
                    continue
                P_from = Ls[k] + (n - 1) * length * W
                good = transitions_clear_many(mesh[s], np.broadcast_to(P_from, (s.size, d, d)),
                                              mesh[t], np.broadcast_to(P_from + length * W, (s.size, d, d)),
                                              W, chi2, obstacles, bounds, ds)
                s, t = s[good], t[good]
                rows.append(s * nL + k if n == 1 else pre_id(s, k, key, n - 1))
                cols.append(pre_id(t, k, key, n))
                vals.append(np.full(s.size, length))
    for key in range(n_keys):
        for n in range(1, R + 1):
            prior = Ls + n * key_len[key] * W
            sense = d_info_many(np.repeat(prior, nL, axis=0), np.tile(Ls, (nL, 1, 1))).reshape(nL, nL)
            for j in range(nL):
                tgt_ok = np.nonzero(clear[:, j])[0]
                for k in range(nL):
                    rows.append(pre_id(tgt_ok, k, key, n))
                    cols.append(tgt_ok * nL + j)
                    vals.append(np.full(tgt_ok.size, params.alpha * sense[k, j]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    # csgraph treats explicit zeros as missing edges; keep zero-cost edges alive.
    vals = np.where(vals > 0, vals, 1e-300)
    n = n_state + n_cells * nL * n_keys * R
    graph = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    dist = dijkstra(graph, directed=True, indices=start_cell * nL + (nL - 1))

    goal = scenario.goal
    in_box = np.all((mesh >= goal.lo) & (mesh <= goal.hi), axis=1)
    ok_level = np.array([np.linalg.eigvalsh(goal.P_max - L)[0] >= -1e-9 for L in levels])
    targets = (np.nonzero(in_box)[0][:, None] * nL + np.nonzero(ok_level)[0][None, :]).ravel()
    if targets.size == 0:
        return math.inf
    best = float(np.min(dist[targets]))
    return best if math.isfinite(best) else math.inf
