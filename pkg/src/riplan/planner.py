"""RRT*-style planner over (position, covariance) states with the RI edge cost.

The tree keeps node data in growable numpy arrays so nearest-neighbour and
edge-cost evaluations over all candidates are vectorised; the public helpers
(:func:`nearest`, :func:`neighbors`, ...) return :class:`TreeNode` views.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import matnum
from .collision import state_clear, transitions_clear_many
from .pathspace import PiecewisePath, arc_times
from .ricost import (P_FLOOR, GoalRegion, RiParams, UncertainState, goal_lower_bound_many,
                     ri_terms_many)

__all__ = [
    "CorruptedTreeError", "InfeasibleStartError", "GoalRegion", "PlanResult", "Tree",
    "TreeNode", "dhat", "extend", "generate", "nearest", "neighbors", "plan", "prune",
    "steer", "update_descendants",
]


class InfeasibleStartError(ValueError):
    pass


class CorruptedTreeError(RuntimeError):
    pass


@dataclass(frozen=True)
class TreeNode:
    id: int
    state: UncertainState
    parent: int | None
    children: frozenset
    edge_cost: float
    path_cost: float


class Tree:
    """Single-writer planner tree. Node ids are insertion indices and never reused."""

    def __init__(self, root: UncertainState, params: RiParams, capacity: int = 1024):
        d = root.dim
        self.dim = d
        self.params = params
        cap = max(int(capacity), 16)
        self.X = np.zeros((cap, d))
        self.P = np.zeros((cap, d, d))
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.edge_dist = np.zeros(cap)
        self.edge_bits = np.zeros(cap)
        self.edge_cost = np.zeros(cap)
        self.path_cost = np.zeros(cap)
        self.alive = np.zeros(cap, dtype=bool)
        self.in_goal = np.zeros(cap, dtype=bool)
        self.children: list[set[int]] = []
        self.n = 0
        self._add(root.x, root.P, -1, 0.0, 0.0)

    def _grow(self):
        cap = 2 * self.X.shape[0]
        for name in ("X", "P", "parent", "edge_dist", "edge_bits", "edge_cost", "path_cost",
                     "alive", "in_goal"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            if name == "parent":
                new[:] = -1
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def _add(self, x, P, parent: int, dist: float, bits: float) -> int:
        if self.n == self.X.shape[0]:
            self._grow()
        i = self.n
        self.X[i] = x
        self.P[i] = P
        self.parent[i] = parent
        self.edge_dist[i] = dist
        self.edge_bits[i] = bits
        self.edge_cost[i] = dist + self.params.alpha * bits
        self.path_cost[i] = (self.path_cost[parent] if parent >= 0 else 0.0) + self.edge_cost[i]
        self.alive[i] = True
        self.children.append(set())
        if parent >= 0:
            self.children[parent].add(i)
        self.n += 1
        return i

    def add_node(self, state: UncertainState, parent: int) -> int:
        """Append ``state`` under ``parent`` with the RI edge cost (no collision check)."""
        dist, bits = ri_terms_many(self.X[parent], self.P[parent], state.x, state.P, self.params.W)
        return self._add(state.x, state.P, parent, float(dist), float(bits))

    def state(self, i: int) -> UncertainState:
        return UncertainState(self.X[i].copy(), self.P[i].copy())

    def node(self, i: int) -> TreeNode:
        p = int(self.parent[i])
        return TreeNode(i, self.state(i), None if p < 0 else p, frozenset(self.children[i]),
                        float(self.edge_cost[i]), float(self.path_cost[i]))

    @property
    def alive_ids(self) -> np.ndarray:
        return np.nonzero(self.alive[: self.n])[0]

    def __len__(self) -> int:
        return int(np.count_nonzero(self.alive[: self.n]))

    def set_parent(self, j: int, new_parent: int, dist: float, bits: float) -> None:
        old = int(self.parent[j])
        if old >= 0:
            self.children[old].discard(j)
        self.children[new_parent].add(j)
        self.parent[j] = new_parent
        self.edge_dist[j] = dist
        self.edge_bits[j] = bits
        self.edge_cost[j] = dist + self.params.alpha * bits
        self.path_cost[j] = self.path_cost[new_parent] + self.edge_cost[j]
        update_descendants(self, j)

    def path_to(self, i: int) -> list[int]:
        ids = []
        while i >= 0:
            ids.append(i)
            if len(ids) > self.n:
                raise CorruptedTreeError("cycle in parent links")
            i = int(self.parent[i])
        return ids[::-1]

    def best_goal(self) -> tuple[int | None, float]:
        """Cheapest live goal node (smallest id on ties) and its cost."""
        mask = self.alive[: self.n] & self.in_goal[: self.n]
        if not np.any(mask):
            return None, math.inf
        ids = np.nonzero(mask)[0]
        costs = self.path_cost[ids]
        k = int(np.argmin(costs))
        return int(ids[k]), float(costs[k])

    def audit(self, tol: float = 1e-9) -> None:
        """Check cost additivity, acyclicity and parent/child symmetry."""
        n = self.n
        if not self.alive[0] or self.parent[0] != -1 or self.path_cost[0] != 0.0:
            raise CorruptedTreeError("root must be alive, parentless and cost 0")
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        while stack:
            i = stack.pop()
            if seen[i]:
                raise CorruptedTreeError(f"node {i} reached twice")
            seen[i] = True
            for c in self.children[i]:
                if self.parent[c] != i:
                    raise CorruptedTreeError(f"child {c} of {i} has parent {self.parent[c]}")
                if not self.alive[c]:
                    raise CorruptedTreeError(f"dead node {c} still linked under {i}")
                expect = self.path_cost[i] + self.edge_cost[c]
                if abs(self.path_cost[c] - expect) > tol * (1.0 + abs(expect)):
                    raise CorruptedTreeError(f"path cost of {c} is {self.path_cost[c]}, expected {expect}")
                stack.append(c)
        alive = self.alive[:n]
        if np.any(alive & ~seen):
            raise CorruptedTreeError("live nodes unreachable from the root")
        for i in np.nonzero(alive)[0][1:]:
            p = int(self.parent[i])
            if p < 0 or i not in self.children[p]:
                raise CorruptedTreeError(f"node {i} missing from its parent's children")


@dataclass
class PlanResult:
    best_path: PiecewisePath | None
    best_cost: float
    cost_curve: np.ndarray
    tree: Tree
    rng_seed: int
    best_ids: list[int] = field(default_factory=list)
    euclid_len: float = math.nan
    info_bits: float = math.nan
    prune_removed: int = 0
    wall_time: float = 0.0


def dhat(z: UncertainState, z2: UncertainState) -> float:
    """Auxiliary metric: Euclidean position gap plus Frobenius covariance gap."""
    return float(np.linalg.norm(z.x - z2.x) + np.linalg.norm(z.P - z2.P))


def _dhat_all(tree: Tree, x: np.ndarray, P: np.ndarray) -> np.ndarray:
    n = tree.n
    dx = tree.X[:n] - x
    dP = (tree.P[:n] - P).reshape(n, -1)
    dh = np.sqrt(np.einsum("ij,ij->i", dx, dx)) + np.sqrt(np.einsum("ij,ij->i", dP, dP))
    dh[~tree.alive[:n]] = np.inf
    return dh


def _random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        th = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(th), math.sin(th)
        return np.array([[c, -s], [s, c]])
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def generate(rng: np.random.Generator, bounds, cov_eig_range) -> UncertainState:
    """Uniform position in ``bounds``; covariance with random axes and eigenvalues in range."""
    lo, hi = np.asarray(bounds.lo, float), np.asarray(bounds.hi, float)
    d = lo.shape[0]
    x = rng.uniform(lo, hi)
    lam = rng.uniform(cov_eig_range[0], cov_eig_range[1], size=d)
    R = _random_rotation(rng, d)
    P = (R * lam) @ R.T
    return UncertainState(x, 0.5 * (P + P.T))


def _floor_cov(P: np.ndarray) -> np.ndarray:
    P = 0.5 * (P + P.T)
    lam, V = matnum.sym_eig(P)
    if lam[0] >= P_FLOOR:
        return P
    P = (V * np.maximum(lam, P_FLOOR)) @ V.T
    return 0.5 * (P + P.T)


def nearest(tree: Tree, z: UncertainState) -> TreeNode:
    dh = _dhat_all(tree, z.x, z.P)
    return tree.node(int(np.argmin(dh)))


def steer(z_near: UncertainState, z_sampled: UncertainState, ed_min: float) -> UncertainState:
    """Move from ``z_near`` toward ``z_sampled`` by at most ``ed_min`` in the auxiliary metric."""
    gap = dhat(z_near, z_sampled)
    if gap <= ed_min:
        return z_sampled
    r = ed_min / gap
    x = z_near.x + r * (z_sampled.x - z_near.x)
    P = z_near.P + r * (z_sampled.P - z_near.P)
    return UncertainState(x, _floor_cov(P))


def neighbors(tree: Tree, z_new: UncertainState, ed_nbors: float) -> list[TreeNode]:
    dh = _dhat_all(tree, z_new.x, z_new.P)
    return [tree.node(int(i)) for i in np.nonzero(dh <= ed_nbors)[0]]


def update_descendants(tree: Tree, node: int) -> None:
    """Recompute accumulated costs over the subtree rooted at ``node``."""
    stack = list(tree.children[node])
    visited = {node}
    while stack:
        c = stack.pop()
        if c in visited:
            raise CorruptedTreeError(f"cycle through node {c}")
        visited.add(c)
        tree.path_cost[c] = tree.path_cost[tree.parent[c]] + tree.edge_cost[c]
        stack.extend(tree.children[c])


@dataclass(frozen=True)
class ExtendOutcome:
    node: int | None
    reason: str = ""

    @property
    def added(self) -> bool:
        return self.node is not None


def extend(tree: Tree, z_sampled: UncertainState, scenario) -> ExtendOutcome:
    """One RRT* growth step: steer, choose the cheapest parent, rewire neighbours."""
    cfg = scenario.planner
    params, W = scenario.params, scenario.params.W
    chi2, obstacles, bounds, ds = scenario.chi2, scenario.obstacles, scenario.bounds, cfg.ds

    dh = _dhat_all(tree, z_sampled.x, z_sampled.P)
    near = int(np.argmin(dh))
    z_new = steer(tree.state(near), z_sampled, cfg.ed_min)
    x_new, P_new = z_new.x, z_new.P
    if not transitions_clear_many(tree.X[near], tree.P[near], x_new, P_new, W, chi2,
                                  obstacles, bounds, ds)[0]:
        return ExtendOutcome(None, "collision")

    dh = _dhat_all(tree, x_new, P_new)
    nbrs = np.nonzero(dh <= cfg.ed_nbors)[0]
    cand = np.union1d(nbrs, [near])
    dist, bits = ri_terms_many(tree.X[cand], tree.P[cand], x_new, P_new, W)
    cost = tree.path_cost[cand] + dist + params.alpha * bits
    order = np.lexsort((cand, cost))
    k_near = int(np.nonzero(cand == near)[0][0])
    # The nearest node's transition is already known to be clear, so only
    # candidates ranked ahead of it need a collision check.
    ahead = order[: int(np.nonzero(order == k_near)[0][0])]
    best = k_near
    if ahead.size:
        ok = transitions_clear_many(tree.X[cand[ahead]], tree.P[cand[ahead]], x_new, P_new, W,
                                    chi2, obstacles, bounds, ds)
        if np.any(ok):
            best = int(ahead[int(np.argmax(ok))])
    parent = int(cand[best])
    new = tree._add(x_new, P_new, parent, float(dist[best]), float(bits[best]))
    tree.in_goal[new] = scenario.goal.contains(z_new)

    others = nbrs[nbrs != parent]
    if others.size:
        rdist, rbits = ri_terms_many(x_new, P_new, tree.X[others], tree.P[others], W)
        rcost = tree.path_cost[new] + rdist + params.alpha * rbits
        better = rcost < tree.path_cost[others]
        if np.any(better):
            idx = np.nonzero(better)[0]
            ok = transitions_clear_many(x_new, P_new, tree.X[others[idx]], tree.P[others[idx]], W,
                                        chi2, obstacles, bounds, ds)
            for k in idx[ok]:
                j = int(others[k])
                if tree.path_cost[new] + rdist[k] + params.alpha * rbits[k] < tree.path_cost[j]:
                    tree.set_parent(j, new, float(rdist[k]), float(rbits[k]))
    return ExtendOutcome(new)


def prune(tree: Tree, goal: GoalRegion, params: RiParams) -> int:
    """Branch-and-bound: drop nodes whose cost plus goal lower bound reaches the best goal cost."""
    best, best_cost = tree.best_goal()
    if best is None:
        return 0
    ids = tree.alive_ids
    lb = goal_lower_bound_many(tree.X[ids], tree.P[ids], goal, params)
    doomed = ids[tree.path_cost[ids] + lb >= best_cost]
    keep = set(tree.path_to(best))
    removed = 0
    stack = [int(i) for i in doomed if int(i) not in keep]
    while stack:
        i = stack.pop()
        if not tree.alive[i]:
            continue
        tree.alive[i] = False
        removed += 1
        p = int(tree.parent[i])
        if p >= 0:
            tree.children[p].discard(i)
        stack.extend(tree.children[i])
        tree.children[i] = set()
    after = tree.best_goal()
    if after[0] != best or after[1] != best_cost:
        raise CorruptedTreeError("pruning changed the best goal cost")
    return removed


def extract_path(tree: Tree, ids: list[int]) -> PiecewisePath | None:
    if len(ids) < 2:
        X = np.repeat(tree.X[ids], 2, axis=0)
        P = np.repeat(tree.P[ids], 2, axis=0)
        return PiecewisePath(np.array([0.0, 1.0]), X, P)
    X, P = tree.X[ids], tree.P[ids]
    return PiecewisePath(arc_times(X, P), X, P)


def plan(scenario, audit_every: int | None = None) -> PlanResult:
    """Run ``n_nodes`` sample/extend iterations and return the cheapest goal path found."""
    t0 = time.perf_counter()
    cfg = scenario.planner
    init = scenario.init
    if not state_clear(init.x, init.P, scenario.chi2, scenario.obstacles, scenario.bounds):
        raise InfeasibleStartError("initial state's confidence ellipse is in collision")
    if audit_every is None:
        audit_every = 1 if cfg.debug else 100
    tree = Tree(init, scenario.params, capacity=cfg.n_nodes + 1)
    tree.in_goal[0] = scenario.goal.contains(init)
    rng = np.random.default_rng(cfg.seed)
    curve = np.empty(cfg.n_nodes)
    best_cost = tree.best_goal()[1]
    removed = 0
    for it in range(cfg.n_nodes):
        z = generate(rng, scenario.bounds, cfg.cov_eig_range)
        extend(tree, z, scenario)
        if cfg.prune_every and (it + 1) % cfg.prune_every == 0:
            removed += prune(tree, scenario.goal, scenario.params)
        if audit_every and (it + 1) % audit_every == 0:
            tree.audit()
        cost = tree.best_goal()[1]
        if cost > best_cost:
            raise CorruptedTreeError(f"best cost increased from {best_cost} to {cost}")
        best_cost = cost
        curve[it] = cost
    tree.audit()
    best, best_cost = tree.best_goal()
    result = PlanResult(None, best_cost, curve, tree, cfg.seed, prune_removed=removed)
    if best is not None:
        ids = tree.path_to(best)
        result.best_ids = ids
        result.best_path = extract_path(tree, ids)
        result.euclid_len = float(np.sum(tree.edge_dist[ids[1:]]))
        result.info_bits = float(np.sum(tree.edge_bits[ids[1:]]))
    result.wall_time = time.perf_counter() - t0
    return result
