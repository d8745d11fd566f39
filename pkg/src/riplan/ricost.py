"""Rationally inattentive (RI) transition cost between uncertain states.

A transition ``(x0, P0) -> (x1, P1)`` is priced as the Euclidean travel
distance plus ``alpha`` times the number of bits a sensor must deliver at the
destination.  Covariance grows as ``P0 + |x1 - x0| W`` while travelling and is
then reduced by one measurement ("move-and-sense").
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matnum
from .matnum import InvalidInputError, NotPDError

P_FLOOR = 1e-8
LOG2E = 1.0 / math.log(2.0)


def _as_vec(x) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise InvalidInputError(f"position must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("position has non-finite entries")
    return v


@dataclass(frozen=True, eq=False)
class UncertainState:
    """Nominal position ``x`` with covariance ``P`` (min eigenvalue >= P_FLOOR)."""

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        x = _as_vec(self.x)
        P = matnum.as_sym(self.P)
        if P.shape[0] != x.shape[0]:
            raise InvalidInputError(f"dim(x)={x.shape[0]} but P is {P.shape}")
        lam, _ = matnum.sym_eig(P)
        if lam[0] < P_FLOOR * (1.0 - 1e-9):
            raise NotPDError(f"covariance min eigenvalue {lam[0]:.3g} below floor {P_FLOOR:g}")
        x.flags.writeable = False
        P.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def __eq__(self, other):
        if not isinstance(other, UncertainState):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.P, other.P)

    def __hash__(self):
        return hash((self.x.tobytes(), self.P.tobytes()))

    def __repr__(self):
        return f"UncertainState(x={self.x.tolist()}, P={self.P.tolist()})"


@dataclass(frozen=True)
class RiParams:
    alpha: float
    W: np.ndarray

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha < 0:
            raise InvalidInputError(f"alpha must be >= 0, got {self.alpha}")
        W = matnum.as_sym(self.W)
        if not matnum.is_pd(W):
            raise NotPDError("W must be positive definite")
        W.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "W", W)

    @property
    def dim(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class GoalRegion:
    """Axis-aligned position box plus an upper bound on the covariance."""

    lo: np.ndarray
    hi: np.ndarray
    P_max: np.ndarray

    def __post_init__(self):
        lo, hi = _as_vec(self.lo), _as_vec(self.hi)
        P_max = matnum.as_sym(self.P_max)
        if lo.shape != hi.shape or P_max.shape[0] != lo.shape[0]:
            raise InvalidInputError("goal box and P_max dimensions disagree")
        if np.any(lo > hi):
            raise InvalidInputError("goal box has lo > hi")
        if not matnum.is_pd(P_max):
            raise NotPDError("goal P_max must be positive definite")
        for a in (lo, hi, P_max):
            a.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "P_max", P_max)

    def contains(self, z: UncertainState) -> bool:
        if np.any(z.x < self.lo) or np.any(z.x > self.hi):
            return False
        return matnum.psd_leq(z.P, self.P_max)

    def closest_point(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)


def d_cont(x_from, x_to) -> float:
    a, b = _as_vec(x_from), _as_vec(x_to)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(math.sqrt(float(np.dot(b - a, b - a))))


def propagate(P, dist: float, W) -> np.ndarray:
    """Prior covariance after travelling ``dist`` without sensing."""
    return np.asarray(P, dtype=float) + float(dist) * np.asarray(W, dtype=float)


def d_info(P_hat, P_next) -> float:
    """Minimum bits to turn prior ``P_hat`` into a posterior no larger than ``P_next``.

    Closed-form optimum of the max-det program: in coordinates where
    ``P_hat = I`` the best intermediate covariance keeps the eigenvectors of
    ``P_next`` and clips its eigenvalues at 1, so only directions in which
    ``P_next`` is smaller than ``P_hat`` cost anything.
    """
    P_hat = np.asarray(P_hat, dtype=float)
    P_next = np.asarray(P_next, dtype=float)
    if P_hat.ndim == 0:
        P_hat = P_hat.reshape(1, 1)
        P_next = P_next.reshape(1, 1)
    if P_hat.shape != P_next.shape:
        raise InvalidInputError(f"dimension mismatch {P_hat.shape} vs {P_next.shape}")
    if P_hat.shape == (1, 1):
        a, b = float(P_hat[0, 0]), float(P_next[0, 0])
        if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
            raise NotPDError("covariances must be positive")
        return 0.5 * math.log2(a / b) if b < a else 0.0
    if not matnum.is_pd(P_next):
        raise NotPDError("P_next must be positive definite")
    mu = matnum.gen_eigvals(P_next, P_hat)
    return float(0.5 * sum(-math.log2(m) for m in mu if m < 1.0))


def _check_dims(z_from: UncertainState, z_to: UncertainState, params: RiParams) -> None:
    if not (z_from.dim == z_to.dim == params.dim):
        raise InvalidInputError("state and parameter dimensions disagree")


def ri_cost_terms(z_from: UncertainState, z_to: UncertainState, params: RiParams) -> tuple[float, float]:
    """``(travel distance, information bits)`` of one move-and-sense transition."""
    _check_dims(z_from, z_to, params)
    dist = d_cont(z_from.x, z_to.x)
    return dist, d_info(propagate(z_from.P, dist, params.W), z_to.P)


def ri_distance(z_from: UncertainState, z_to: UncertainState, params: RiParams) -> float:
    dist, bits = ri_cost_terms(z_from, z_to, params)
    return dist + params.alpha * bits


def goal_lower_bound(z: UncertainState, goal: GoalRegion, params: RiParams) -> float:
    """RI distance from ``z`` to the cheapest-looking goal state.

    The target is the goal-box point nearest to ``z.x`` with the most
    permissive covariance ``P_max``.  Admissible for d=1; a pruning heuristic
    otherwise.
    """
    target = UncertainState(goal.closest_point(z.x), goal.P_max)
    if goal.contains(z):
        return 0.0
    return ri_distance(z, target, params)


# ---------------------------------------------------------------------------
# Batched versions used by the planner.  States are given as stacked arrays:
# X with shape (n, d) and P with shape (n, d, d).


def d_info_many(P_hat: np.ndarray, P_next: np.ndarray) -> np.ndarray:
    """Vectorised ``d_info`` over stacks of ``(d, d)`` matrices (broadcasting)."""
    P_hat, P_next = np.broadcast_arrays(np.asarray(P_hat, float), np.asarray(P_next, float))
    d = P_hat.shape[-1]
    if d == 1:
        ratio = P_next[..., 0, 0] / P_hat[..., 0, 0]
        return 0.5 * np.maximum(0.0, -np.log2(ratio))
    if d == 2:
        # Roots of det(P_next - mu P_hat) = 0.
        a11, a12, a22 = P_hat[..., 0, 0], P_hat[..., 0, 1], P_hat[..., 1, 1]
        b11, b12, b22 = P_next[..., 0, 0], P_next[..., 0, 1], P_next[..., 1, 1]
        det_a = a11 * a22 - a12 * a12
        det_b = b11 * b22 - b12 * b12
        cross = a11 * b22 + a22 * b11 - 2.0 * a12 * b12
        half_tr = 0.5 * cross / det_a
        prod = det_b / det_a
        disc = np.sqrt(np.maximum(half_tr * half_tr - prod, 0.0))
        big = half_tr + disc
        small = prod / big
        return 0.5 * (np.maximum(0.0, -np.log2(small)) + np.maximum(0.0, -np.log2(big)))
    L = np.linalg.cholesky(P_hat)
    Y = np.linalg.solve(L, P_next)
    M = np.linalg.solve(L, np.swapaxes(Y, -1, -2))
    mu = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    return 0.5 * np.sum(np.maximum(0.0, -np.log2(mu)), axis=-1)


def ri_terms_many(X_from, P_from, X_to, P_to, W) -> tuple[np.ndarray, np.ndarray]:
    """Travel distances and info bits for stacks of transitions (broadcasting)."""
    X_from, X_to = np.asarray(X_from, float), np.asarray(X_to, float)
    dist = np.sqrt(np.sum((X_to - X_from) ** 2, axis=-1))
    P_hat = np.asarray(P_from, float) + dist[..., None, None] * np.asarray(W, float)
    return dist, d_info_many(P_hat, P_to)


def ri_distance_many(X_from, P_from, X_to, P_to, params: RiParams) -> np.ndarray:
    dist, bits = ri_terms_many(X_from, P_from, X_to, P_to, params.W)
    return dist + params.alpha * bits


def goal_lower_bound_many(X, P, goal: GoalRegion, params: RiParams) -> np.ndarray:
    X = np.asarray(X, float)
    target = np.clip(X, goal.lo, goal.hi)
    return ri_distance_many(X, P, target, goal.P_max, params)
