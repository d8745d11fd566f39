"""Chi-squared confidence-ellipse clearance checks.

A state ``(x, P)`` is clear when its ellipse ``{y : (y-x)^T P^-1 (y-x) <= chi2}``
touches no obstacle and stays inside the workspace.  The check maps space by
``A = P^{-1/2} / sqrt(chi2)`` so the ellipse becomes the unit ball around
``A x``; an obstacle is clear when the distance from ``A x`` to the mapped
obstacle is at least one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear
from scipy.stats import chi2 as chi2_dist

from . import matnum
from .matnum import InvalidInputError
from .ricost import RiParams, UncertainState

MAX_POLYGON_VERTICES = 64


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; an interval when d=1."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("box corners must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInputError("box corners must be finite")
        if np.any(hi <= lo):
            raise InvalidInputError("box must have positive extent on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def vertices(self) -> np.ndarray:
        if self.dim != 2:
            raise InvalidInputError("vertices() is only defined for 2-D boxes")
        (x0, y0), (x1, y1) = self.lo, self.hi
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex 2-D polygon with counter-clockwise vertices."""

    vertices: np.ndarray
    lo: np.ndarray = field(init=False)
    hi: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or not (3 <= v.shape[0] <= MAX_POLYGON_VERTICES):
            raise InvalidInputError("polygon needs 3..64 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("polygon vertices must be finite")
        e = np.roll(v, -1, axis=0) - v
        e_next = np.roll(e, -1, axis=0)
        turn = e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]
        area = 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
        if area <= 0:
            raise InvalidInputError("polygon must be counter-clockwise with positive area")
        if np.any(turn < -1e-12 * (1.0 + float(np.max(np.abs(v)))) ** 2):
            raise InvalidInputError("polygon is not convex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "lo", v.min(axis=0))
        object.__setattr__(self, "hi", v.max(axis=0))

    @property
    def dim(self) -> int:
        return 2


Obstacle = Box | ConvexPolygon


def chi2_value(confidence: float, dof: int) -> float:
    """Inverse chi-squared CDF: the ellipse threshold for a confidence level."""
    if not 0.0 < confidence < 1.0:
        raise InvalidInputError(f"confidence must lie in (0, 1), got {confidence}")
    return float(chi2_dist.ppf(confidence, dof))


def _polygon_of(obs: Obstacle) -> np.ndarray:
    return obs.vertices() if isinstance(obs, Box) else obs.vertices


def _point_polygon_distance(c: np.ndarray, verts: np.ndarray) -> float:
    # Exact distance from point c to a convex CCW polygon (0 if inside).
    e = np.roll(verts, -1, axis=0) - verts
    rel = c - verts
    cross = e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0]
    if np.all(cross >= 0.0):
        return 0.0
    t = np.clip(np.sum(rel * e, axis=1) / np.sum(e * e, axis=1), 0.0, 1.0)
    diff = rel - t[:, None] * e
    return float(np.sqrt(np.min(np.sum(diff * diff, axis=1))))


def _box_mahalanobis(x: np.ndarray, A: np.ndarray, box: Box) -> float:
    # min over y in box of |A (y - x)|: a bounded linear least-squares problem.
    if np.all(x >= box.lo) and np.all(x <= box.hi):
        return 0.0
    res = lsq_linear(A, A @ x, bounds=(box.lo, box.hi), method="bvls", tol=1e-12)
    return float(np.linalg.norm(A @ res.x - A @ x))


def _inside_bounds(x: np.ndarray, P: np.ndarray, chi2: float, bounds: Box) -> bool:
    # Support function of the ellipse along each axis.
    r = np.sqrt(chi2 * np.diag(P))
    return bool(np.all(x - r >= bounds.lo) and np.all(x + r <= bounds.hi))


def state_clear(x, P, chi2: float, obstacles, bounds: Box) -> bool:
    """True iff the chi2-ellipse of ``(x, P)`` misses every obstacle and fits in ``bounds``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = matnum.as_sym(P)
    if chi2 <= 0:
        raise InvalidInputError("chi2 must be positive")
    if not _inside_bounds(x, P, chi2, bounds):
        return False
    A = matnum.pd_inv_sqrt(P) / math.sqrt(chi2)
    r = np.sqrt(chi2 * np.diag(P))
    for obs in obstacles:
        if np.any(x + r < obs.lo) or np.any(x - r > obs.hi):
            continue
        if x.shape[0] == 2:
            dist = _point_polygon_distance(A @ x, _polygon_of(obs) @ A.T)
        else:
            dist = _box_mahalanobis(x, A, obs)
        if dist < 1.0:
            return False
    return True


def _inv_sqrt_2x2(P: np.ndarray) -> np.ndarray:
    p11, p12, p22 = P[:, 0, 0], P[:, 0, 1], P[:, 1, 1]
    s = np.sqrt(p11 * p22 - p12 * p12)
    t = np.sqrt(p11 + p22 + 2.0 * s)
    k = 1.0 / (s * t)
    out = np.empty_like(P)
    out[:, 0, 0] = (p22 + s) * k
    out[:, 1, 1] = (p11 + s) * k
    out[:, 0, 1] = out[:, 1, 0] = -p12 * k
    return out


def _polygon_clear_many(C: np.ndarray, A: np.ndarray, verts: np.ndarray) -> np.ndarray:
    # C: whitened centres (n, 2); A: whitening maps (n, 2, 2); verts (m, 2).
    V = np.einsum("nij,mj->nmi", A, verts)
    E = np.roll(V, -1, axis=1) - V
    R = C[:, None, :] - V
    cross = E[..., 0] * R[..., 1] - E[..., 1] * R[..., 0]
    inside = np.all(cross >= 0.0, axis=1)
    t = np.clip(np.sum(R * E, axis=2) / np.sum(E * E, axis=2), 0.0, 1.0)
    D = R - t[..., None] * E
    d2 = np.min(np.sum(D * D, axis=2), axis=1)
    return ~inside & (d2 >= 1.0)


def state_clear_many(X, P, chi2: float, obstacles, bounds: Box) -> np.ndarray:
    """Vectorised ``state_clear`` over stacked states ``X (n, d)``, ``P (n, d, d)``."""
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    n, d = X.shape
    R = np.sqrt(chi2 * np.diagonal(P, axis1=1, axis2=2))
    ok = np.all(X - R >= bounds.lo, axis=1) & np.all(X + R <= bounds.hi, axis=1)
    if not obstacles or not np.any(ok):
        return ok
    A = None
    if d == 2:
        A = _inv_sqrt_2x2(P) / math.sqrt(chi2)
    for obs in obstacles:
        hit = ok & np.all(X + R >= obs.lo, axis=1) & np.all(X - R <= obs.hi, axis=1)
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            continue
        if d == 1:
            # The interval [x - r, x + r] overlaps the obstacle interval (touching is clear).
            bad = (X[idx, 0] + R[idx, 0] > obs.lo[0]) & (X[idx, 0] - R[idx, 0] < obs.hi[0])
            ok[idx[bad]] = False
        elif d == 2:
            Ai = A[idx]
            C = np.einsum("nij,nj->ni", Ai, X[idx])
            ok[idx] = _polygon_clear_many(C, Ai, _polygon_of(obs))
        else:
            for i in idx:
                Ai = matnum.pd_inv_sqrt(P[i]) / math.sqrt(chi2)
                if _box_mahalanobis(X[i], Ai, obs) < 1.0:
                    ok[i] = False
    return ok


def transition_checkpoints(x0, P0, x1, P1, W, ds: float, include_start: bool = True):
    """States checked along a move-and-sense transition, as ``(X, P)`` stacks.

    Order: start (optional), intermediate propagated states every ``ds``, the
    pre-measurement arrival state, the post-measurement arrival state.
    """
    x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
    P0, P1, W = np.asarray(P0, float), np.asarray(P1, float), np.asarray(W, float)
    L = float(np.linalg.norm(x1 - x0))
    m = max(int(math.ceil(L / ds)) - 1, 0) if L > 0 else 0
    s = ds * np.arange(1, m + 1)
    u = (x1 - x0) / L if L > 0 else np.zeros_like(x0)
    xs = [x0[None]] if include_start else []
    Ps = [P0[None]] if include_start else []
    xs += [x0 + s[:, None] * u, x1[None], x1[None]]
    Ps += [P0 + s[:, None, None] * W, (P0 + L * W)[None], P1[None]]
    return np.concatenate(xs), np.concatenate(Ps)


def transition_clear(z_from: UncertainState, z_to: UncertainState, params: RiParams,
                     chi2: float, obstacles, bounds: Box, ds: float) -> bool:
    """Clearance of every state along the move-and-sense path ``z_from -> z_to``."""
    if ds <= 0:
        raise InvalidInputError("ds must be positive")
    X, P = transition_checkpoints(z_from.x, z_from.P, z_to.x, z_to.P, params.W, ds)
    return all(state_clear(X[i], P[i], chi2, obstacles, bounds) for i in range(X.shape[0]))


def transitions_clear_many(X0, P0, X1, P1, W, chi2: float, obstacles, bounds: Box,
                           ds: float, include_start: bool = False) -> np.ndarray:
    """Batched ``transition_clear`` for ``n`` transitions given as stacked arrays.

    ``include_start`` defaults to False because the planner only starts
    transitions from states that were already validated.
    """
    X0, X1 = np.atleast_2d(np.asarray(X0, float)), np.atleast_2d(np.asarray(X1, float))
    P0 = np.asarray(P0, float).reshape(-1, X0.shape[1], X0.shape[1])
    P1 = np.asarray(P1, float).reshape(-1, X0.shape[1], X0.shape[1])
    W = np.asarray(W, float)
    n = max(X0.shape[0], X1.shape[0], P0.shape[0], P1.shape[0])
    X0, X1 = np.broadcast_to(X0, (n, X0.shape[1])), np.broadcast_to(X1, (n, X1.shape[1]))
    P0 = np.broadcast_to(P0, (n,) + P0.shape[1:])
    P1 = np.broadcast_to(P1, (n,) + P1.shape[1:])
    if n == 0:
        return np.zeros(0, dtype=bool)
    L = np.sqrt(np.sum((X1 - X0) ** 2, axis=1))
    m = np.where(L > 0, np.ceil(L / ds).astype(np.int64) - 1, 0)
    m = np.maximum(m, 0)
    extra = 3 if include_start else 2
    counts = m + extra
    owner = np.repeat(np.arange(n), counts)
    offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
    # Position of each checkpoint inside its own transition.
    local = np.arange(owner.size) - offsets[owner]
    step = local + (0 if include_start else 1)  # 0 = start, 1..m = intermediates
    s = step * ds
    last = counts[owner] - 1
    pre = local == last - 1
    post = local == last
    s = np.where(pre | post, L[owner], s)
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(L[:, None] > 0, (X1 - X0) / L[:, None], 0.0)
    Xc = X0[owner] + s[:, None] * U[owner]
    Xc[pre | post] = X1[owner[pre | post]]
    Pc = P0[owner] + s[:, None, None] * W
    Pc[post] = P1[owner[post]]
    ok = state_clear_many(Xc, Pc, chi2, obstacles, bounds)
    return np.logical_and.reduceat(ok, offsets)
