"""Paths in the uncertain configuration space and their RI length.

A :class:`PiecewisePath` is a list of timestamped uncertain states, extended to
continuous time by linear interpolation of both ``x`` and ``P``.  Continuous
paths passed to :func:`path_cost_sup` / :func:`path_cost_integral` are
vectorised callables: given an array of times they return stacked positions
``(n, d)`` and covariances ``(n, d, d)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matnum import InvalidInputError
from .ricost import LOG2E, RiParams, UncertainState, ri_distance_many

MAX_DYADIC_LEVEL = 22

PathFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class NonConvergenceError(RuntimeError):
    def __init__(self, previous: float, last: float):
        super().__init__(f"partition sums did not converge: {previous!r} -> {last!r}")
        self.previous = previous
        self.last = last


class NotMonotoneGrowthError(ValueError):
    """The covariance shrinks faster than travel-driven growth allows."""


class RefinementError(RuntimeError):
    pass


@dataclass(frozen=True)
class PiecewisePath:
    t: np.ndarray   # (n,) strictly increasing, t[0] == 0
    X: np.ndarray   # (n, d)
    P: np.ndarray   # (n, d, d)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        X = np.asarray(self.X, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if P.ndim == 1:
            P = P[:, None, None]
        n = t.shape[0]
        if n < 2:
            raise InvalidInputError("a path needs at least two samples")
        if X.shape[0] != n or P.shape[0] != n or P.shape[1:] != (X.shape[1], X.shape[1]):
            raise InvalidInputError("inconsistent sample shapes")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise InvalidInputError("times must start at 0 and increase strictly")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "P", 0.5 * (P + np.swapaxes(P, 1, 2)))

    @classmethod
    def from_states(cls, times, states: list[UncertainState]) -> "PiecewisePath":
        return cls(np.asarray(times, float), np.stack([z.x for z in states]),
                   np.stack([z.P for z in states]))

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.t.shape[0]

    def states(self) -> list[UncertainState]:
        return [UncertainState(self.X[i], self.P[i]) for i in range(len(self))]

    def __call__(self, ts) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation at the times ``ts``."""
        ts = np.clip(np.atleast_1d(np.asarray(ts, dtype=float)), 0.0, self.T)
        k = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, len(self) - 2)
        w = (ts - self.t[k]) / (self.t[k + 1] - self.t[k])
        X = self.X[k] + w[:, None] * (self.X[k + 1] - self.X[k])
        P = self.P[k] + w[:, None, None] * (self.P[k + 1] - self.P[k])
        return X, P

    def scaled(self, c: float) -> "PiecewisePath":
        return PiecewisePath(self.t, c * self.X, c * self.P)

    def refined(self, factor: int) -> "PiecewisePath":
        """Same continuous path with ``factor - 1`` extra samples per segment."""
        frac = np.arange(factor) / factor
        ts = (self.t[:-1, None] + frac * np.diff(self.t)[:, None]).ravel()
        ts = np.append(ts, self.T)
        X, P = self(ts)
        return PiecewisePath(ts, X, P)

    # CSV rows: t, x_1..x_d, vech(P) in lower-triangle column order.
    def to_csv(self) -> str:
        d = self.dim
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + vech_labels(d))
        for i in range(len(self)):
            w.writerow([repr(float(self.t[i]))] + [repr(float(v)) for v in self.X[i]]
                       + [repr(float(v)) for v in vech(self.P[i])])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PiecewisePath":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        d = sum(1 for h in header if h.startswith("x"))
        vals = np.array(body, dtype=float)
        P = np.stack([unvech(r[1 + d:], d) for r in vals])
        return cls(vals[:, 0], vals[:, 1:1 + d], P)


def vech_labels(d: int) -> list[str]:
    return [f"P{i + 1}{j + 1}" for j in range(d) for i in range(j, d)]


def vech(P: np.ndarray) -> np.ndarray:
    """Stack the lower triangle column by column."""
    d = P.shape[0]
    return np.array([P[i, j] for j in range(d) for i in range(j, d)])


def unvech(v, d: int) -> np.ndarray:
    P = np.zeros((d, d))
    k = 0
    for j in range(d):
        for i in range(j, d):
            P[i, j] = P[j, i] = v[k]
            k += 1
    return P


def _sym_spectral_norms(M: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.linalg.eigvalsh(M)), axis=-1)


def _partition_sum(X: np.ndarray, P: np.ndarray, params: RiParams) -> float:
    return float(np.sum(ri_distance_many(X[:-1], P[:-1], X[1:], P[1:], params)))


def path_cost_partition(path: PiecewisePath, params: RiParams) -> float:
    """Sum of RI transition costs between consecutive samples."""
    return _partition_sum(path.X, path.P, params)


def path_cost_sup(path_fn: PathFn, T: float, params: RiParams, rel_tol: float = 1e-6,
                  slack: float = 1e-9) -> float:
    """RI length as the limit of partition sums over dyadic partitions of ``[0, T]``.

    Successive levels must not decrease by more than ``slack``; the loop stops
    once two levels differ by less than ``rel_tol`` (relative).
    """
    prev = val = None
    for k in range(MAX_DYADIC_LEVEL + 1):
        ts = np.linspace(0.0, T, 2 ** k + 1)
        X, P = path_fn(ts)
        val = _partition_sum(np.asarray(X, float).reshape(ts.size, -1),
                             np.asarray(P, float).reshape(ts.size, X.shape[-1], X.shape[-1]),
                             params)
        if prev is not None:
            if val < prev - slack * max(1.0, abs(prev)):
                raise RefinementError(f"partition sum dropped from {prev!r} to {val!r} at level {k}")
            if abs(val - prev) <= rel_tol * max(abs(val), 1e-300) or val == prev:
                return val
        before, prev = prev, val
    raise NonConvergenceError(before, val)


def path_cost_integral(deriv_fn, T: float, params: RiParams, n_quad: int = 1024) -> float:
    """RI length of a differentiable path by composite Simpson quadrature.

    ``deriv_fn(ts)`` returns ``(X, P, Xdot, Pdot)`` stacks.  The integrand is
    ``|xdot| + (alpha/2) log2(e) tr((W |xdot| - Pdot) P^-1)``; growth must
    satisfy ``W |xdot| - Pdot >= 0`` at every node.
    """
    if n_quad < 2 or n_quad % 2:
        raise InvalidInputError("Simpson's rule needs an even number of panels")
    ts = np.linspace(0.0, T, n_quad + 1)
    X, P, Xd, Pd = (np.asarray(a, float) for a in deriv_fn(ts))
    d = params.dim
    X, Xd = X.reshape(ts.size, d), Xd.reshape(ts.size, d)
    P, Pd = P.reshape(ts.size, d, d), Pd.reshape(ts.size, d, d)
    speed = np.sqrt(np.sum(Xd * Xd, axis=1))
    G = speed[:, None, None] * params.W - Pd
    G = 0.5 * (G + np.swapaxes(G, 1, 2))
    lam_min = np.linalg.eigvalsh(G)[:, 0]
    scale = 1.0 + _sym_spectral_norms(G)
    if np.any(lam_min < -1e-9 * scale):
        i = int(np.argmin(lam_min / scale))
        raise NotMonotoneGrowthError(f"W|xdot| - Pdot not PSD at t={ts[i]:.6g} (min eig {lam_min[i]:.3g})")
    info_rate = np.trace(np.linalg.solve(P, np.swapaxes(G, 1, 2)), axis1=1, axis2=2)
    f = speed + 0.5 * params.alpha * LOG2E * info_rate
    h = T / n_quad
    return float(h / 3.0 * (f[0] + f[-1] + 4.0 * np.sum(f[1:-1:2]) + 2.0 * np.sum(f[2:-1:2])))


def variation(path: PiecewisePath) -> float:
    """Variation over the path's own breakpoints."""
    head = float(np.linalg.norm(path.X[0])) + float(_sym_spectral_norms(path.P[0]))
    dx = np.sqrt(np.sum(np.diff(path.X, axis=0) ** 2, axis=1))
    dP = _sym_spectral_norms(np.diff(path.P, axis=0))
    return head + float(np.sum(dx) + np.sum(dP))


def tv_norm(path: PiecewisePath) -> float:
    """Total variation; for piecewise-linear paths the breakpoint variation is the supremum."""
    return variation(path)


def sup_norm(path: PiecewisePath) -> float:
    """``max_t |x(t)| + sigma_max(P(t))``; convex on each segment, so breakpoints suffice."""
    vals = np.sqrt(np.sum(path.X ** 2, axis=1)) + _sym_spectral_norms(path.P)
    return float(np.max(vals))


def arc_times(X: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Cumulative ``|dx| + |dP|_F`` along samples, used as a path parameter."""
    step = np.sqrt(np.sum(np.diff(X, axis=0) ** 2, axis=1))
    step = step + np.sqrt(np.sum(np.diff(P, axis=0) ** 2, axis=(1, 2)))
    return np.concatenate(([0.0], np.cumsum(step)))
