"""Deterministic SVG rendering of a planner run.

Black ellipses are node states on the best path, blue ellipses are the
propagated (pre-measurement) states along each transition; both are drawn at
the scenario's chi-squared confidence.  One-dimensional runs are drawn in the
(x, P) plane: travel raises P along a slanted segment, sensing drops it
vertically.
"""

from __future__ import annotations

from dataclasses import replace
from types import SimpleNamespace

import numpy as np

from .collision import Box, transition_checkpoints
from .ricost import GoalRegion, RiParams, UncertainState

SIZE = 640
MARGIN = 20
MAX_TREE_EDGES = 20000


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, float)
        span = np.asarray(hi, float) - self.lo
        self.scale = (SIZE - 2 * MARGIN) / float(np.max(span))
        self.height = float(span[1]) * self.scale + 2 * MARGIN
        self.width = float(span[0]) * self.scale + 2 * MARGIN
        self.parts: list[str] = []

    def pt(self, p) -> tuple[float, float]:
        return (MARGIN + (p[0] - self.lo[0]) * self.scale,
                self.height - MARGIN - (p[1] - self.lo[1]) * self.scale)

    def polygon(self, verts, fill: str, stroke: str = "none") -> None:
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (self.pt(v) for v in verts))
        self.parts.append(f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}"/>')

    def polyline(self, pts, stroke: str, width: float) -> None:
        s = " ".join(f"{_f(a)},{_f(b)}" for a, b in (self.pt(p) for p in pts))
        self.parts.append(f'<polyline points="{s}" fill="none" stroke="{stroke}" '
                          f'stroke-width="{width}"/>')

    def lines(self, segs, stroke: str, width: float) -> None:
        if not segs:
            return
        d = " ".join(f"M{_f(a)},{_f(b)}L{_f(c)},{_f(e)}"
                     for (a, b), (c, e) in ((self.pt(p), self.pt(q)) for p, q in segs))
        self.parts.append(f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def ellipse(self, x, P, chi2: float, stroke: str) -> None:
        lam, V = np.linalg.eigh(0.5 * (P + P.T))
        rx, ry = np.sqrt(chi2 * np.maximum(lam, 0.0)) * self.scale
        # Screen y points down, so the rotation angle flips sign.
        ang = -np.degrees(np.arctan2(V[1, 0], V[0, 0]))
        cx, cy = self.pt(x)
        self.parts.append(f'<ellipse cx="{_f(cx)}" cy="{_f(cy)}" rx="{_f(rx)}" ry="{_f(ry)}" '
                          f'transform="rotate({_f(ang)} {_f(cx)} {_f(cy)})" fill="none" '
                          f'stroke="{stroke}" stroke-width="0.8"/>')

    def svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(self.width)}" '
                f'height="{_f(self.height)}" viewBox="0 0 {_f(self.width)} {_f(self.height)}">')
        return "\n".join([head, f'<rect width="100%" height="100%" fill="white"/>', *self.parts,
                          "</svg>"]) + "\n"


def _obstacle_polygon(ob) -> np.ndarray:
    return ob.vertices() if isinstance(ob, Box) else np.asarray(ob.vertices)


def render_2d(scenario, tree, best_ids) -> str:
    c = _Canvas(scenario.bounds.lo, scenario.bounds.hi)
    lo, hi = scenario.bounds.lo, scenario.bounds.hi
    c.polygon([lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]], "none", "black")
    for ob in scenario.obstacles:
        c.polygon(_obstacle_polygon(ob), "#9a9a9a")
    g = scenario.goal
    c.polygon([g.lo, [g.hi[0], g.lo[1]], g.hi, [g.lo[0], g.hi[1]]], "none", "black")

    alive = tree.alive_ids[1:][:MAX_TREE_EDGES]
    c.lines([(tree.X[tree.parent[i]], tree.X[i]) for i in alive], "#d0d0d0", 0.5)

    if best_ids:
        c.polyline(tree.X[best_ids], "black", 1.6)
        W = scenario.params.W
        for a, b in zip(best_ids[:-1], best_ids[1:]):
            X, P = transition_checkpoints(tree.X[a], tree.P[a], tree.X[b], tree.P[b], W,
                                          scenario.planner.ds, include_start=False)
            for k in range(X.shape[0] - 1):
                c.ellipse(X[k], P[k], scenario.chi2, "blue")
        for i in best_ids:
            c.ellipse(tree.X[i], tree.P[i], scenario.chi2, "black")
    c.ellipse(scenario.init.x, scenario.init.P, scenario.chi2, "red")
    return c.svg()


def render_1d(scenario, tree, best_ids) -> str:
    n = tree.n
    P_top = max(float(np.max(tree.P[:n, 0, 0])), float(scenario.goal.P_max[0, 0])) * 1.05
    lo = [float(scenario.bounds.lo[0]), 0.0]
    hi = [float(scenario.bounds.hi[0]), P_top]
    c = _Canvas(lo, hi)
    # Stretch P so the plot is roughly square.
    c.scale_p = (SIZE - 2 * MARGIN) / P_top
    c.height = SIZE
    base_pt = c.pt

    def pt(p):
        x, _ = base_pt((p[0], 0.0))
        return x, c.height - MARGIN - p[1] * c.scale_p

    c.pt = pt
    c.polygon([lo, [hi[0], 0.0], hi, [lo[0], P_top]], "none", "black")
    for ob in scenario.obstacles:
        c.polygon([[ob.lo[0], 0.0], [ob.hi[0], 0.0], [ob.hi[0], P_top], [ob.lo[0], P_top]], "#9a9a9a")
    g = scenario.goal
    Pm = float(g.P_max[0, 0])
    c.polygon([[g.lo[0], 0.0], [g.hi[0], 0.0], [g.hi[0], Pm], [g.lo[0], Pm]], "none", "black")

    W = float(scenario.params.W[0, 0])
    alive = tree.alive_ids[1:][:MAX_TREE_EDGES]
    segs = []
    for i in alive:
        p = int(tree.parent[i])
        x0, P0, x1, P1 = tree.X[p, 0], tree.P[p, 0, 0], tree.X[i, 0], tree.P[i, 0, 0]
        top = P0 + abs(x1 - x0) * W
        segs += [((x0, P0), (x1, top)), ((x1, top), (x1, P1))]
    c.lines(segs, "#d0d0d0", 0.5)
    if best_ids:
        pts = [(tree.X[best_ids[0], 0], tree.P[best_ids[0], 0, 0])]
        for a, b in zip(best_ids[:-1], best_ids[1:]):
            x0, P0, x1, P1 = tree.X[a, 0], tree.P[a, 0, 0], tree.X[b, 0], tree.P[b, 0, 0]
            pts += [(x1, P0 + abs(x1 - x0) * W), (x1, P1)]
        c.polyline(pts, "blue", 1.2)
        c.polyline([(tree.X[i, 0], tree.P[i, 0, 0]) for i in best_ids], "black", 1.6)
    return c.svg()


def render_scene(scenario, tree, best_ids) -> str:
    """SVG text for ``tree`` and the best path ``best_ids`` (empty when none was found)."""
    if scenario.dim == 1:
        return render_1d(scenario, tree, list(best_ids))
    if scenario.dim == 2:
        return render_2d(scenario, tree, list(best_ids))
    return render_2d_projection(scenario, tree, list(best_ids))


def render_2d_projection(scenario, tree, best_ids) -> str:
    """3-D runs: top-down projection onto the first two axes."""
    sc2 = replace(scenario, dim=2,
                  bounds=Box(scenario.bounds.lo[:2], scenario.bounds.hi[:2]),
                  obstacles=tuple(Box(o.lo[:2], o.hi[:2]) for o in scenario.obstacles),
                  goal=GoalRegion(scenario.goal.lo[:2], scenario.goal.hi[:2], scenario.goal.P_max[:2, :2]),
                  init=UncertainState(scenario.init.x[:2], scenario.init.P[:2, :2]),
                  params=RiParams(scenario.params.alpha, scenario.params.W[:2, :2]))
    view = SimpleNamespace(n=tree.n, X=tree.X[:, :2], P=tree.P[:, :2, :2], parent=tree.parent,
                           alive_ids=tree.alive_ids)
    return render_2d(sc2, view, best_ids)
