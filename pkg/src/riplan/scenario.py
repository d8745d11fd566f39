"""Scenario files: workspace, obstacles, start, goal, cost and planner settings.

Scenarios are TOML documents (``.scn``) with a fixed set of sections::

    label = "oneD"
    dim = 1

    [workspace]          # lo / hi corners
    [[obstacles]]        # kind = "box" (lo, hi) or "polygon" (vertices, CCW)
    [init]               # x, P
    [goal]               # lo, hi, P_max
    [params]             # alpha, W, confidence and/or chi2
    [planner]            # n_nodes, seed, ed_min, ed_nbors, prune_every, cov_eig_range, ds, debug

Matrices are nested lists; a scalar is accepted for ``d = 1``.  Unknown keys
are rejected.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .collision import Box, ConvexPolygon, chi2_value
from .matnum import InvalidInputError, NotPDError
from .ricost import P_FLOOR, GoalRegion, RiParams, UncertainState

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

BUNDLED = ("oneD", "funnel", "multiobs")


class ScenarioError(ValueError):
    """Scenario file cannot be parsed or violates an invariant."""


@dataclass(frozen=True)
class PlannerConfig:
    ed_min: float
    ed_nbors: float
    n_nodes: int
    seed: int
    prune_every: int
    cov_eig_range: tuple[float, float]
    ds: float
    debug: bool = False

    def __post_init__(self):
        if not (self.ed_min > 0 and self.ed_nbors > 0):
            raise ScenarioError("ed_min and ed_nbors must be positive")
        if self.ed_min > self.ed_nbors:
            raise ScenarioError("ed_min must not exceed ed_nbors")
        lo, hi = self.cov_eig_range
        if lo < P_FLOOR or hi < lo:
            raise ScenarioError(f"cov_eig_range must satisfy {P_FLOOR:g} <= lo <= hi")
        if self.n_nodes < 0 or self.prune_every < 0:
            raise ScenarioError("n_nodes and prune_every must be non-negative")
        if not self.ds > 0:
            raise ScenarioError("ds must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Scenario:
    label: str
    dim: int
    bounds: Box
    obstacles: tuple
    init: UncertainState
    goal: GoalRegion
    params: RiParams
    chi2: float
    confidence: float | None
    planner: PlannerConfig

    def with_overrides(self, *, n_nodes=None, seed=None, alpha=None, **planner_kw) -> "Scenario":
        s = self
        if alpha is not None:
            s = dataclasses.replace(s, params=RiParams(alpha, s.params.W))
        kw = {k: v for k, v in planner_kw.items() if v is not None}
        if n_nodes is not None:
            kw["n_nodes"] = int(n_nodes)
        if seed is not None:
            kw["seed"] = int(seed)
        if kw:
            s = dataclasses.replace(s, planner=dataclasses.replace(s.planner, **kw))
        return s

    def swapped(self) -> "Scenario":
        """Exchange start and goal positions (goal box keeps its size and ``P_max``)."""
        centre = 0.5 * (self.goal.lo + self.goal.hi)
        half = 0.5 * (self.goal.hi - self.goal.lo)
        init = UncertainState(centre, self.init.P)
        goal = GoalRegion(self.init.x - half, self.init.x + half, self.goal.P_max)
        return dataclasses.replace(self, init=init, goal=goal, label=self.label + "-swapped")


def default_planner_values(bounds: Box) -> dict:
    diag = float(np.linalg.norm(bounds.hi - bounds.lo))
    ed_min = 0.05 * diag
    return {"ed_min": ed_min, "ed_nbors": 3.0 * ed_min, "n_nodes": 10000, "seed": 0,
            "prune_every": 200, "cov_eig_range": (P_FLOOR, (diag / 4.0) ** 2), "debug": False}


def _strict(section: dict, allowed: set, where: str) -> None:
    extra = set(section) - allowed
    if extra:
        raise ScenarioError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing key '{key}' in {where}")
    return section[key]


def _vec(v, d: int, what: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if a.shape != (d,):
        raise ScenarioError(f"{what} must have {d} entries, got shape {a.shape}")
    return a


def _mat(v, d: int, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim == 0 and d == 1:
        a = a.reshape(1, 1)
    if a.shape != (d, d):
        raise ScenarioError(f"{what} must be {d}x{d}, got shape {a.shape}")
    return a


def parse_scenario(doc: dict, source: str = "<scenario>") -> Scenario:
    """Validate a decoded scenario document."""
    try:
        return _parse(doc)
    except (InvalidInputError, NotPDError, TypeError) as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc


def _parse(doc: dict) -> Scenario:
    _strict(doc, {"label", "dim", "workspace", "obstacles", "init", "goal", "params", "planner"},
            "top level")
    d = int(_require(doc, "dim", "top level"))
    if d not in (1, 2, 3):
        raise ScenarioError("dim must be 1, 2 or 3")
    label = str(doc.get("label", "scenario"))

    ws = _require(doc, "workspace", "top level")
    _strict(ws, {"lo", "hi"}, "[workspace]")
    bounds = Box(_vec(_require(ws, "lo", "[workspace]"), d, "workspace.lo"),
                 _vec(_require(ws, "hi", "[workspace]"), d, "workspace.hi"))

    obstacles = []
    for k, ob in enumerate(doc.get("obstacles", [])):
        where = f"obstacles[{k}]"
        kind = _require(ob, "kind", where)
        if kind == "box":
            _strict(ob, {"kind", "lo", "hi"}, where)
            obstacles.append(Box(_vec(_require(ob, "lo", where), d, where + ".lo"),
                                 _vec(_require(ob, "hi", where), d, where + ".hi")))
        elif kind == "polygon":
            _strict(ob, {"kind", "vertices"}, where)
            if d != 2:
                raise ScenarioError(f"{where}: polygons are only supported for dim = 2")
            obstacles.append(ConvexPolygon(np.asarray(_require(ob, "vertices", where), float)))
        else:
            raise ScenarioError(f"{where}: kind must be 'box' or 'polygon', got {kind!r}")

    ini = _require(doc, "init", "top level")
    _strict(ini, {"x", "P"}, "[init]")
    init = UncertainState(_vec(_require(ini, "x", "[init]"), d, "init.x"),
                          _mat(_require(ini, "P", "[init]"), d, "init.P"))

    g = _require(doc, "goal", "top level")
    _strict(g, {"lo", "hi", "P_max"}, "[goal]")
    goal = GoalRegion(_vec(_require(g, "lo", "[goal]"), d, "goal.lo"),
                      _vec(_require(g, "hi", "[goal]"), d, "goal.hi"),
                      _mat(_require(g, "P_max", "[goal]"), d, "goal.P_max"))

    pr = _require(doc, "params", "top level")
    _strict(pr, {"alpha", "W", "confidence", "chi2"}, "[params]")
    params = RiParams(float(_require(pr, "alpha", "[params]")),
                      _mat(_require(pr, "W", "[params]"), d, "params.W"))
    confidence = pr.get("confidence")
    if confidence is None and "chi2" not in pr:
        raise ScenarioError("[params] needs 'confidence' or 'chi2'")
    if confidence is not None:
        confidence = float(confidence)
        chi2 = chi2_value(confidence, d)
        if "chi2" in pr and abs(float(pr["chi2"]) - chi2) > 1e-6:
            raise ScenarioError(f"chi2 = {pr['chi2']} disagrees with confidence {confidence} "
                                f"({chi2:.6f} for {d} dof)")
    else:
        chi2 = float(pr["chi2"])
        if not chi2 > 0:
            raise ScenarioError("chi2 must be positive")

    pl = dict(doc.get("planner", {}))
    allowed = {"ed_min", "ed_nbors", "n_nodes", "seed", "prune_every", "cov_eig_range", "ds", "debug"}
    _strict(pl, allowed, "[planner]")
    values = default_planner_values(bounds)
    if "ed_min" in pl and "ed_nbors" not in pl:
        values["ed_nbors"] = 3.0 * float(pl["ed_min"])
    values.update(pl)
    values["cov_eig_range"] = tuple(float(v) for v in values["cov_eig_range"])
    if len(values["cov_eig_range"]) != 2:
        raise ScenarioError("cov_eig_range must have two entries")
    values.setdefault("ds", float(values["ed_min"]) / 10.0)
    cfg = PlannerConfig(ed_min=float(values["ed_min"]), ed_nbors=float(values["ed_nbors"]),
                        n_nodes=int(values["n_nodes"]), seed=int(values["seed"]),
                        prune_every=int(values["prune_every"]),
                        cov_eig_range=values["cov_eig_range"], ds=float(values["ds"]),
                        debug=bool(values["debug"]))
    return Scenario(label, d, bounds, tuple(obstacles), init, goal, params, chi2, confidence, cfg)


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; a bare bundled name (e.g. ``"oneD"``) also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = resources.files("riplan").joinpath(f"scenarios/{path}.scn").read_text()
        source = f"{path}.scn"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read {path}: {exc}") from exc
        source = str(path)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{source}: parse error: {exc}") from exc
    return parse_scenario(doc, source)

