import dataclasses

import numpy as np
import pytest

from riplan.collision import state_clear
from riplan.scenario import BUNDLED, ScenarioError, load_scenario, parse_scenario

MINIMAL = {
    "dim": 1,
    "workspace": {"lo": [0.0], "hi": [10.0]},
    "init": {"x": [1.0], "P": 0.1},
    "goal": {"lo": [8.0], "hi": [9.0], "P_max": 0.5},
    "params": {"alpha": 1.0, "W": 0.2, "confidence": 0.9},
}


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name):
    sc = load_scenario(name)
    assert sc.label == name
    assert state_clear(sc.init.x, sc.init.P, sc.chi2, sc.obstacles, sc.bounds)


def test_minimal_document_gets_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.planner.ed_min == pytest.approx(0.5)
    assert sc.planner.ed_nbors == pytest.approx(1.5)
    assert sc.planner.ds == pytest.approx(0.05)
    assert sc.obstacles == ()


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d.update(extra=1), "unknown key"),
    (lambda d: d.update(dim=4), "dim"),
    (lambda d: d["params"].pop("confidence"), "confidence"),
    (lambda d: d["params"].update(chi2=9.0), "disagrees"),
    (lambda d: d["goal"].update(P_max=-1.0), "positive definite"),
    (lambda d: d["init"].update(x=[1.0, 2.0]), "entries"),
    (lambda d: d.update(planner={"ed_min": 2.0, "ed_nbors": 1.0}), "ed_min"),
    (lambda d: d.update(obstacles=[{"kind": "sphere"}]), "kind"),
    (lambda d: d.update(obstacles=[{"kind": "polygon", "vertices": [[0, 0], [1, 0], [0, 1]]}]), "dim = 2"),
])
def test_invalid_documents(mutate, message):
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in MINIMAL.items()}
    mutate(doc)
    with pytest.raises(ScenarioError, match=message):
        parse_scenario(doc)


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.scn")
    bad = tmp_path / "bad.scn"
    bad.write_text("dim = [")
    with pytest.raises(ScenarioError, match="parse error"):
        load_scenario(bad)


def test_overrides_and_swap():
    sc = load_scenario("funnel")
    o = sc.with_overrides(n_nodes=10, seed=5, alpha=0.0)
    assert (o.planner.n_nodes, o.planner.seed, o.params.alpha) == (10, 5, 0.0)
    assert sc.planner.n_nodes != 10
    s = sc.swapped()
    np.testing.assert_allclose(s.init.x, 0.5 * (sc.goal.lo + sc.goal.hi))
    np.testing.assert_allclose(0.5 * (s.goal.lo + s.goal.hi), sc.init.x)
    assert s.label == "funnel-swapped"


def test_funnel_is_point_symmetric():
    sc = load_scenario("funnel")
    centre = np.array([5.0, 5.0])
    np.testing.assert_allclose(2 * centre - sc.init.x, 0.5 * (sc.goal.lo + sc.goal.hi))
    polys = [o for o in sc.obstacles if hasattr(o, "vertices") and not callable(o.vertices)]
    a, b = (np.sort(p.vertices, axis=0) for p in polys)
    np.testing.assert_allclose(np.sort(2 * centre - b, axis=0), a)
