import xml.etree.ElementTree as ET

import numpy as np

from riplan.planner import plan
from riplan.render import render_scene
from riplan.scenario import load_scenario


def _parse(svg: str):
    return ET.fromstring(svg)


def test_2d_svg_is_well_formed_and_stable():
    sc = load_scenario("multiobs").with_overrides(n_nodes=400, seed=2)
    r = plan(sc)
    a = render_scene(sc, r.tree, r.best_ids)
    assert a == render_scene(sc, r.tree, r.best_ids)
    root = _parse(a)
    tags = [el.tag.split("}")[1] for el in root]
    # Workspace frame, every obstacle, goal box.
    assert tags.count("polygon") == len(sc.obstacles) + 2
    assert "ellipse" in tags


def test_1d_svg_draws_travel_and_sensing():
    sc = load_scenario("oneD").with_overrides(n_nodes=300, seed=1)
    r = plan(sc)
    root = _parse(render_scene(sc, r.tree, r.best_ids))
    lines = [el for el in root if el.tag.endswith("polyline")]
    assert len(lines) == 2
    blue = [el for el in lines if el.get("stroke") == "blue"][0]
    assert len(blue.get("points").split()) == 2 * len(r.best_ids) - 1


def test_empty_best_path_renders():
    sc = load_scenario("funnel").with_overrides(n_nodes=20, seed=1)
    r = plan(sc)
    assert r.best_ids == []
    _parse(render_scene(sc, r.tree, []))
