import math

import numpy as np
import pytest

from riplan.oracle import (GridSpec, InvalidSplitError, StartInCollisionError, analytic_1d_optimum,
                           default_grid, grid_dijkstra, maxdet_oracle, split_cost_1d)
from riplan.collision import Box
from riplan.ricost import GoalRegion, RiParams, d_info
from riplan.scenario import load_scenario

ONED_OPTIMUM = 5.0 + 0.5 * math.log2(4.75)   # 6.123963756721...


def test_analytic_optimum_frozen():
    sc = load_scenario("oneD")
    assert analytic_1d_optimum(sc.init.x, sc.init.P, sc.goal, sc.params) == pytest.approx(ONED_OPTIMUM, abs=1e-12)
    assert ONED_OPTIMUM == pytest.approx(6.123963756721, abs=1e-11)
    # Already inside the goal with a small variance: free.
    assert analytic_1d_optimum(5.5, 0.5, sc.goal, sc.params) == 0.0


def test_maxdet_matches_closed_form_on_hard_pairs():
    P_hat = np.array([[2.0, 1.9], [1.9, 2.0]])
    P_next = np.array([[0.01, 0.0], [0.0, 5.0]])
    assert maxdet_oracle(P_hat, P_next) == pytest.approx(d_info(P_hat, P_next), abs=1e-7)
    assert maxdet_oracle(np.eye(3), 2 * np.eye(3)) == pytest.approx(0.0, abs=1e-9)


def test_split_cost():
    params = RiParams(1.0, [[1.0]])
    single = analytic_1d_optimum(0.0, 1.0, GoalRegion([4.0], [4.0], [[0.5]]), params)
    assert split_cost_1d(0.0, 1.0, 4.0, 0.5, 0.5, 3.0, params) == pytest.approx(single)
    assert split_cost_1d(0.0, 1.0, 4.0, 0.5, 0.5, 1.0, params) > single + 0.1
    with pytest.raises(InvalidSplitError):
        split_cost_1d(0.0, 1.0, 4.0, 0.5, 1.0, 1.0, params)
    with pytest.raises(InvalidSplitError):
        split_cost_1d(0.0, 1.0, 4.0, 0.5, 0.5, 3.5, params)


def test_grid_spec_validation():
    with pytest.raises(Exception):
        GridSpec((1,), (np.eye(1),))
    with pytest.raises(Exception):
        GridSpec((10,), ())
    with pytest.raises(Exception):
        GridSpec((10,), (-np.eye(1),))


def test_grid_reproduces_1d_optimum():
    sc = load_scenario("oneD")
    assert grid_dijkstra(sc, default_grid(sc, resolution=141)) == pytest.approx(ONED_OPTIMUM, abs=1e-9)


def test_grid_alpha_zero_is_straight_line():
    sc = load_scenario("oneD")
    assert grid_dijkstra(sc, default_grid(sc, resolution=141), alpha=0.0) == pytest.approx(5.0, abs=1e-9)


def test_grid_unreachable_and_blocked_start():
    import dataclasses
    sc = load_scenario("oneD")
    wall = dataclasses.replace(sc, obstacles=(Box([2.0], [3.0]),))
    assert math.isinf(grid_dijkstra(wall, default_grid(wall, resolution=71)))
    blocked = dataclasses.replace(sc, obstacles=(Box([-0.5], [0.5]),))
    with pytest.raises(StartInCollisionError):
        grid_dijkstra(blocked, default_grid(blocked, resolution=71))


@pytest.mark.slow
def test_grid_multiobs_frozen():
    sc = load_scenario("multiobs")
    assert grid_dijkstra(sc, default_grid(sc), alpha=0.0) == pytest.approx(7.5377, abs=5e-4)
