import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riplan.collision import (Box, ConvexPolygon, chi2_value, state_clear, state_clear_many,
                              transition_checkpoints, transition_clear, transitions_clear_many)
from riplan.matnum import InvalidInputError
from riplan.ricost import RiParams, UncertainState

BOUNDS = Box([0.0, 0.0], [10.0, 10.0])
CHI2 = chi2_value(0.9, 2)


def test_chi2_frozen():
    assert CHI2 == pytest.approx(-2 * math.log(0.1), rel=1e-12)
    assert chi2_value(0.9, 1) == pytest.approx(2.705543454095404, rel=1e-10)
    with pytest.raises(InvalidInputError):
        chi2_value(1.0, 2)


def test_shape_validation():
    with pytest.raises(InvalidInputError):
        Box([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        ConvexPolygon([[0, 0], [0, 1], [1, 0]])  # clockwise
    with pytest.raises(InvalidInputError):
        ConvexPolygon([[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]])  # reflex vertex


def test_clearance_simple_cases():
    box = Box([4.0, 4.0], [6.0, 6.0])
    P = 0.01 * np.eye(2)
    r = math.sqrt(CHI2 * 0.01)
    assert not state_clear([5.0, 5.0], P, CHI2, [box], BOUNDS)
    assert state_clear([6.0 + 1.01 * r, 5.0], P, CHI2, [box], BOUNDS)
    assert not state_clear([6.0 + 0.99 * r, 5.0], P, CHI2, [box], BOUNDS)
    # Workspace walls count as obstacles.
    assert not state_clear([0.99 * r, 5.0], P, CHI2, [], BOUNDS)
    # Elongated ellipse: the orientation matters.
    long_x = np.diag([1.0, 0.001])
    assert state_clear([5.0, 7.0], long_x, CHI2, [box], BOUNDS)
    assert not state_clear([5.0, 7.0], np.diag([0.001, 1.0]), CHI2, [box], BOUNDS)


def _sampled_clear(x, P, poly_vertices, n=4000):
    # Brute force: dense points on the ellipse boundary and interior rays.
    lam, V = np.linalg.eigh(P)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = []
    for s in np.linspace(0.0, 1.0, 30):
        circ = np.stack([np.cos(th), np.sin(th)], 1) * s
        pts.append(x + (circ * np.sqrt(CHI2 * lam)) @ V.T)
    pts = np.concatenate(pts)
    v = np.asarray(poly_vertices)
    e = np.roll(v, -1, 0) - v
    inside = np.ones(len(pts), bool)
    for k in range(len(v)):
        rel = pts - v[k]
        inside &= e[k, 0] * rel[:, 1] - e[k, 1] * rel[:, 0] >= 0
    return not inside.any()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_polygon_clearance_matches_sampling(seed):
    rng = np.random.default_rng(seed)
    tri = ConvexPolygon([[4.0, 4.0], [6.0, 4.5], [5.0, 6.0]])
    x = rng.uniform(2.5, 7.5, 2)
    from riplan.checks import random_pd
    P = random_pd(rng, 2, 0.01, 0.5)
    exact = state_clear(x, P, CHI2, [tri], BOUNDS)
    sampled = _sampled_clear(x, P, tri.vertices)
    if exact:
        assert sampled
    elif sampled:
        # Sampling can only miss a grazing contact.
        assert state_clear(x, P * 0.98, CHI2, [tri], BOUNDS)


def test_box_and_polygon_agree(rng):
    box = Box([4.0, 3.0], [6.0, 5.0])
    poly = ConvexPolygon(box.vertices())
    from riplan.checks import random_pd
    for _ in range(200):
        x = rng.uniform(2, 8, 2)
        P = random_pd(rng, 2, 0.01, 1.0)
        assert state_clear(x, P, CHI2, [box], BOUNDS) == state_clear(x, P, CHI2, [poly], BOUNDS)


def test_batched_clearance_matches_scalar(rng):
    from riplan.checks import random_pd
    obs = [Box([4.0, 3.0], [6.0, 5.0]), ConvexPolygon([[1, 7], [3, 7], [2, 9]])]
    X = rng.uniform(0.5, 9.5, (300, 2))
    P = np.stack([random_pd(rng, 2, 0.005, 0.5) for _ in range(300)])
    many = state_clear_many(X, P, CHI2, obs, BOUNDS)
    single = [state_clear(X[i], P[i], CHI2, obs, BOUNDS) for i in range(300)]
    assert many.tolist() == single
    assert 0 < many.sum() < 300


def test_transition_checkpoints_order():
    W = 0.1 * np.eye(2)
    X, P = transition_checkpoints([0, 0], np.eye(2), [1, 0], 0.5 * np.eye(2), W, ds=0.3)
    np.testing.assert_allclose(X[:, 0], [0, 0.3, 0.6, 0.9, 1.0, 1.0])
    np.testing.assert_allclose(P[-2], 1.1 * np.eye(2))
    np.testing.assert_allclose(P[-1], 0.5 * np.eye(2))


def test_transition_is_direction_dependent():
    # A gap that the small covariance fits through only before it has grown.
    obs = [Box([4.0, 0.0], [4.5, 4.8]), Box([4.0, 5.2], [4.5, 10.0])]
    params = RiParams(1.0, 0.005 * np.eye(2))
    chi2 = CHI2
    a = UncertainState([3.9, 5.0], 0.001 * np.eye(2))
    b = UncertainState([8.0, 5.0], 0.001 * np.eye(2))
    assert transition_clear(a, b, params, chi2, obs, BOUNDS, 0.05)
    assert not transition_clear(b, a, params, chi2, obs, BOUNDS, 0.05)
    ok = transitions_clear_many([a.x, b.x], [a.P, b.P], [b.x, a.x], [b.P, a.P], params.W, chi2, obs,
                                BOUNDS, 0.05, include_start=True)
    assert ok.tolist() == [True, False]


def test_one_dimensional_intervals():
    bounds = Box([-4.0], [10.0])
    chi2 = chi2_value(0.9, 1)
    wall = Box([2.0], [3.0])
    r = math.sqrt(chi2 * 0.1)
    assert state_clear([2.0 - 1.01 * r], [[0.1]], chi2, [wall], bounds)
    assert not state_clear([2.0 - 0.99 * r], [[0.1]], chi2, [wall], bounds)
