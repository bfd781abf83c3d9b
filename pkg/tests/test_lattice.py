import math

import numpy as np
import pytest

from aerolattice.dubins import AirplaneLimits
from aerolattice.geo import ContinuousState
from aerolattice.lattice import (FINE_RESOLUTION, ControlSets, GoalRegion, Primitive, Resolution,
                                 apply_primitive, discretize, in_goal_region, successors)


def integrate(s, p, v, h=1e-3):
    """Classical RK4 on the airplane kinematics with a fixed small step."""
    y = np.array([s.x, s.y, s.z, s.phi], dtype=float)

    def f(y):
        return np.array([v * math.cos(y[3]), v * math.sin(y[3]), p.u_z, p.u_phi])

    n = int(round(p.dt / h))
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


@pytest.mark.parametrize("s,cell", [((300, -1, 75, 0.06), (2, -1, 1, 1)), ((0, 0, 0, 0), (0, 0, 0, 0)),
                                    ((-0.001, 0, 0, -0.001), (-1, 0, 0, -1))])
def test_discretize_examples(s, cell):
    assert discretize(ContinuousState(*s), FINE_RESOLUTION)[:4] == cell


def test_straight_primitive():
    s, length = apply_primitive(ContinuousState(0, 0, 1000, 0), Primitive(0, 0, 30), 100)
    assert s.as_tuple() == pytest.approx((3000, 0, 1000, 0))
    assert length == pytest.approx(3000)


def test_arc_primitive_against_integration():
    s0 = ContinuousState(0, 0, 1000, 0)
    s, _ = apply_primitive(s0, Primitive(0.025, 0, 30), 100)
    ref = integrate(s0, Primitive(0.025, 0, 30), 100, h=1e-2)
    np.testing.assert_allclose(s.as_tuple(), ref, rtol=1e-9, atol=1e-7)
    assert s.x == pytest.approx(4000 * math.sin(0.75), rel=1e-12)
    assert s.y == pytest.approx(4000 * (1 - math.cos(0.75)), rel=1e-12)


def test_climb_edge_length():
    s, length = apply_primitive(ContinuousState(0, 0, 0, 0), Primitive(0, 6, 30), 100)
    assert s.z == pytest.approx(180)
    assert length == pytest.approx(30 * math.sqrt(100 ** 2 + 36))
    assert length == pytest.approx(3005.40, abs=0.01)


def test_successor_counts():
    s = ContinuousState(0, 0, 1000, 0)
    lim = AirplaneLimits()
    assert len(successors(s, lim)) == 15
    assert len(successors(s, lim, ControlSets((-0.025, 0.0, 0.025), (-6.0, 0.0, 6.0)))) == 9


def test_level_straight_changes_only_ij():
    s = ContinuousState(10, 10, 1010, 0.01)
    nxt, _ = apply_primitive(s, Primitive(0, 0, 30), 100)
    a, b = discretize(s, FINE_RESOLUTION), discretize(nxt, FINE_RESOLUTION)
    assert (a.k, a.l) == (b.k, b.l) and (a.i, a.j) != (b.i, b.j)


def test_planar_displacement_bound():
    rng = np.random.default_rng(3)
    for _ in range(200):
        s = ContinuousState(*rng.uniform(-1e4, 1e4, 3), rng.uniform(-math.pi, math.pi))
        p = Primitive(rng.choice([-0.025, -0.0025, 0.0, 0.0025, 0.025]), rng.uniform(-6, 6), 30)
        n, _ = apply_primitive(s, p, 100)
        d = math.hypot(n.x - s.x, n.y - s.y)
        if p.u_phi == 0:
            assert d == pytest.approx(3000)
        else:
            assert d < 3000


def test_goal_region_closed_boundary():
    g = ContinuousState(0, 0, 600, 0)
    assert in_goal_region(g, g)
    assert in_goal_region(ContinuousState(500, 0, 600, 0), g)
    assert not in_goal_region(ContinuousState(0, 0, 626, 0), g)
    assert GoalRegion(g).contains(ContinuousState(-500, 500, 575, 0.125))


def test_invalid_configs():
    with pytest.raises(ValueError):
        Resolution(0, 1, 1, 1)
    with pytest.raises(ValueError):
        ControlSets((0.05,), (0.0,)).check(AirplaneLimits())
