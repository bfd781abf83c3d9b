import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aerolattice.dubins import (AirplaneLimits, CarConfig, airplane_heuristic, airplane_heuristic_many,
                                dubins_candidates, dubins_car_shortest, dubins_length_many, sample_path)
from aerolattice.geo import ContinuousState

LIM = AirplaneLimits()


def test_straight_aligned():
    p = dubins_car_shortest(CarConfig(0, 0, 0), CarConfig(5000, 0, 0), 1 / 2500)
    assert p.total_length == pytest.approx(5000.0, rel=1e-12)
    assert p.segment_lengths[1] == pytest.approx(5000.0)


def test_half_circle():
    p = dubins_car_shortest(CarConfig(0, 0, 0), CarConfig(0, 8000, math.pi), 2.5e-4)
    assert p.total_length == pytest.approx(math.pi * 4000, rel=1e-9)


def test_matches_sweep_oracle_sample(oracle):
    for case in oracle("dubins_oracle")[:20]:
        p = dubins_car_shortest(CarConfig(*case["q0"]), CarConfig(*case["q1"]), 1 / case["radius"])
        assert p.total_length == pytest.approx(case["length"], rel=1e-6)


def test_sampled_path_reaches_target():
    rng = np.random.default_rng(5)
    for _ in range(30):
        q0 = CarConfig(*rng.uniform(-5000, 5000, 2), rng.uniform(-3, 3))
        q1 = CarConfig(*rng.uniform(-5000, 5000, 2), rng.uniform(-3, 3))
        for path in dubins_candidates(q0, q1, 1 / 1500):
            x, y, phi = sample_path(q0, path, 1 / 1500, 10.0)[-1]
            assert math.hypot(x - q1.x, y - q1.y) < 1e-6
            assert abs(math.remainder(phi - q1.phi, 2 * math.pi)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(-2e4, 2e4), st.floats(-2e4, 2e4), st.floats(-3.1, 3.1), st.floats(-3.1, 3.1),
       st.floats(-2e4, 2e4), st.floats(-2e4, 2e4), st.floats(-3.1, 3.1))
def test_rigid_invariance(x1, y1, p0, p1, tx, ty, rot):
    base = dubins_car_shortest(CarConfig(0, 0, p0), CarConfig(x1, y1, p1), 1 / 4000).total_length
    c, s = math.cos(rot), math.sin(rot)
    moved = dubins_car_shortest(CarConfig(tx, ty, p0 + rot),
                                CarConfig(tx + c * x1 - s * y1, ty + s * x1 + c * y1, p1 + rot),
                                1 / 4000).total_length
    assert moved == pytest.approx(base, rel=1e-9, abs=1e-6)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(9)
    n = 200
    x0, y0, x1, y1 = rng.uniform(-30000, 30000, (4, n))
    p0, p1 = rng.uniform(-math.pi, math.pi, (2, n))
    many = dubins_length_many(x0, y0, p0, x1, y1, p1, 1 / 4000)
    for k in range(n):
        one = dubins_car_shortest(CarConfig(x0[k], y0[k], p0[k]), CarConfig(x1[k], y1[k], p1[k]), 1 / 4000)
        assert many[k] == pytest.approx(one.total_length, rel=1e-9, abs=1e-6)


def test_heuristic_pinned(oracle):
    o = oracle("heuristic_oracle")
    for name in ("helix", "flat"):
        got = airplane_heuristic(ContinuousState(*o[name]["s0"]), ContinuousState(*o[name]["sg"]), LIM)
        assert got == pytest.approx(o[name]["d_min"], rel=1e-6)
    assert o["helix"]["d_min"] == pytest.approx(35153.2, abs=0.05)


def test_heuristic_zero_at_goal():
    s = ContinuousState(10, 20, 900, 0.3)
    assert airplane_heuristic(s, s, LIM) == 0.0


def test_heuristic_dominates_euclid_and_vectorized_agrees():
    rng = np.random.default_rng(11)
    sg = ContinuousState(0.0, 0.0, 600.0, 0.0)
    xs, ys = rng.uniform(-40000, 40000, (2, 500))
    zs = rng.uniform(0, 8000, 500)
    ph = rng.uniform(-math.pi, math.pi, 500)
    many = airplane_heuristic_many(xs, ys, zs, ph, sg, LIM)
    for k in range(500):
        s0 = ContinuousState(xs[k], ys[k], zs[k], ph[k])
        h = airplane_heuristic(s0, sg, LIM)
        assert many[k] == pytest.approx(h, rel=1e-9)
        assert h >= math.dist((xs[k], ys[k], zs[k]), (0, 0, 600)) - 1e-6


def test_heuristic_monotone_in_climb():
    s0 = ContinuousState(0, 0, 0, 0)
    vals = [airplane_heuristic(s0, ContinuousState(8000, 0, dz, 0), LIM) for dz in range(0, 6000, 150)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_invalid_limits():
    with pytest.raises(ValueError):
        AirplaneLimits(v=0.0)
    with pytest.raises(ValueError):
        dubins_candidates(CarConfig(0, 0, 0), CarConfig(1, 0, 0), 0.0)
