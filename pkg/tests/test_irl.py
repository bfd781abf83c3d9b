import math

import numpy as np
import pytest

from aerolattice.costs import RoutingCostField, SeparationCost, routing_gradient_step, separation_gradient_step
from aerolattice.data import Demonstration
from aerolattice.geo import ContinuousState
from aerolattice.irl import TrainingConfig, TrainingTrace, aligned_to, margin, train_routing, train_separation
from aerolattice.planner import Plan, PlannerConfig, Timeout, ara_star

NO_NOISE = (0.0, 0.0, 0.0)


def one_cell_demo(name, offset):
    states = [ContinuousState(10.0 + offset + 5 * n, 20.0, 140.0, 0.01) for n in range(5)]
    return Demonstration(name, np.arange(5) * 30.0, states)


def test_warmup_arithmetic():
    field = RoutingCostField()
    demos = [one_cell_demo(f"d{n}", n) for n in range(3)]
    cfg = TrainingConfig(noise_std_m=NO_NOISE, planner=PlannerConfig(max_expansions=50))
    _, trace = train_routing(demos, field, cfg)
    cell = field.cell_of(demos[0].states[0])
    assert field.cells == {cell: pytest.approx(-50.0)}
    assert field.cost(cell) == 0.0
    assert len(trace.records) == 3


def test_identical_visits_cancel():
    field = RoutingCostField()
    states = [ContinuousState(300.0 * n, -40.0 * n, 900.0, 0.2) for n in range(12)]
    routing_gradient_step(field, states, list(reversed(states)), 10.0, NO_NOISE)
    assert all(w == field.default_weight for w in field.cells.values())
    sep = SeparationCost(1.0, 60.0, 60.0)
    pairs = [((0, 0, 0), (3, 4, 1)), ((10, 0, 5), (10, 30, 5))]
    assert separation_gradient_step(sep, pairs, pairs) == sep


def test_warmup_never_raises_expert_cells():
    rng = np.random.default_rng(3)
    demos = []
    for n in range(4):
        xy = np.cumsum(rng.normal(0, 400, (8, 2)), axis=0)
        demos.append(Demonstration(f"w{n}", np.arange(8) * 30.0,
                                   [ContinuousState(x, y, 800.0, 0.0) for x, y in xy]))
    field = RoutingCostField()
    cfg = TrainingConfig(noise_std_m=NO_NOISE, planner=PlannerConfig(max_expansions=30))
    train_routing(demos, field, cfg)
    for d in demos:
        for s in d.states:
            assert field.weight(field.cell_of(s)) <= field.default_weight


def test_margin_examples():
    field = RoutingCostField(default_weight=0.0)
    states = [ContinuousState(100.0, 100.0, 100.0, 0.0), ContinuousState(400.0, 100.0, 100.0, 0.0),
              ContinuousState(700.0, 100.0, 100.0, 0.0)]
    cells = [field.cell_of(s) for s in states]
    field.cells.update({cells[0]: 200.0, cells[1]: 300.0, cells[2]: -7.0})
    expert = Demonstration("e", [0.0, 30.0, 60.0], states)
    assert margin(field, expert, states) == 0.0
    assert margin(field, expert, Timeout(10)) == -500.0
    learner = [states[0], ContinuousState(100.0, 400.0, 100.0, 0.0), ContinuousState(100.0, 400.0, 300.0, 0.0)]
    field.cells[field.cell_of(learner[2])] = 12.5
    assert margin(field, expert, learner) == pytest.approx((200.0 + 0.0 + 12.5) - (200.0 + 300.0 + 0.0))


def test_aligned_to_resamples():
    states = [ContinuousState(100.0 * n, 0.0, 500.0, 0.0) for n in range(7)]
    d = Demonstration("a", np.arange(7) * 10.0, states)
    out = aligned_to(d, 30.0)
    np.testing.assert_allclose(out.times, [0.0, 30.0, 60.0])
    np.testing.assert_allclose([s.x for s in out.states], [0.0, 300.0, 600.0], atol=1e-9)


def _straight_demos():
    zero = RoutingCostField(default_weight=0.0)
    demos = []
    for n, (x, y) in enumerate([(9000, 0), (12000, 3000), (9000, -3000)]):
        plan = ara_star(ContinuousState(0, 0, 1000, 0), ContinuousState(x, y, 1000, math.atan2(y, x) * 0),
                        zero, config=PlannerConfig(max_expansions=20000))
        assert isinstance(plan, Plan)
        demos.append(Demonstration.from_plan(plan, f"s{n}"))
    return demos


def test_routing_training_deterministic():
    demos = _straight_demos()
    cfg = TrainingConfig(epochs=2, warmup_steps=2, planner=PlannerConfig(max_expansions=300), seed=11,
                         checkpoint_every=2)
    f1, t1 = train_routing(demos, RoutingCostField(), cfg)
    f2, t2 = train_routing(demos, RoutingCostField(), cfg)
    assert f1.cells == f2.cells
    assert [r.__dict__ for r in t1.records] == [r.__dict__ for r in t2.records]
    assert sorted(t1.checkpoints) == [2, 4, 6]


def test_trace_roundtrip(tmp_path):
    demos = _straight_demos()
    _, trace = train_routing(demos, RoutingCostField(), TrainingConfig(planner=PlannerConfig(max_expansions=100)))
    trace.save(tmp_path / "t.csv")
    back = TrainingTrace.load(tmp_path / "t.csv")
    assert len(back.records) == 3
    for a, b in zip(trace.records, back.records):
        assert (a.step, a.demo_id, a.margin, a.timeout, a.expansions) == (b.step, b.demo_id, b.margin,
                                                                           b.timeout, b.expansions)


def _scene(dz):
    a = Demonstration("x_0", np.arange(4) * 30.0, [ContinuousState(3000.0 * n, 0, 3000, 0) for n in range(4)],
                      "x", 0)
    b = Demonstration("x_1", np.arange(4) * 30.0, [ContinuousState(3000.0 * n, 0, 3000 + dz, 0) for n in range(4)],
                      "x", 1)
    return [a, b]


def test_separation_projection_and_clip():
    sep = SeparationCost(1.0, 0.3, 0.3)
    far = [((0, 0, 0), (500, 0, 0))]
    inside = [((0, 0, 0), (0, 0, 0))]
    out = separation_gradient_step(sep, far, inside, alpha=10.0, clip=100.0)
    assert out.v_xy == 0.0 and out.v_z == 0.0
    big = SeparationCost(1.0, 60.0, 60.0)
    step = separation_gradient_step(big, inside * 50, [], alpha=0.01, clip=100.0)
    assert step.v_xy == pytest.approx(61.0) and step.v_z == pytest.approx(61.0)


def test_separation_training_runs_and_stays_nonnegative():
    zero = RoutingCostField(default_weight=0.0)
    cfg = TrainingConfig(planner=PlannerConfig(max_expansions=400), checkpoint_every=1)
    sep, trace = train_separation([_scene(0.0), _scene(300.0)], zero, SeparationCost(1.0, 60.0, 60.0), cfg)
    assert len(trace.records) == 2
    assert all(r.v_xy >= 0 and r.v_z >= 0 for r in trace.records)
    assert sep.v_xy >= 0 and sep.v_z >= 0


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(alpha_routing=0.0)
    with pytest.raises(ValueError):
        train_routing([], RoutingCostField())
