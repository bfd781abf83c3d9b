"""Maximum-entropy inverse optimal control loop.

Each step plans one demonstration's start/goal with the current cost and
moves the parameters by the difference in feature counts between the
learner's plan and the expert (one sample of each). Routing weights are
learned first; the separation thresholds are then fit with routing frozen.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np

from .costs import (MovingObstacle, SeparationCost, routing_gradient_step, save_routing_field,
                    separation_cost_sum, separation_features, separation_gradient_step)
from .data import Demonstration, resample_track, states_from_positions
from .lattice import discretize
from .planner import Plan, PlannerConfig, Timeout, ara_star

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 1
    alpha_routing: float = 10.0
    alpha_separation: float = 0.01
    clip: float = 100.0
    warmup_steps: int = 1000
    noise_std_m: tuple = (62.5, 62.5, 15.625)
    planner: PlannerConfig = PlannerConfig(max_expansions=3000)
    seed: int = 0
    checkpoint_every: int = 50
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if self.alpha_routing <= 0 or self.alpha_separation <= 0:
            raise ValueError("step sizes must be positive")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")


@dataclass
class StepRecord:
    step: int
    demo_id: str
    margin: float
    timeout: bool
    expansions: int
    v_xy: float = float("nan")
    v_z: float = float("nan")


@dataclass
class TrainingTrace:
    records: list = dc_field(default_factory=list)
    checkpoints: dict = dc_field(default_factory=dict)

    def append(self, rec):
        self.records.append(rec)

    @property
    def margins(self):
        return np.array([r.margin for r in self.records])

    @property
    def timeouts(self):
        return np.array([float(r.timeout) for r in self.records])

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "demo_id", "margin", "timeout", "expansions", "v_xy_cells", "v_z_cells"])
            for r in self.records:
                w.writerow([r.step, r.demo_id, repr(r.margin), int(r.timeout), r.expansions,
                            repr(r.v_xy), repr(r.v_z)])

    @classmethod
    def load(cls, path):
        trace = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                trace.append(StepRecord(int(row["step"]), row["demo_id"], float(row["margin"]),
                                        bool(int(row["timeout"])), int(row["expansions"]),
                                        float(row["v_xy_cells"]), float(row["v_z_cells"])))
        return trace


def aligned_to(demo, dt):
    """The demonstration resampled onto a ``dt`` grid (returned unchanged if already there)."""
    if len(demo.times) > 1 and abs(demo.dt - dt) < 1e-9:
        return demo
    xyz = np.array([s.as_tuple()[:3] for s in demo.states])
    grid, pts = resample_track(demo.times, xyz, dt)
    return Demonstration(demo.id, grid, states_from_positions(pts), demo.scene_id, demo.arrival_order,
                         dict(demo.diagnostics))


def margin(field, expert, learner):
    """Summed routing cost of the learner's states minus the expert's.

    A timed-out learner counts as a trajectory with no states.
    """
    expert_states = expert.states if isinstance(expert, Demonstration) else expert
    expert_cost = sum(field.cost_at(s) for s in expert_states)
    if learner is None or isinstance(learner, Timeout):
        return -expert_cost
    learner_states = learner.states if isinstance(learner, Plan) else learner
    return sum(field.cost_at(s) for s in learner_states) - expert_cost


def train_routing(demos, field, cfg=TrainingConfig(), trace=None):
    """Fit the routing field to demonstrations; the field is updated in place.

    During the first ``cfg.warmup_steps`` steps, and whenever the planner
    times out, only the expert term enters the gradient.
    """
    if not demos:
        raise ValueError("no demonstrations")
    trace = trace if trace is not None else TrainingTrace()
    rng = np.random.default_rng(cfg.seed)
    demos = [aligned_to(d, cfg.planner.dt) for d in demos]
    step = len(trace.records)
    for epoch in range(cfg.epochs):
        for demo in demos:
            out = ara_star(demo.s0, demo.sg, field, None, (), cfg.planner, t_start=demo.t_start)
            timed_out = isinstance(out, Timeout)
            m = margin(field, demo, out)
            learner = [] if (timed_out or step < cfg.warmup_steps) else out.states
            routing_gradient_step(field, learner, demo.states, cfg.alpha_routing, cfg.noise_std_m, rng)
            trace.append(StepRecord(step, demo.id, m, timed_out, out.expansions))
            step += 1
            if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                trace.checkpoints[step] = dict(field.cells)
                if cfg.checkpoint_dir:
                    Path(cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
                    save_routing_field(field, Path(cfg.checkpoint_dir) / f"routing_{step:06d}.csv")
        log.info("epoch %d done: %d steps, %d stored cells", epoch, step, len(field))
    return field, trace


def time_aligned_pairs(states, t_start, dt, obstacles, res):
    """(own cell, other cell) for every state and every obstacle present at the same time."""
    pairs = []
    for n, s in enumerate(states):
        t = t_start + n * dt
        mine = discretize(s, res)[:3]
        for ob in obstacles:
            other = ob.cell_at(t)
            if other is not None:
                pairs.append((mine, other))
    return pairs


def _overlaps(scene):
    spans = [(d.times[0], d.times[-1]) for d in scene]
    return any(a0 <= b1 and b0 <= a1
               for n, (a0, a1) in enumerate(spans) for (b0, b1) in spans[:n])


def train_separation(scenes, field, sep=SeparationCost(), cfg=TrainingConfig(), trace=None):
    """Fit the separation thresholds with the routing field held fixed.

    Each arrival after the first is replanned with the earlier arrivals'
    expert trajectories as moving obstacles. Returns (sep, trace).
    """
    trace = trace if trace is not None else TrainingTrace()
    pcfg = cfg.planner
    res = pcfg.resolution
    step = len(trace.records)
    for epoch in range(cfg.epochs):
        for scene in scenes:
            scene = [aligned_to(d, pcfg.dt) for d in scene]
            if len(scene) < 2 or not _overlaps(scene):
                log.info("skipping scene %s: no time-overlapping arrivals",
                         scene[0].scene_id if scene else "?")
                continue
            for i in range(1, len(scene)):
                demo = scene[i]
                obstacles = [MovingObstacle.from_states(d.states, d.t_start, pcfg.dt, res, d.id)
                             for d in scene[:i]]
                out = ara_star(demo.s0, demo.sg, field, sep, obstacles, pcfg, t_start=demo.t_start)
                timed_out = isinstance(out, Timeout)
                expert_pairs = time_aligned_pairs(demo.states, demo.t_start, pcfg.dt, obstacles, res)
                learner_pairs = [] if timed_out else time_aligned_pairs(
                    out.states, out.t_start, pcfg.dt, obstacles, res)
                m = separation_cost_sum(sep, learner_pairs) - separation_cost_sum(sep, expert_pairs)
                sep = separation_gradient_step(sep, learner_pairs, expert_pairs,
                                               cfg.alpha_separation, cfg.clip)
                trace.append(StepRecord(step, demo.id, m, timed_out, out.expansions, sep.v_xy, sep.v_z))
                step += 1
                if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                    trace.checkpoints[step] = sep
    return sep, trace


def separation_gradient(sep, learner_pairs, expert_pairs):
    """Unclipped feature-count difference (learner minus expert)."""
    lx, lz = separation_features(sep, learner_pairs)
    ex, ez = separation_features(sep, expert_pairs)
    return lx - ex, lz - ez
