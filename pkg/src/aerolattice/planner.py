"""Anytime repairing A* over the motion-primitive lattice.

The search keeps continuous states and uses the fine grid only for duplicate
detection. Path records are immutable and chained to their parent record, so
a plan read back from the goal is always the exact sequence of primitives
that produced it, even after a cell's best record has been replaced.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .costs import MovingObstacle, eval_separation
from .dubins import AirplaneLimits, airplane_heuristic_many
from .geo import TWO_PI, ContinuousState, wrap_angle
from .lattice import FINE_RESOLUTION, ControlSets, GoalRegion, Primitive, Resolution

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    limits: AirplaneLimits = AirplaneLimits()
    controls: ControlSets = ControlSets()
    resolution: Resolution = FINE_RESOLUTION
    eps_start: float = 3.0
    eps_step: float = 0.5
    eps_final: float = 1.0
    # Deterministic mode when set; otherwise the wall-clock limit applies.
    max_expansions: Optional[int] = None
    time_limit_s: float = 30.0
    goal_half_widths: tuple = (500.0, 500.0, 25.0, 0.125)
    bbox_margin_m: float = 50000.0
    z_margin_m: float = 3000.0

    def __post_init__(self):
        if not self.eps_start >= self.eps_final >= 1.0:
            raise ValueError("need eps_start >= eps_final >= 1")
        if self.eps_step <= 0:
            raise ValueError("eps_step must be positive")
        self.controls.check(self.limits)

    @property
    def dt(self):
        return self.controls.dt


@dataclass
class Plan:
    states: list
    primitives: list
    edge_lengths: list
    cost: float
    eps_achieved: float
    expansions: int = 0
    t_start: float = 0.0
    dt: float = 30.0
    iterations: list = dc_field(default_factory=list)
    goal: Optional[ContinuousState] = None

    @property
    def times(self):
        return [self.t_start + n * self.dt for n in range(len(self.states))]

    @property
    def length(self):
        return float(sum(self.edge_lengths))


@dataclass
class Timeout:
    expansions: int
    reason: str = "budget"
    elapsed_s: float = 0.0


class _Rec(NamedTuple):
    g: float
    x: float
    y: float
    z: float
    phi: float
    step: int
    h: float
    parent: Optional["_Rec"]
    prim: int
    length: float
    lb: float = 0.0  # admissible cost-to-go: straight-line distance to the goal box


class _BudgetExhausted(Exception):
    pass


class _Search:
    def __init__(self, s0, sg, field, sep, obstacles, config, t_start):
        self.cfg = config
        self.field = field
        self.sep = sep
        self.obstacles = list(obstacles or ())
        self.timed = bool(self.obstacles)
        self.t_start = t_start
        self.goal = sg
        self.s0 = s0
        lim = config.limits
        self.limits = lim
        prims = config.controls.primitives()
        self.prims = prims
        dt = config.dt
        self.dt = dt
        self.dphi = np.array([p.u_phi * dt for p in prims])
        self.radius = np.array([lim.v / p.u_phi if p.u_phi else 0.0 for p in prims])
        self.straight = np.array([0.0 if p.u_phi else lim.v * dt for p in prims])
        self.dz = np.array([p.u_z * dt for p in prims])
        self.lengths = [dt * math.hypot(lim.v, p.u_z) for p in prims]
        m = config.bbox_margin_m
        self.xlo, self.xhi = min(s0.x, sg.x) - m, max(s0.x, sg.x) + m
        self.ylo, self.yhi = min(s0.y, sg.y) - m, max(s0.y, sg.y) + m
        mz = config.z_margin_m
        self.zlo, self.zhi = min(s0.z, sg.z) - mz, max(s0.z, sg.z) + mz
        self._obs_cache = {}

        self.best = {}
        self.open = {}
        self.heap = []
        self.closed = set()
        self.incons = {}
        self.goal_rec = None
        self.goal_g = math.inf
        self.expansions = 0
        self.eps = config.eps_start
        self.deadline = None

    # -- helpers -----------------------------------------------------------

    def key(self, x, y, z, phi, step):
        res = self.cfg.resolution
        k = (math.floor(x / res.x), math.floor(y / res.y), math.floor(z / res.z),
             math.floor(phi / res.phi))
        return k + (step,) if self.timed else k

    def obstacle_cells(self, step):
        cells = self._obs_cache.get(step)
        if cells is None:
            t = self.t_start + step * self.dt
            cells = [c for c in (ob.cell_at(t) for ob in self.obstacles) if c is not None]
            self._obs_cache[step] = cells
        return cells

    def box_distance(self, xs, ys, zs):
        g = self.goal
        hx, hy, hz, _ = self.cfg.goal_half_widths
        dx = np.maximum(np.abs(xs - g.x) - hx, 0.0)
        dy = np.maximum(np.abs(ys - g.y) - hy, 0.0)
        dz = np.maximum(np.abs(zs - g.z) - hz, 0.0)
        return np.sqrt(dx * dx + dy * dy + dz * dz)

    def in_goal(self, x, y, z, phi):
        g = self.goal
        hx, hy, hz, hp = self.cfg.goal_half_widths
        return (abs(x - g.x) <= hx and abs(y - g.y) <= hy and abs(z - g.z) <= hz
                and abs(wrap_angle(phi - g.phi)) <= hp)

    def push(self, rec, key):
        heapq.heappush(self.heap, (rec.g + self.eps * rec.h, -rec.g, key))

    # -- search ------------------------------------------------------------

    def start(self):
        s0 = self.s0
        h = float(airplane_heuristic_many(np.array([s0.x]), np.array([s0.y]), np.array([s0.z]),
                                          np.array([s0.phi]), self.goal, self.limits)[0])
        lb = float(self.box_distance(np.array([s0.x]), np.array([s0.y]), np.array([s0.z]))[0])
        rec = _Rec(0.0, s0.x, s0.y, s0.z, s0.phi, 0, h, None, -1, 0.0, lb)
        key = self.key(s0.x, s0.y, s0.z, s0.phi, 0)
        self.best[key] = rec
        self.open[key] = rec
        self.push(rec, key)

    def expand(self, rec):
        cfg = self.cfg
        res = cfg.resolution
        phi_n = rec.phi + self.dphi
        xs = rec.x + self.radius * (np.sin(phi_n) - math.sin(rec.phi)) + self.straight * math.cos(rec.phi)
        ys = rec.y - self.radius * (np.cos(phi_n) - math.cos(rec.phi)) + self.straight * math.sin(rec.phi)
        zs = rec.z + self.dz
        phis = np.mod(phi_n + math.pi, TWO_PI) - math.pi
        hs = airplane_heuristic_many(xs, ys, zs, phis, self.goal, self.limits)
        lbs = self.box_distance(xs, ys, zs).tolist()

        field = self.field
        cres = field.resolution
        step = rec.step + 1
        obs = self.obstacle_cells(step) if self.obstacles and self.sep is not None else ()
        sep = self.sep

        for n, (x, y, z, phi, h) in enumerate(zip(xs.tolist(), ys.tolist(), zs.tolist(),
                                                  phis.tolist(), hs.tolist())):
            if not (self.xlo <= x <= self.xhi and self.ylo <= y <= self.yhi
                    and self.zlo <= z <= self.zhi):
                continue
            pen = field.cost((math.floor(x / cres.x), math.floor(y / cres.y),
                              math.floor(z / cres.z), math.floor(phi / cres.phi)))
            if obs:
                mine = (math.floor(x / res.x), math.floor(y / res.y), math.floor(z / res.z))
                for other in obs:
                    pen += eval_separation(sep, mine, other)
            length = self.lengths[n]
            g = rec.g + (1.0 + pen) * length
            if self.in_goal(x, y, z, phi):
                if g < self.goal_g:
                    self.goal_g = g
                    self.goal_rec = _Rec(g, x, y, z, phi, step, 0.0, rec, n, length)
                continue
            key = self.key(x, y, z, phi, step)
            old = self.best.get(key)
            if old is not None and old.g <= g:
                continue
            new = _Rec(g, x, y, z, phi, step, h, rec, n, length, lbs[n])
            self.best[key] = new
            if key in self.closed:
                self.incons[key] = new
            else:
                self.open[key] = new
                self.push(new, key)

    def improve_path(self):
        heap = self.heap
        max_exp = self.cfg.max_expansions
        while heap:
            f, ng, key = heap[0]
            rec = self.open.get(key)
            if rec is None or rec.g != -ng:
                heapq.heappop(heap)
                continue
            if self.goal_g <= f:
                return
            if max_exp is not None:
                if self.expansions >= max_exp:
                    raise _BudgetExhausted
            elif self.expansions % 32 == 0 and time.perf_counter() > self.deadline:
                raise _BudgetExhausted
            heapq.heappop(heap)
            del self.open[key]
            self.closed.add(key)
            self.expansions += 1
            self.expand(rec)

    def suboptimality_bound(self):
        """Goal cost over a certified lower bound on the optimum, at least 1.

        The search heuristic is not admissible, so the bound uses the
        straight-line distance to the goal box instead: every unexplored
        route passes through OPEN or INCONS and costs at least g + lb there.
        """
        if self.goal_rec is None:
            return math.inf
        lo = min((r.g + r.lb for r in (*self.open.values(), *self.incons.values())), default=math.inf)
        lo = min(lo, self.goal_g)
        if lo <= 0:
            return math.inf
        return max(1.0, self.goal_g / lo)

    def next_iteration(self):
        self.eps = max(self.eps - self.cfg.eps_step, self.cfg.eps_final)
        self.open.update(self.incons)
        self.incons = {}
        self.closed = set()
        self.heap = [(r.g + self.eps * r.h, -r.g, k) for k, r in self.open.items()]
        heapq.heapify(self.heap)

    def to_plan(self, eps_achieved, iterations):
        recs = []
        r = self.goal_rec
        while r is not None:
            recs.append(r)
            r = r.parent
        recs.reverse()
        states = [ContinuousState(r.x, r.y, r.z, r.phi) for r in recs]
        return Plan(
            states=states,
            primitives=[self.prims[r.prim] for r in recs[1:]],
            edge_lengths=[r.length for r in recs[1:]],
            cost=self.goal_g,
            eps_achieved=eps_achieved,
            expansions=self.expansions,
            t_start=self.t_start,
            dt=self.dt,
            iterations=iterations,
            goal=self.goal,
        )


def ara_star(s0, sg, field, sep=None, obstacles=(), config=PlannerConfig(), t_start=0.0):
    """Plan from ``s0`` into the goal region around ``sg``.

    ``field`` is any routing cost with ``resolution`` and ``cost(cell)``;
    ``obstacles`` are ``MovingObstacle`` objects aligned on absolute time.
    Returns a ``Plan`` or a ``Timeout``.
    """
    t0 = time.perf_counter()
    if GoalRegion(sg, *config.goal_half_widths).contains(s0):
        return Plan([s0], [], [], 0.0, 1.0, 0, t_start, config.dt, goal=sg)

    search = _Search(s0, sg, field, sep, obstacles, config, t_start)
    search.deadline = t0 + config.time_limit_s
    search.start()
    iterations = []
    eps_done = math.inf
    try:
        while True:
            search.improve_path()
            if search.goal_rec is None:
                return Timeout(search.expansions, "exhausted", time.perf_counter() - t0)
            eps_done = search.suboptimality_bound()
            iterations.append((search.eps, search.goal_g, eps_done, search.expansions))
            if search.eps <= config.eps_final:
                break
            search.next_iteration()
    except _BudgetExhausted:
        if search.goal_rec is None:
            return Timeout(search.expansions, "budget", time.perf_counter() - t0)
        eps_done = search.suboptimality_bound()
        iterations.append((search.eps, search.goal_g, eps_done, search.expansions))
    return search.to_plan(eps_done, iterations)


def plan_sequence(arrivals, field, sep=None, config=PlannerConfig()):
    """Plan arrivals in order; each finished plan becomes an obstacle for the rest.

    ``arrivals`` is a sequence of (s0, sg, t_start) sorted by ``t_start``.
    """
    starts = [a[2] for a in arrivals]
    if starts != sorted(starts):
        raise ValueError("arrivals must be sorted by start time")
    obstacles = []
    outcomes = []
    for n, (s0, sg, t0) in enumerate(arrivals):
        out = ara_star(s0, sg, field, sep, tuple(obstacles), config, t_start=t0)
        outcomes.append(out)
        if isinstance(out, Plan):
            obstacles.append(MovingObstacle.from_states(out.states, t0, config.dt,
                                                        config.resolution, label=n))
        else:
            log.info("arrival %d timed out after %d expansions", n, out.expansions)
    return outcomes


def refine(plan, dt_out=1.0):
    """Cubic-spline the plan's waypoints against time and resample.

    When the plan carries its primitives, each waypoint's velocity is known
    exactly, so x and y use a Hermite cubic with those slopes and z (constant
    climb per edge) is piecewise linear. Otherwise a not-a-knot cubic spline
    through the positions is used. Returns (times, states) with states an
    (N, 4) array of x, y, z, phi; the bearing comes from consecutive
    resampled positions.
    """
    if len(plan.states) < 2:
        raise ValueError("need at least two states to refine")
    t = np.asarray(plan.times, dtype=float)
    pts = np.array([s.as_tuple()[:3] for s in plan.states])
    n = int(math.floor((t[-1] - t[0]) / dt_out + 1e-9))
    tt = t[0] + dt_out * np.arange(n + 1)
    if tt[-1] < t[-1] - 1e-9:
        tt = np.append(tt, t[-1])
    if len(plan.primitives) == len(plan.states) - 1 and len(plan.edge_lengths) == len(plan.primitives):
        p, L = plan.primitives[0], plan.edge_lengths[0]
        v = math.sqrt(max((L / p.dt) ** 2 - p.u_z ** 2, 0.0))
        phi = np.array([s.phi for s in plan.states])
        vel = v * np.column_stack([np.cos(phi), np.sin(phi)])
        xy = CubicHermiteSpline(t, pts[:, :2], vel, axis=0)(tt)
        xyz = np.column_stack([xy, np.interp(tt, t, pts[:, 2])])
    else:
        xyz = CubicSpline(t, pts, axis=0)(tt) if len(t) > 2 else np.column_stack(
            [np.interp(tt, t, pts[:, k]) for k in range(3)])
    d = np.diff(xyz[:, :2], axis=0)
    phi = np.arctan2(d[:, 1], d[:, 0])
    phi = np.append(phi, phi[-1]) if len(phi) else np.array([plan.states[0].phi])
    phi = np.mod(phi + math.pi, TWO_PI) - math.pi
    return tt, np.column_stack([xyz, phi])


# -- export ------------------------------------------------------------------

PLAN_COLUMNS = ("t_s", "x_m", "y_m", "z_m", "phi_rad", "u_phi_rad_s", "u_z_m_s")


def plan_records(plan):
    """Rows of (t, x, y, z, phi, u_phi, u_z); the control is the one leaving each state."""
    rows = []
    for n, (t, s) in enumerate(zip(plan.times, plan.states)):
        if n < len(plan.primitives):
            p = plan.primitives[n]
            u_phi, u_z = p.u_phi, p.u_z
        else:
            u_phi = u_z = 0.0
        rows.append((t, s.x, s.y, s.z, s.phi, u_phi, u_z))
    return rows


def plan_summary(outcome):
    if isinstance(outcome, Timeout):
        return {"status": "timeout", "expansions": outcome.expansions, "reason": outcome.reason}
    return {"status": "ok", "cost": outcome.cost, "eps_achieved": outcome.eps_achieved,
            "expansions": outcome.expansions, "n_states": len(outcome.states),
            "t_start": outcome.t_start}


def plan_from_records(rows, v=100.0, dt=None):
    """Rebuild a Plan from exported rows (cost and bound are left as NaN)."""
    rows = [tuple(map(float, r)) for r in rows]
    times = [r[0] for r in rows]
    if dt is None:
        dt = times[1] - times[0] if len(times) > 1 else 30.0
    states = [ContinuousState(*r[1:5]) for r in rows]
    prims = [Primitive(r[5], r[6], dt) for r in rows[:-1]]
    lengths = [dt * math.hypot(v, p.u_z) for p in prims]
    return Plan(states, prims, lengths, math.nan, math.nan, 0, times[0] if times else 0.0, dt)
