"""Demonstrations: ingestion of geodetic traces and synthetic experts.

Trace files are delimited text with a header row::

    flight_id,t_unix_s,lat_deg,lon_deg,alt_m

Synthetic experts are produced by running the planner against a known
ground-truth cost, so learned parameters can be checked against it.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .costs import COARSE_RESOLUTION, RoutingCostField, SeparationCost
from .geo import (SEA_ORIGIN, ContinuousState, EnuOrigin, GeodeticFix, bearing_from_positions,
                  wgs84_to_enu, wrap_angle)
from .planner import Plan, PlannerConfig, ara_star, plan_sequence

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("flight_id", "t_unix_s", "lat_deg", "lon_deg", "alt_m")
DEMO_COLUMNS = ("demo_id", "scene_id", "arrival_order", "t_s", "x_m", "y_m", "z_m", "phi_rad")


class TraceError(ValueError):
    """Raised for traces that cannot become demonstrations."""


@dataclass
class RawTrace:
    flight_id: str
    fixes: list

    def __post_init__(self):
        ts = [f.t for f in self.fixes]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise TraceError(f"{self.flight_id}: timestamps must be strictly increasing")


@dataclass
class Demonstration:
    id: str
    times: np.ndarray
    states: list
    scene_id: Optional[str] = None
    arrival_order: int = 0
    diagnostics: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.states) < 2 or len(self.states) != len(self.times):
            raise ValueError(f"demonstration {self.id}: need >= 2 states with matching times")

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def s0(self):
        return self.states[0]

    @property
    def sg(self):
        return self.states[-1]

    @classmethod
    def from_plan(cls, plan, id, scene_id=None, arrival_order=0):
        return cls(id, np.array(plan.times), list(plan.states), scene_id, arrival_order)


@dataclass
class Scenario:
    origin: EnuOrigin
    arrivals: list  # (s0, sg, t_start), sorted by t_start
    ground_truth: Optional[tuple] = None
    id: str = "scene"

    def __post_init__(self):
        starts = [a[2] for a in self.arrivals]
        if starts != sorted(starts):
            raise ValueError("arrivals must be sorted by start time")


# -- trace ingestion ---------------------------------------------------------

def read_traces(path):
    """Group a trace file into RawTrace objects, keeping first-seen flight order."""
    groups = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TRACE_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise TraceError(f"{path}: missing columns {missing}")
        for row in reader:
            fix = GeodeticFix(float(row["t_unix_s"]), float(row["lat_deg"]),
                              float(row["lon_deg"]), float(row["alt_m"]))
            groups.setdefault(row["flight_id"], []).append(fix)
    return [RawTrace(fid, sorted(fixes, key=lambda f: f.t)) for fid, fixes in groups.items()]


def write_traces(traces, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for tr in traces:
            for f in tr.fixes:
                w.writerow([tr.flight_id, repr(f.t), repr(f.lat), repr(f.lon), repr(f.alt)])


def fit_track(times, xyz):
    """Interpolating cubic spline of x, y, z against time."""
    return CubicSpline(np.asarray(times, dtype=float), np.asarray(xyz, dtype=float), axis=0)


def resample_track(times, xyz, dt):
    """Sample the track on the global ``dt`` lattice inside the observed time span."""
    times = np.asarray(times, dtype=float)
    spline = fit_track(times, xyz)
    k0 = math.ceil(times[0] / dt - 1e-9)
    k1 = math.floor(times[-1] / dt + 1e-9)
    grid = np.arange(k0, k1 + 1) * dt
    return grid, spline(grid)


def states_from_positions(xyz):
    """Attach bearings from consecutive positions; the last state repeats the previous bearing."""
    out = []
    n = len(xyz)
    phi = 0.0
    for i in range(n):
        if i + 1 < n:
            try:
                phi = bearing_from_positions(xyz[i], xyz[i + 1])
            except ValueError:
                pass
        out.append(ContinuousState(float(xyz[i][0]), float(xyz[i][1]), float(xyz[i][2]), phi))
    return out


def ingest(traces, origin=SEA_ORIGIN, dt=30.0, nominal_speed=100.0):
    """Convert raw traces into demonstrations on a shared time lattice.

    Traces with fewer than four fixes (or too short to span two lattice
    points) are rejected with their identifiers.
    """
    too_short = [tr.flight_id for tr in traces if len(tr.fixes) < 4]
    if too_short:
        raise TraceError(f"traces need at least 4 fixes: {too_short}")
    demos = []
    for tr in traces:
        t = np.array([f.t for f in tr.fixes])
        xyz = np.array([wgs84_to_enu(f, origin) for f in tr.fixes])
        grid, pts = resample_track(t, xyz, dt)
        if len(grid) < 2:
            raise TraceError(f"{tr.flight_id}: spans fewer than two {dt} s samples")
        states = states_from_positions(pts)
        planar = np.hypot(*np.diff(pts[:, :2], axis=0).T) / dt
        demos.append(Demonstration(
            tr.flight_id, grid, states,
            diagnostics={"mean_speed_m_s": float(planar.mean()),
                         "speed_mismatch_m_s": float(planar.mean() - nominal_speed)},
        ))
    return demos


# -- demonstration / scenario files ----------------------------------------

def write_demonstrations(demos, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(DEMO_COLUMNS)
        for d in demos:
            for t, s in zip(d.times, d.states):
                w.writerow([d.id, d.scene_id or "", d.arrival_order, repr(float(t)),
                            repr(s.x), repr(s.y), repr(s.z), repr(s.phi)])


def read_demonstrations(path):
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for r in reader:
            rows.setdefault(r["demo_id"], []).append(r)
    demos = []
    for did, rs in rows.items():
        demos.append(Demonstration(
            did,
            np.array([float(r["t_s"]) for r in rs]),
            [ContinuousState(float(r["x_m"]), float(r["y_m"]), float(r["z_m"]), float(r["phi_rad"]))
             for r in rs],
            rs[0]["scene_id"] or None,
            int(rs[0]["arrival_order"]),
        ))
    return demos


def group_scenes(demos):
    """Demonstrations grouped by scene id, each scene sorted by arrival order."""
    scenes = {}
    for d in demos:
        if d.scene_id is not None:
            scenes.setdefault(d.scene_id, []).append(d)
    return [sorted(v, key=lambda d: (d.arrival_order, d.t_start)) for _, v in sorted(scenes.items())]


def _state_list(s):
    return [s.x, s.y, s.z, s.phi]


def write_scenarios(scenarios, path):
    out = []
    for sc in scenarios:
        out.append({
            "id": sc.id,
            "origin": {"lat0_deg": sc.origin.lat0, "lon0_deg": sc.origin.lon0, "alt0_m": sc.origin.alt0},
            "units": "x_m, y_m, z_m, phi_rad; t_start_s",
            "arrivals": [{"order": n, "t_start_s": t, "s0": _state_list(a), "sg": _state_list(b)}
                         for n, (a, b, t) in enumerate(sc.arrivals)],
        })
    Path(path).write_text(json.dumps(out, indent=1), encoding="utf-8")


def read_scenarios(path):
    out = []
    for rec in json.loads(Path(path).read_text(encoding="utf-8")):
        o = rec["origin"]
        arrivals = [(ContinuousState(*a["s0"]), ContinuousState(*a["sg"]), float(a["t_start_s"]))
                    for a in rec["arrivals"]]
        out.append(Scenario(EnuOrigin(o["lat0_deg"], o["lon0_deg"], o["alt0_m"]), arrivals, id=rec["id"]))
    return out


# -- synthetic ground truth ------------------------------------------------

def _point_segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


class CorridorField:
    """Ground-truth routing cost: cheap inside a polyline corridor, expensive outside.

    Evaluated on the same coarse cells as ``RoutingCostField`` (cell centers,
    any altitude and heading), so it plugs into the planner unchanged.
    """

    def __init__(self, route, half_width=1500.0, inside=0.0, outside=100.0,
                 resolution=COARSE_RESOLUTION):
        self.route = [tuple(p) for p in route]
        self.half_width = float(half_width)
        self.inside = float(inside)
        self.outside = float(outside)
        self.resolution = resolution
        self.default_weight = self.outside
        self._cache = {}

    def distance(self, x, y):
        return min(_point_segment_distance(x, y, *a, *b) for a, b in zip(self.route, self.route[1:]))

    def cell_of(self, s):
        res = self.resolution
        return (math.floor(s.x / res.x), math.floor(s.y / res.y), math.floor(s.z / res.z),
                math.floor(wrap_angle(s.phi) / res.phi))

    def cost(self, cell):
        key = (cell[0], cell[1])
        c = self._cache.get(key)
        if c is None:
            res = self.resolution
            d = self.distance((cell[0] + 0.5) * res.x, (cell[1] + 0.5) * res.y)
            c = self.inside if d <= self.half_width else self.outside
            self._cache[key] = c
        return max(c, 0.0)

    def cost_at(self, s):
        return self.cost(self.cell_of(s))

    def to_dict(self):
        return {"route_m": self.route, "half_width_m": self.half_width,
                "inside": self.inside, "outside": self.outside}


@dataclass(frozen=True)
class ScenarioTemplate:
    """Where synthetic arrivals start and end.

    Starts are spread along a short arc of the entry ring centred on the first
    corridor waypoint, headed at the second waypoint, at altitudes that are a
    whole number of climb steps above the goal.
    """

    goal: tuple = (0.0, 0.0, 600.0, 0.0)
    route: tuple = ((-20000.0, 13000.0), (-13000.0, 0.0), (0.0, 0.0))
    corridor_half_width_m: float = 1500.0
    entry_ring_m: float = 40000.0
    entry_spread_m: float = 1000.0
    heading_jitter_rad: float = 0.1
    descent_steps: tuple = (0, 4)
    origin: EnuOrigin = SEA_ORIGIN

    def corridor(self, outside=100.0):
        return CorridorField(self.route, self.corridor_half_width_m, 0.0, outside)

    def sample_arrival(self, rng, config):
        (x0, y0), (x1, y1) = self.route[0], self.route[1]
        leg = math.atan2(y1 - y0, x1 - x0)
        # the entry point sits on the ring around the goal, jittered across the leg
        gx, gy = self.goal[0], self.goal[1]
        ang = math.atan2(y0 - gy, x0 - gx)
        ring = self.entry_ring_m if self.entry_ring_m > 0 else math.hypot(x0 - gx, y0 - gy)
        ang += rng.uniform(-1.0, 1.0) * self.entry_spread_m / ring
        sx = gx + ring * math.cos(ang)
        sy = gy + ring * math.sin(ang)
        phi = leg + rng.normal(0.0, self.heading_jitter_rad)
        step_dz = config.limits.dz_max * config.dt
        n = int(rng.integers(self.descent_steps[0], self.descent_steps[1] + 1))
        s0 = ContinuousState(sx, sy, self.goal[2] + n * step_dz, phi)
        return s0, ContinuousState(*self.goal)


def desk_template():
    """Small corridor scenario used by the tests and the default CLI config.

    Starts sit at the corridor's first waypoint with a tight spread so a few
    hundred demonstrations revisit the same coarse cells.
    """
    return ScenarioTemplate(entry_ring_m=0.0, entry_spread_m=500.0, heading_jitter_rad=0.03,
                            descent_steps=(0, 2))


def synth_expert(ground_truth, template, count, seed, config=PlannerConfig(max_expansions=20000),
                 max_retries=20, id_prefix="demo"):
    """Plan ``count`` expert arrivals with the ground-truth routing cost.

    Timeouts are resampled up to ``max_retries`` times per demonstration.
    Returns (scenarios, demonstrations).
    """
    field = ground_truth[0] if isinstance(ground_truth, tuple) else ground_truth
    rng = np.random.default_rng(seed)
    scenarios, demos = [], []
    for n in range(count):
        for attempt in range(max_retries + 1):
            s0, sg = template.sample_arrival(rng, config)
            out = ara_star(s0, sg, field, None, (), config)
            if isinstance(out, Plan) and len(out.states) >= 2:
                break
            log.info("expert %d attempt %d failed (%s)", n, attempt, type(out).__name__)
        else:
            raise RuntimeError(f"could not plan expert {n} in {max_retries + 1} attempts")
        did = f"{id_prefix}{n:04d}"
        demos.append(Demonstration.from_plan(out, did))
        scenarios.append(Scenario(template.origin, [(s0, sg, 0.0)], (field, None), id=did))
    return scenarios, demos


@dataclass(frozen=True)
class SceneTemplate:
    """Multi-arrival scenes for separation learning.

    Each scene has a lead airplane flying a straight level leg and followers
    whose straight legs converge on it, so the experts must trade path length
    against separation.
    """

    n_arrivals: int = 2
    leg_length_m: float = 24000.0
    altitude_m: float = 3000.0
    lateral_offset_m: tuple = (0.0, 5000.0)
    vertical_offset_steps: tuple = (0, 6)
    start_delay_s: tuple = (0.0, 0.0)
    origin: EnuOrigin = SEA_ORIGIN

    def sample(self, rng, config):
        dzs = config.limits.dz_max * config.dt
        arrivals = []
        t = 0.0
        for n in range(self.n_arrivals):
            if n == 0:
                y0 = yg = 0.0
                z = self.altitude_m
            else:
                y0 = rng.uniform(*self.lateral_offset_m) * rng.choice((-1.0, 1.0))
                yg = rng.uniform(*self.lateral_offset_m) * rng.choice((-1.0, 1.0))
                z = self.altitude_m + dzs * int(rng.integers(self.vertical_offset_steps[0],
                                                              self.vertical_offset_steps[1] + 1))
                t += float(rng.uniform(*self.start_delay_s))
                t = round(t / config.dt) * config.dt
            s0 = ContinuousState(0.0, y0, z, 0.0)
            sg = ContinuousState(self.leg_length_m, yg, z, 0.0)
            arrivals.append((s0, sg, t))
        return arrivals


def synth_scenes(ground_truth, template, count, seed, config=PlannerConfig(max_expansions=20000),
                 max_retries=20):
    """Plan multi-arrival expert scenes with ground-truth routing and separation costs.

    Returns (scenarios, demonstrations) with demonstrations tagged by scene id
    and arrival order.
    """
    field, sep = ground_truth
    rng = np.random.default_rng(seed)
    scenarios, demos = [], []
    for n in range(count):
        sid = f"scene{n:04d}"
        for attempt in range(max_retries + 1):
            arrivals = template.sample(rng, config)
            outs = plan_sequence(arrivals, field, sep, config)
            if all(isinstance(o, Plan) and len(o.states) >= 2 for o in outs):
                break
        else:
            raise RuntimeError(f"could not plan scene {n} in {max_retries + 1} attempts")
        scenarios.append(Scenario(template.origin, arrivals, (field, sep), id=sid))
        for k, out in enumerate(outs):
            demos.append(Demonstration.from_plan(out, f"{sid}_{k}", sid, k))
    return scenarios, demos


def ground_truth_separation(v_xy=40.0, v_z=20.0, u=1.0):
    return SeparationCost(u, v_xy, v_z)


def free_field():
    """Routing field with zero cost everywhere."""
    return RoutingCostField(default_weight=0.0)
