"""Evaluation metrics: path difference, timeout fraction, separation audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .costs import MovingObstacle, eval_separation
from .lattice import FINE_RESOLUTION, in_goal_region
from .planner import Plan, Timeout


@dataclass
class MetricsReport:
    avg_min_path_diff: float = 0.0
    avg_min_path_diff_m: float = 0.0
    path_diff_std: float = 0.0
    n_pairs: int = 0
    n_timeouts: int = 0
    timeout_fraction: float = 0.0
    margin_series: list = dc_field(default_factory=list)
    separation_violation_mass: float = 0.0

    def as_dict(self):
        return dict(self.__dict__)


def _positions(states, res=None):
    pts = np.array([[s.x, s.y, s.z] for s in states], dtype=float)
    if res is None:
        return pts
    return np.floor(pts / np.array([res.x, res.y, res.z]))


def min_path_diff(learner_states, expert_states, res=FINE_RESOLUTION, scale=None):
    """Mean over learner states of the distance to the nearest expert state.

    Distances are between fine-grid position cells; ``scale`` multiplies the
    cell differences per axis (pass the resolution to get meters).
    """
    a = _positions(learner_states, res)
    b = _positions(expert_states, res)
    diff = a[:, None, :] - b[None, :, :]
    if scale is not None:
        diff = diff * np.asarray(scale, dtype=float)
    d = np.sqrt((diff ** 2).sum(axis=2))
    return float(d.min(axis=1).mean())


def avg_min_path_diff(pairs, res=FINE_RESOLUTION):
    """Average minimum path difference over (learner plan, expert) pairs.

    Timed-out plans are excluded and counted. Returns a MetricsReport with
    the value in grid cells, in meters, and the per-pair standard deviation.
    """
    if not pairs:
        raise ValueError("no pairs to evaluate")
    vals, vals_m, timeouts = [], [], 0
    scale = (res.x, res.y, res.z)
    for learner, expert in pairs:
        if isinstance(learner, Timeout) or learner is None:
            timeouts += 1
            continue
        ls = learner.states if isinstance(learner, Plan) else learner
        es = expert.states if hasattr(expert, "states") else expert
        vals.append(min_path_diff(ls, es, res))
        vals_m.append(min_path_diff(ls, es, res, scale))
    rep = MetricsReport(n_pairs=len(vals), n_timeouts=timeouts,
                        timeout_fraction=timeouts / len(pairs))
    if vals:
        rep.avg_min_path_diff = float(np.mean(vals))
        rep.avg_min_path_diff_m = float(np.mean(vals_m))
        rep.path_diff_std = float(np.std(vals))
    else:
        rep.avg_min_path_diff = rep.avg_min_path_diff_m = math.nan
    return rep


def timeout_fraction(timeouts, window=50):
    """Mean of the timeout indicator over consecutive blocks of ``window`` steps.

    Accepts a TrainingTrace or a sequence of booleans; a trailing partial
    block is averaged over its own length.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    flags = np.asarray(getattr(timeouts, "timeouts", timeouts), dtype=float)
    return np.array([flags[i:i + window].mean() for i in range(0, len(flags), window)])


def windowed_mean(values, window=50):
    vals = np.asarray(values, dtype=float)
    return np.array([vals[i:i + window].mean() for i in range(0, len(vals), window)])


@dataclass
class SeparationAudit:
    violation_mass: float
    pair_min_planar_m: dict
    pair_min_vertical_m: dict
    pair_mass: dict
    n_aligned: dict


def separation_audit(plans, sep, res=FINE_RESOLUTION, goal_half_widths=None):
    """Separation cost summed over every time-aligned pair of plans.

    ``plans`` is a list of Plan objects (their ``t_start`` and ``dt`` place
    them in time). With ``goal_half_widths`` set, a pair instant is skipped
    when either airplane is already inside its own goal region.
    """
    plans = [p for p in plans if isinstance(p, Plan)]
    if len(plans) < 2:
        raise ValueError("need at least two plans")
    tracks = []
    for p in plans:
        ob = MovingObstacle.from_states(p.states, p.t_start, p.dt, res)
        tracks.append((p, ob, {round(t / p.dt): s for t, s in zip(p.times, p.states)}))
    total = 0.0
    min_xy, min_z, masses, counts = {}, {}, {}, {}
    for a in range(len(tracks)):
        for b in range(a + 1, len(tracks)):
            pa, oa, sa = tracks[a]
            pb, ob, sb = tracks[b]
            mass, dxy, dz, n = 0.0, math.inf, math.inf, 0
            for key in sorted(set(sa) & set(sb)):
                s1, s2 = sa[key], sb[key]
                if goal_half_widths is not None and (
                        in_goal_region(s1, pa.goal or pa.states[-1], goal_half_widths)
                        or in_goal_region(s2, pb.goal or pb.states[-1], goal_half_widths)):
                    continue
                t = key * pa.dt
                mass += eval_separation(sep, oa.cell_at(t), ob.cell_at(t))
                dxy = min(dxy, math.hypot(s1.x - s2.x, s1.y - s2.y))
                dz = min(dz, abs(s1.z - s2.z))
                n += 1
            min_xy[(a, b)], min_z[(a, b)], masses[(a, b)], counts[(a, b)] = dxy, dz, mass, n
            total += mass
    return SeparationAudit(total, min_xy, min_z, masses, counts)
