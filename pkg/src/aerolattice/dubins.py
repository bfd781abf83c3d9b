"""Dubins car shortest paths and the Dubins-airplane search heuristic.

The car paths use the normalized closed forms (turning radius 1) for the six
CSC/CCC words. The airplane heuristic is the cheap high-altitude
approximation: planar Dubins time, padded with whole helix turns until the
climb or descent fits, then combined with the altitude change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geo import TWO_PI, wrap_angle

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")


@dataclass(frozen=True)
class CarConfig:
    x: float
    y: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))


@dataclass(frozen=True)
class DubinsPath:
    word: str
    segment_lengths: tuple
    total_length: float


@dataclass(frozen=True)
class AirplaneLimits:
    v: float = 100.0
    dz_max: float = 6.0
    dphi_max: float = 0.025

    def __post_init__(self):
        if not (self.v > 0 and self.dz_max > 0 and self.dphi_max > 0):
            raise ValueError(f"airplane limits must be positive: {self}")

    @property
    def turn_radius(self):
        return self.v / self.dphi_max


def _mod2pi(a):
    return a - TWO_PI * math.floor(a / TWO_PI)


# Each word returns normalized (t, p, q) or None when infeasible.
def _lsl(a, b, d, sa, sb, ca, cb, cab):
    p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
    if p2 < 0.0:
        return None
    tmp = math.atan2(cb - ca, d + sa - sb)
    return _mod2pi(-a + tmp), math.sqrt(p2), _mod2pi(b - tmp)


def _rsr(a, b, d, sa, sb, ca, cb, cab):
    p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
    if p2 < 0.0:
        return None
    tmp = math.atan2(ca - cb, d - sa + sb)
    return _mod2pi(a - tmp), math.sqrt(p2), _mod2pi(-b + tmp)


def _lsr(a, b, d, sa, sb, ca, cb, cab):
    p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
    if p2 < 0.0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return _mod2pi(-a + tmp), p, _mod2pi(-b + tmp)


def _rsl(a, b, d, sa, sb, ca, cb, cab):
    p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
    if p2 < 0.0:
        return None
    p = math.sqrt(p2)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return _mod2pi(a - tmp), p, _mod2pi(b - tmp)


def _rlr(a, b, d, sa, sb, ca, cb, cab):
    tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(TWO_PI - math.acos(tmp))
    t = _mod2pi(a - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, _mod2pi(a - b - t + p)


def _lrl(a, b, d, sa, sb, ca, cb, cab):
    tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(TWO_PI - math.acos(tmp))
    t = _mod2pi(-a - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, _mod2pi(b - a - t + p)


_SOLVERS = {"LSL": _lsl, "RSR": _rsr, "LSR": _lsr, "RSL": _rsl, "RLR": _rlr, "LRL": _lrl}


def dubins_candidates(q0, q1, curvature):
    """All feasible words as DubinsPath objects (lengths in meters)."""
    if curvature <= 0:
        raise ValueError("curvature must be positive")
    radius = 1.0 / curvature
    dx, dy = q1.x - q0.x, q1.y - q0.y
    d = math.hypot(dx, dy) / radius
    theta = math.atan2(dy, dx) if d > 0 else 0.0
    a = _mod2pi(q0.phi - theta)
    b = _mod2pi(q1.phi - theta)
    sa, sb, ca, cb = math.sin(a), math.sin(b), math.cos(a), math.cos(b)
    cab = math.cos(a - b)
    out = []
    for word in WORDS:
        sol = _SOLVERS[word](a, b, d, sa, sb, ca, cb, cab)
        if sol is None:
            continue
        segs = tuple(radius * s for s in sol)
        out.append(DubinsPath(word, segs, sum(segs)))
    return out


def dubins_car_shortest(q0, q1, curvature):
    """Shortest of the six Dubins words between two planar configurations."""
    return min(dubins_candidates(q0, q1, curvature), key=lambda p: p.total_length)


def sample_path(q0, path, curvature, step):
    """Points along a Dubins path; used for plotting and tests."""
    radius = 1.0 / curvature
    x, y, phi = q0.x, q0.y, q0.phi
    pts = [(x, y, phi)]
    for kind, length in zip(path.word, path.segment_lengths):
        n = max(1, int(math.ceil(length / step)))
        ds = length / n
        for _ in range(n):
            if kind == "S":
                x += ds * math.cos(phi)
                y += ds * math.sin(phi)
            else:
                sgn = 1.0 if kind == "L" else -1.0
                dphi = sgn * ds / radius
                x += sgn * radius * (math.sin(phi + dphi) - math.sin(phi))
                y -= sgn * radius * (math.cos(phi + dphi) - math.cos(phi))
                phi += dphi
            pts.append((x, y, wrap_angle(phi)))
    return pts


def airplane_heuristic(s0, sg, limits):
    """Approximate Dubins-airplane path length from ``s0`` to ``sg`` (meters).

    Not guaranteed admissible: the helix padding adds whole turns.
    """
    kappa = limits.dphi_max / limits.v
    d_xy = dubins_car_shortest(
        CarConfig(s0.x, s0.y, s0.phi), CarConfig(sg.x, sg.y, sg.phi), kappa
    ).total_length
    t_min = d_xy / limits.v
    dz = sg.z - s0.z
    t_z = abs(dz) / limits.dz_max
    helix = TWO_PI / limits.dphi_max
    while t_z > t_min:
        t_min += helix
    return math.sqrt((limits.v * t_min) ** 2 + dz * dz)


def _mod2pi_arr(a):
    return np.mod(a, TWO_PI)


def dubins_length_many(x0, y0, phi0, x1, y1, phi1, curvature):
    """Vectorized shortest Dubins length over arrays of start configurations.

    The goal may be scalar (broadcast). Returns meters.
    """
    radius = 1.0 / curvature
    dx = x1 - x0
    dy = y1 - y0
    d = np.hypot(dx, dy) / radius
    theta = np.arctan2(dy, dx)
    a = _mod2pi_arr(phi0 - theta)
    b = _mod2pi_arr(phi1 - theta)
    sa, sb, ca, cb = np.sin(a), np.sin(b), np.cos(a), np.cos(b)
    cab = np.cos(a - b)
    best = np.full(np.shape(d), np.inf)

    with np.errstate(invalid="ignore"):
        # LSL
        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
        tmp = np.arctan2(cb - ca, d + sa - sb)
        L = _mod2pi_arr(-a + tmp) + np.sqrt(p2) + _mod2pi_arr(b - tmp)
        best = np.where(p2 >= 0, np.minimum(best, L), best)
        # RSR
        p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
        tmp = np.arctan2(ca - cb, d - sa + sb)
        L = _mod2pi_arr(a - tmp) + np.sqrt(p2) + _mod2pi_arr(-b + tmp)
        best = np.where(p2 >= 0, np.minimum(best, L), best)
        # LSR
        p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        p = np.sqrt(p2)
        tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
        L = _mod2pi_arr(-a + tmp) + p + _mod2pi_arr(-b + tmp)
        best = np.where(p2 >= 0, np.minimum(best, L), best)
        # RSL
        p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        p = np.sqrt(p2)
        tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
        L = _mod2pi_arr(a - tmp) + p + _mod2pi_arr(b - tmp)
        best = np.where(p2 >= 0, np.minimum(best, L), best)
        # RLR
        c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
        p = _mod2pi_arr(TWO_PI - np.arccos(c))
        t = _mod2pi_arr(a - np.arctan2(ca - cb, d - sa + sb) + p / 2.0)
        L = t + p + _mod2pi_arr(a - b - t + p)
        best = np.where(np.abs(c) <= 1.0, np.minimum(best, L), best)
        # LRL
        c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
        p = _mod2pi_arr(TWO_PI - np.arccos(c))
        t = _mod2pi_arr(-a - np.arctan2(ca - cb, d + sa - sb) + p / 2.0)
        L = t + p + _mod2pi_arr(b - a - t + p)
        best = np.where(np.abs(c) <= 1.0, np.minimum(best, L), best)

    return best * radius


def airplane_heuristic_many(xs, ys, zs, phis, sg, limits):
    """Vectorized ``airplane_heuristic`` for many starts and one goal."""
    kappa = limits.dphi_max / limits.v
    d_xy = dubins_length_many(xs, ys, phis, sg.x, sg.y, sg.phi, kappa)
    t_min = d_xy / limits.v
    dz = sg.z - zs
    t_z = np.abs(dz) / limits.dz_max
    helix = TWO_PI / limits.dphi_max
    deficit = t_z - t_min
    loops = np.where(deficit > 0, np.ceil(deficit / helix), 0.0)
    t_min = t_min + loops * helix
    return np.sqrt((limits.v * t_min) ** 2 + dz * dz)
