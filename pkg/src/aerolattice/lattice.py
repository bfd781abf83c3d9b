"""State grid and fixed-time motion primitives for the Dubins airplane."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .geo import ContinuousState, wrap_angle


@dataclass(frozen=True)
class Resolution:
    x: float = 125.0
    y: float = 125.0
    z: float = 50.0
    phi: float = 0.05

    def __post_init__(self):
        if min(self.x, self.y, self.z, self.phi) <= 0:
            raise ValueError(f"resolution must be positive: {self}")


FINE_RESOLUTION = Resolution()


class GridState(NamedTuple):
    i: int
    j: int
    k: int
    l: int
    step: Optional[int] = None


@dataclass(frozen=True)
class Primitive:
    u_phi: float
    u_z: float
    dt: float = 30.0


@dataclass(frozen=True)
class ControlSets:
    turn_rates: tuple = (-0.025, -0.0025, 0.0, 0.0025, 0.025)
    climb_rates: tuple = (-6.0, 0.0, 6.0)
    dt: float = 30.0

    def primitives(self):
        return [Primitive(u_phi, u_z, self.dt)
                for u_phi, u_z in itertools.product(self.turn_rates, self.climb_rates)]

    def check(self, limits):
        for p in self.primitives():
            if abs(p.u_phi) > limits.dphi_max + 1e-12 or abs(p.u_z) > limits.dz_max + 1e-12:
                raise ValueError(f"primitive {p} exceeds airplane limits {limits}")


@dataclass(frozen=True)
class GoalRegion:
    """Closed box around a goal state; half widths in meters and radians."""

    center: ContinuousState
    half_x: float = 500.0
    half_y: float = 500.0
    half_z: float = 25.0
    half_phi: float = 0.125

    def contains(self, s):
        return in_goal_region(s, self.center, (self.half_x, self.half_y, self.half_z, self.half_phi))


def discretize(s, res, step=None):
    """Floor-quantize a continuous state onto the grid."""
    phi = wrap_angle(s.phi) if isinstance(s, ContinuousState) else wrap_angle(s[3])
    x, y, z = (s.x, s.y, s.z) if isinstance(s, ContinuousState) else s[:3]
    return GridState(
        math.floor(x / res.x),
        math.floor(y / res.y),
        math.floor(z / res.z),
        math.floor(phi / res.phi),
        step,
    )


def apply_primitive(s, p, v):
    """Integrate the airplane dynamics exactly over one primitive.

    Returns the successor state and the workspace length of the edge.
    """
    dt = p.dt
    if p.u_phi == 0.0:
        x = s.x + v * dt * math.cos(s.phi)
        y = s.y + v * dt * math.sin(s.phi)
        phi = s.phi
    else:
        r = v / p.u_phi
        phi = s.phi + p.u_phi * dt
        x = s.x + r * (math.sin(phi) - math.sin(s.phi))
        y = s.y - r * (math.cos(phi) - math.cos(s.phi))
    z = s.z + p.u_z * dt
    return ContinuousState(x, y, z, phi), dt * math.hypot(v, p.u_z)


def successors(s, limits, control_sets=ControlSets()):
    """(next_state, primitive, edge_length) for every primitive in the control set."""
    out = []
    for p in control_sets.primitives():
        nxt, length = apply_primitive(s, p, limits.v)
        out.append((nxt, p, length))
    return out


def in_goal_region(s, sg, half_widths=(500.0, 500.0, 25.0, 0.125)):
    hx, hy, hz, hphi = half_widths
    return (
        abs(s.x - sg.x) <= hx
        and abs(s.y - sg.y) <= hy
        and abs(s.z - sg.z) <= hz
        and abs(wrap_angle(s.phi - sg.phi)) <= hphi
    )
