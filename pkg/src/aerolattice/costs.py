"""Learnable penalties: the sparse routing field and pairwise separation cost.

Routing weights are stored unclamped and clamped at lookup. Separation is a
cylinder around each other airplane with a bilinear drop-off, measured in
fine-grid cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geo import ContinuousState
from .lattice import FINE_RESOLUTION, Resolution, discretize

COARSE_RESOLUTION = Resolution(250.0, 250.0, 125.0, 0.125)
DEFAULT_WEIGHT = 100.0


class RoutingCostField:
    """Sparse map from coarse cells to weights; unseen cells use ``default_weight``."""

    def __init__(self, cells=None, default_weight=DEFAULT_WEIGHT, resolution=COARSE_RESOLUTION):
        self.cells = dict(cells or {})
        self.default_weight = float(default_weight)
        self.resolution = resolution

    def __len__(self):
        return len(self.cells)

    def cell_of(self, s):
        c = discretize(s, self.resolution)
        return (c.i, c.j, c.k, c.l)

    def weight(self, cell):
        return self.cells.get(tuple(cell[:4]), self.default_weight)

    def cost(self, cell):
        w = self.cells.get(tuple(cell[:4]), self.default_weight)
        return w if w > 0.0 else 0.0

    def cost_at(self, s):
        return self.cost(self.cell_of(s))

    def copy(self):
        return RoutingCostField(self.cells, self.default_weight, self.resolution)

    def save(self, path):
        save_routing_field(self, path)

    @classmethod
    def load(cls, path):
        return load_routing_field(path)


@dataclass(frozen=True)
class SeparationCost:
    u: float = 1.0
    v_xy: float = 60.0
    v_z: float = 60.0

    def projected(self):
        return replace(self, v_xy=max(self.v_xy, 0.0), v_z=max(self.v_z, 0.0))


class MovingObstacle:
    """Another airplane's trajectory as fine cells sampled every ``dt`` seconds."""

    def __init__(self, t_start, dt, cells, label=None):
        self.t_start = float(t_start)
        self.dt = float(dt)
        self.cells = [tuple(c[:3]) for c in cells]
        self.label = label

    @classmethod
    def from_states(cls, states, t_start, dt, res=FINE_RESOLUTION, label=None):
        return cls(t_start, dt, [discretize(s, res)[:3] for s in states], label)

    def cell_at(self, t):
        """Cell occupied at time ``t`` (nearest sample), or None before start / after landing."""
        n = int(round((t - self.t_start) / self.dt))
        if 0 <= n < len(self.cells):
            return self.cells[n]
        return None


def parameter_vector(field, sep):
    """Flat parameter vector: stored weights in lexicographic cell order, then thresholds."""
    keys = sorted(field.cells)
    return np.array([field.cells[k] for k in keys] + [sep.v_xy, sep.v_z], dtype=float)


def eval_routing(field, cell):
    return field.cost(cell)


def _sep_value(u, v_xy, v_z, dx, dy, dz):
    a = v_z - abs(dz)
    b = v_xy - math.sqrt(dx * dx + dy * dy)
    if a <= 0.0 or b <= 0.0:
        return 0.0
    return u * a * b


def eval_separation(sep, a, b):
    """Linear drop-off penalty between two fine cells (only i, j, k are used)."""
    return _sep_value(sep.u, sep.v_xy, sep.v_z, a[0] - b[0], a[1] - b[1], a[2] - b[2])


def total_penalty(field, sep, s, obstacles=(), t=None, res=FINE_RESOLUTION):
    """Routing cost at ``s`` plus separation from every obstacle present at time ``t``."""
    if not isinstance(s, ContinuousState):
        s = ContinuousState(*s)
    total = field.cost(field.cell_of(s))
    if obstacles and sep is not None:
        if t is None:
            raise ValueError("time is required when obstacles are present")
        mine = discretize(s, res)
        for ob in obstacles:
            other = ob.cell_at(t)
            if other is not None:
                total += eval_separation(sep, mine, other)
    return total


def trajectory_cost(states, edge_lengths, field, sep=None, obstacles=(), t_start=0.0, dt=30.0,
                    res=FINE_RESOLUTION):
    """Rectangle-rule motion cost: sum over edges of (1 + penalty at the edge's end) * length."""
    if len(edge_lengths) != len(states) - 1:
        raise ValueError("need one edge length per consecutive state pair")
    cost = 0.0
    for n, length in enumerate(edge_lengths, start=1):
        pen = total_penalty(field, sep, states[n], obstacles, t_start + n * dt, res)
        cost += (1.0 + pen) * length
    return cost


def routing_gradient_step(field, learner_states, expert_states, alpha=10.0,
                          noise_std=(62.5, 62.5, 15.625), rng=None):
    """One stochastic step on the routing weights, in place.

    Cells visited by the learner are raised by ``alpha`` per visit and expert
    cells lowered, after perturbing each state with Gaussian position noise
    (``noise_std`` in meters for x, y, z). Returns the field.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    noisy = any(sd > 0 for sd in noise_std)
    if noisy and rng is None:
        rng = np.random.default_rng()
    counts = {}
    for sign, states in ((1, learner_states), (-1, expert_states)):
        for s in states:
            if noisy:
                ex, ey, ez = rng.normal(0.0, 1.0, 3) * np.asarray(noise_std)
                s = ContinuousState(s.x + ex, s.y + ey, s.z + ez, s.phi)
            cell = field.cell_of(s)
            counts[cell] = counts.get(cell, 0) + sign
    for cell, n in counts.items():
        if n:
            field.cells[cell] = field.weight(cell) + alpha * n
    return field


def separation_features(sep, pairs):
    """Summed partial derivatives (d/dv_xy, d/dv_z) of the separation cost over cell pairs.

    The subgradient of max{., 0} at exactly zero is taken as 0.
    """
    g_xy = g_z = 0.0
    for a, b in pairs:
        dx, dy, dz = a[0] - b[0], a[1] - b[1], abs(a[2] - b[2])
        r = math.sqrt(dx * dx + dy * dy)
        in_z = sep.v_z - dz
        in_xy = sep.v_xy - r
        if in_xy > 0.0 and in_z > 0.0:
            g_xy += sep.u * in_z
            g_z += sep.u * in_xy
    return g_xy, g_z


def separation_cost_sum(sep, pairs):
    return sum(eval_separation(sep, a, b) for a, b in pairs)


def separation_gradient_step(sep, learner_pairs, expert_pairs, alpha=0.01, clip=100.0):
    """Feature-count difference step on (v_xy, v_z), clipped and projected to >= 0."""
    if alpha <= 0 or clip <= 0:
        raise ValueError("alpha and clip must be positive")
    lx, lz = separation_features(sep, learner_pairs)
    ex, ez = separation_features(sep, expert_pairs)
    gx = min(max(lx - ex, -clip), clip)
    gz = min(max(lz - ez, -clip), clip)
    return replace(sep, v_xy=sep.v_xy + alpha * gx, v_z=sep.v_z + alpha * gz).projected()


# -- persistence -------------------------------------------------------------

_FIELD_KEYS = ("resolution_x_m", "resolution_y_m", "resolution_z_m", "resolution_phi_rad", "default_weight")


def save_routing_field(field, path):
    res = field.resolution
    lines = [
        "# aerolattice routing cost field",
        "# units: cell indices on the coarse grid, weight dimensionless",
        f"# resolution_x_m={res.x!r}",
        f"# resolution_y_m={res.y!r}",
        f"# resolution_z_m={res.z!r}",
        f"# resolution_phi_rad={res.phi!r}",
        f"# default_weight={field.default_weight!r}",
        "i,j,k,l,w",
    ]
    for cell in sorted(field.cells):
        i, j, k, l = cell
        lines.append(f"{i},{j},{k},{l},{field.cells[cell]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_routing_field(path):
    meta = {}
    cells = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, val = line[1:].strip().split("=", 1)
                    meta[key.strip()] = float(val)
                continue
            if line.startswith("i,"):
                continue
            i, j, k, l, w = line.split(",")
            cells[(int(i), int(j), int(k), int(l))] = float(w)
    missing = [k for k in _FIELD_KEYS if k not in meta]
    if missing:
        raise ValueError(f"{path}: missing header keys {missing}")
    res = Resolution(meta["resolution_x_m"], meta["resolution_y_m"], meta["resolution_z_m"],
                     meta["resolution_phi_rad"])
    return RoutingCostField(cells, meta["default_weight"], res)


def save_separation(sep, path):
    Path(path).write_text(
        "# aerolattice separation cost\n"
        "# units: u dimensionless; v_xy in fine xy cells; v_z in fine z cells\n"
        "u,v_xy_cells,v_z_cells\n"
        f"{sep.u!r},{sep.v_xy!r},{sep.v_z!r}\n",
        encoding="utf-8",
    )


def load_separation(path):
    rows = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")]
    if len(rows) != 2 or rows[0] != "u,v_xy_cells,v_z_cells":
        raise ValueError(f"{path}: malformed separation file")
    u, vxy, vz = (float(x) for x in rows[1].split(","))
    return SeparationCost(u, vxy, vz)
