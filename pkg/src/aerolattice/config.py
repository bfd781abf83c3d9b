"""Flat ``key = value`` experiment configuration with unit-suffixed keys.

A config file is a list of ``key = value`` lines with ``#`` comments and no
sections. Unknown keys are rejected so typos surface early.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .costs import COARSE_RESOLUTION, DEFAULT_WEIGHT, RoutingCostField, SeparationCost
from .dubins import AirplaneLimits
from .geo import EnuOrigin
from .irl import TrainingConfig
from .lattice import ControlSets, Resolution
from .planner import PlannerConfig


@dataclass(frozen=True)
class Settings:
    seed: int = 0
    # airplane and primitives
    speed_mps: float = 100.0
    climb_rate_max_mps: float = 6.0
    turn_rate_max_radps: float = 0.025
    dt_s: float = 30.0
    turn_rates_radps: tuple = (-0.025, -0.0025, 0.0, 0.0025, 0.025)
    climb_rates_mps: tuple = (-6.0, 0.0, 6.0)
    # fine planning grid
    resolution_x_m: float = 125.0
    resolution_y_m: float = 125.0
    resolution_z_m: float = 50.0
    resolution_phi_rad: float = 0.05
    # coarse cost grid
    cost_resolution_x_m: float = COARSE_RESOLUTION.x
    cost_resolution_y_m: float = COARSE_RESOLUTION.y
    cost_resolution_z_m: float = COARSE_RESOLUTION.z
    cost_resolution_phi_rad: float = COARSE_RESOLUTION.phi
    default_weight: float = DEFAULT_WEIGHT
    # search
    eps_start: float = 3.0
    eps_step: float = 0.5
    eps_final: float = 1.0
    max_expansions: int = 3000
    time_limit_s: float = 30.0
    goal_half_x_m: float = 500.0
    goal_half_y_m: float = 500.0
    goal_half_z_m: float = 25.0
    goal_half_phi_rad: float = 0.125
    bbox_margin_m: float = 50000.0
    z_margin_m: float = 3000.0
    # training
    epochs: int = 1
    alpha_routing: float = 10.0
    alpha_separation: float = 0.01
    gradient_clip: float = 100.0
    warmup_steps: int = 1000
    noise_x_m: float = 62.5
    noise_y_m: float = 62.5
    noise_z_m: float = 15.625
    checkpoint_every_steps: int = 50
    separation_u: float = 1.0
    separation_v_xy_cells: float = 60.0
    separation_v_z_cells: float = 60.0
    # data
    origin_lat_deg: float = 47.4489
    origin_lon_deg: float = -122.3094
    origin_alt_m: float = 0.0
    nominal_speed_mps: float = 100.0
    synth_demos: int = 250
    synth_scenes: int = 100
    synth_expansions: int = 20000
    heldout_demos: int = 50
    window_steps: int = 50

    # ---- derived objects ---------------------------------------------------

    @property
    def limits(self):
        return AirplaneLimits(self.speed_mps, self.climb_rate_max_mps, self.turn_rate_max_radps)

    @property
    def controls(self):
        return ControlSets(tuple(self.turn_rates_radps), tuple(self.climb_rates_mps), self.dt_s)

    @property
    def resolution(self):
        return Resolution(self.resolution_x_m, self.resolution_y_m, self.resolution_z_m,
                          self.resolution_phi_rad)

    @property
    def cost_resolution(self):
        return Resolution(self.cost_resolution_x_m, self.cost_resolution_y_m,
                          self.cost_resolution_z_m, self.cost_resolution_phi_rad)

    def planner(self, max_expansions=None):
        budget = self.max_expansions if max_expansions is None else max_expansions
        return PlannerConfig(
            limits=self.limits, controls=self.controls, resolution=self.resolution,
            eps_start=self.eps_start, eps_step=self.eps_step, eps_final=self.eps_final,
            max_expansions=budget if budget > 0 else None, time_limit_s=self.time_limit_s,
            goal_half_widths=(self.goal_half_x_m, self.goal_half_y_m, self.goal_half_z_m,
                              self.goal_half_phi_rad),
            bbox_margin_m=self.bbox_margin_m, z_margin_m=self.z_margin_m)

    def training(self, checkpoint_dir=None):
        return TrainingConfig(
            epochs=self.epochs, alpha_routing=self.alpha_routing,
            alpha_separation=self.alpha_separation, clip=self.gradient_clip,
            warmup_steps=self.warmup_steps,
            noise_std_m=(self.noise_x_m, self.noise_y_m, self.noise_z_m),
            planner=self.planner(), seed=self.seed,
            checkpoint_every=self.checkpoint_every_steps, checkpoint_dir=checkpoint_dir)

    def empty_field(self):
        return RoutingCostField(default_weight=self.default_weight, resolution=self.cost_resolution)

    def initial_separation(self):
        return SeparationCost(self.separation_u, self.separation_v_xy_cells, self.separation_v_z_cells)

    @property
    def origin(self):
        return EnuOrigin(self.origin_lat_deg, self.origin_lon_deg, self.origin_alt_m)


_FIELDS = {f.name: f for f in fields(Settings)}
_SECTION = "settings"


def _coerce(name, text):
    default = getattr(Settings, name)
    text = text.strip()
    if isinstance(default, tuple):
        return tuple(float(v) for v in text.replace(",", " ").split())
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    return float(text)


def apply_overrides(settings, pairs):
    """Return ``settings`` with ``{key: text}`` overrides applied (values still as strings)."""
    updates = {}
    for key, text in pairs.items():
        if key not in _FIELDS:
            raise KeyError(f"unknown config key {key!r}")
        try:
            updates[key] = _coerce(key, text)
        except ValueError as exc:
            raise ValueError(f"bad value for {key}: {text!r}") from exc
    return replace(settings, **updates)


def parse_config(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string(f"[{_SECTION}]\n" + text)
    return apply_overrides(Settings(), dict(parser[_SECTION]))


def load_config(path=None, overrides=None):
    settings = Settings() if path is None else parse_config(Path(path).read_text(encoding="utf-8"))
    return apply_overrides(settings, overrides or {})


def dump_config(settings):
    lines = []
    for name in _FIELDS:
        val = getattr(settings, name)
        if isinstance(val, tuple):
            val = ", ".join(repr(v) for v in val)
        lines.append(f"{name} = {val}")
    return "\n".join(lines) + "\n"
