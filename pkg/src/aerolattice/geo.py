"""Geodetic fixes to a local east-north-up frame.

WGS-84 constants and the usual geodetic -> ECEF -> ENU chain. Everything
downstream works in meters and radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

TWO_PI = 2.0 * math.pi


def wrap_angle(phi):
    """Wrap an angle (or array of angles) into [-pi, pi)."""
    if isinstance(phi, np.ndarray):
        return np.mod(phi + math.pi, TWO_PI) - math.pi
    w = math.fmod(phi + math.pi, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    w -= math.pi
    # fmod round-off can land exactly on +pi
    if w >= math.pi:
        w -= TWO_PI
    return w


def _check_latlon(lat, lon, alt):
    for name, val in (("lat", lat), ("lon", lon), ("alt", alt)):
        if not math.isfinite(val):
            raise ValueError(f"{name} is not finite: {val!r}")
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude out of range: {lat}")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude out of range: {lon}")


@dataclass(frozen=True)
class GeodeticFix:
    t: float
    lat: float
    lon: float
    alt: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"timestamp is not finite: {self.t!r}")
        _check_latlon(self.lat, self.lon, self.alt)


@dataclass(frozen=True)
class EnuOrigin:
    lat0: float
    lon0: float
    alt0: float = 0.0

    def __post_init__(self):
        _check_latlon(self.lat0, self.lon0, self.alt0)


# Seattle-Tacoma International; only a default.
SEA_ORIGIN = EnuOrigin(47.4489, -122.3094, 0.0)


@dataclass(frozen=True)
class ContinuousState:
    """Airplane configuration (x east, y north, z up in meters; phi in radians)."""

    x: float
    y: float
    z: float
    phi: float

    def __post_init__(self):
        for val in (self.x, self.y, self.z, self.phi):
            if not math.isfinite(val):
                raise ValueError(f"non-finite state component in {self!r}")
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))

    def as_tuple(self):
        return (self.x, self.y, self.z, self.phi)


def geodetic_to_ecef(lat, lon, alt):
    lat_r = math.radians(lat)
    lon_r = math.radians(lon)
    slat, clat = math.sin(lat_r), math.cos(lat_r)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * slat * slat)
    x = (n + alt) * clat * math.cos(lon_r)
    y = (n + alt) * clat * math.sin(lon_r)
    z = (n * (1.0 - WGS84_E2) + alt) * slat
    return x, y, z


def wgs84_to_enu(fix, origin):
    """Position of ``fix`` in the ENU frame tangent at ``origin`` (meters)."""
    if not isinstance(fix, GeodeticFix):
        fix = GeodeticFix(0.0, *fix)
    x, y, z = geodetic_to_ecef(fix.lat, fix.lon, fix.alt)
    x0, y0, z0 = geodetic_to_ecef(origin.lat0, origin.lon0, origin.alt0)
    dx, dy, dz = x - x0, y - y0, z - z0

    lat_r = math.radians(origin.lat0)
    lon_r = math.radians(origin.lon0)
    slat, clat = math.sin(lat_r), math.cos(lat_r)
    slon, clon = math.sin(lon_r), math.cos(lon_r)

    east = -slon * dx + clon * dy
    north = -slat * clon * dx - slat * slon * dy + clat * dz
    up = clat * clon * dx + clat * slon * dy + slat * dz
    return east, north, up


def bearing_from_positions(p0, p1):
    """Heading of the displacement p0 -> p1 measured from +x, in [-pi, pi)."""
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("bearing undefined for coincident points")
    return wrap_angle(math.atan2(dy, dx))
