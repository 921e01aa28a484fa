"""Walker-delta shell geometry and ground-station access scheduling.

Spherical Earth, circular Keplerian orbits, no perturbations.  Positions are
Earth-centred inertial (ECI) metres; the ECI and Earth-fixed frames coincide
at t = 0.  Geometry functions take time in seconds; access windows are kept
in integer nanoseconds to match the simulator clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import olc
from .grid import GridCoord, GridDims

R_EARTH = 6_378_137.0
MU_EARTH = 3.986004418e14
OMEGA_EARTH = 7.2921159e-5
SPEED_OF_LIGHT = 299_792_458.0
NS = 1_000_000_000


class ScheduleGapError(RuntimeError):
    """No satellite is visible from a site over some interval."""

    def __init__(self, site: "GroundSite", t_from: float, t_to: float):
        super().__init__(
            f"no satellite above {site.min_elevation} deg from ({site.lat}, {site.lon}) "
            f"between t={t_from:.3f}s and t={t_to:.3f}s"
        )
        self.t_from = t_from
        self.t_to = t_to


@dataclass(frozen=True)
class ShellConfig:
    planes: int = 72
    sats_per_plane: int = 22
    inclination: float = 53.0
    altitude: float = 550e3
    phasing_offset: float = 0.0

    def __post_init__(self):
        if self.altitude <= 0:
            raise ValueError("altitude must be positive")
        if not 0 < self.inclination <= 90:
            raise ValueError("inclination must be in (0, 90] degrees")
        self.dims.validate()

    @property
    def dims(self) -> GridDims:
        return GridDims(self.planes, self.sats_per_plane)

    @property
    def radius(self) -> float:
        return R_EARTH + self.altitude

    @property
    def period(self) -> float:
        return 2 * math.pi * math.sqrt(self.radius**3 / MU_EARTH)

    @property
    def mean_motion(self) -> float:
        return 2 * math.pi / self.period


@dataclass(frozen=True)
class GroundSite:
    lat: float
    lon: float
    olc_name: tuple
    min_elevation: float = 25.0

    @classmethod
    def at(cls, lat: float, lon: float, prefix: Sequence[str], min_elevation: float = 25.0) -> "GroundSite":
        code = olc.encode(lat, lon, olc.PAIR_DIGITS)
        return cls(lat, lon, (*prefix, *olc.to_name_components(code)), min_elevation)


@dataclass(frozen=True)
class SatState:
    coord: GridCoord
    position: np.ndarray
    time: float


@dataclass(frozen=True)
class AccessWindow:
    sat: GridCoord
    t_start: int
    t_end: int
    truncated: bool = False

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start


def _elements(cfg: ShellConfig):
    p = np.arange(cfg.planes)[:, None]
    i = np.arange(cfg.sats_per_plane)[None, :]
    raan = 2 * math.pi * p / cfg.planes + 0.0 * i
    u0 = 2 * math.pi * (i + cfg.phasing_offset * p) / cfg.sats_per_plane
    return raan, u0


def sat_position(cfg: ShellConfig, c: GridCoord, t: float) -> np.ndarray:
    raan = 2 * math.pi * c.plane / cfg.planes
    u = 2 * math.pi * (c.index + cfg.phasing_offset * c.plane) / cfg.sats_per_plane + cfg.mean_motion * t
    return _orbit_point(cfg, raan, u)


def _orbit_point(cfg, raan, u):
    inc = math.radians(cfg.inclination)
    r = cfg.radius
    cu, su, co, so = np.cos(u), np.sin(u), np.cos(raan), np.sin(raan)
    ci = math.cos(inc)
    return np.stack(
        [r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * math.sin(inc) + 0 * cu],
        axis=-1,
    )


def all_positions(cfg: ShellConfig, t: float | np.ndarray) -> np.ndarray:
    """Positions of every satellite, shape ``t.shape + (planes, sats, 3)``."""
    raan, u0 = _elements(cfg)
    t = np.asarray(t, dtype=float)
    u = u0 + cfg.mean_motion * t[..., None, None]
    return _orbit_point(cfg, raan, u)


def site_position(site: GroundSite, t: float | np.ndarray) -> np.ndarray:
    lat = math.radians(site.lat)
    theta = math.radians(site.lon) + OMEGA_EARTH * np.asarray(t, dtype=float)
    return np.stack(
        [R_EARTH * math.cos(lat) * np.cos(theta), R_EARTH * math.cos(lat) * np.sin(theta),
         R_EARTH * math.sin(lat) + 0 * theta],
        axis=-1,
    )


def elevation(site: GroundSite, pos: np.ndarray, t: float) -> np.ndarray | float:
    """Topocentric elevation in degrees of ECI ``pos`` (shape ``(..., 3)``) at time ``t``."""
    s = site_position(site, t)
    rel = np.asarray(pos, dtype=float) - s
    sin_el = (rel @ (s / R_EARTH)) / np.linalg.norm(rel, axis=-1)
    el = np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))
    return float(el) if np.ndim(el) == 0 else el


def slant_range(site: GroundSite, pos: np.ndarray, t: float) -> float:
    return float(np.linalg.norm(np.asarray(pos) - site_position(site, t)))


def _elevation_grid(site: GroundSite, cfg: ShellConfig, t: float | np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    pos = all_positions(cfg, t)
    s = site_position(site, t)[..., None, None, :]
    rel = pos - s
    up = s / R_EARTH
    sin_el = np.sum(rel * up, axis=-1) / np.linalg.norm(rel, axis=-1)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def visible_set(site: GroundSite, cfg: ShellConfig, t: float) -> set[GridCoord]:
    el = _elevation_grid(site, cfg, t)
    return {GridCoord(int(p), int(i)) for p, i in zip(*np.nonzero(el >= site.min_elevation))}


def link_delay(a: np.ndarray, b: np.ndarray) -> float:
    """One-way propagation delay in seconds between two points."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))) / SPEED_OF_LIGHT


class _Visibility:
    """1 s sampled visibility of every satellite, with sub-sample refinement."""

    def __init__(self, site: GroundSite, cfg: ShellConfig, horizon: float, step: float = 1.0, chunk: int = 256):
        self.site, self.cfg, self.step = site, cfg, step
        n = int(math.ceil(horizon / step)) + 1
        self.times = np.arange(n) * step
        vis = np.empty((n, cfg.planes * cfg.sats_per_plane), dtype=bool)
        for k in range(0, n, chunk):
            el = _elevation_grid(site, cfg, self.times[k : k + chunk])
            vis[k : k + chunk] = (el >= site.min_elevation).reshape(el.shape[0], -1)
        self.vis = vis

    def elev(self, k: int, t: float) -> float:
        c = GridCoord(*divmod(k, self.cfg.sats_per_plane))
        return elevation(self.site, sat_position(self.cfg, c, t), t)

    def visible_at(self, t: float) -> list[int]:
        el = _elevation_grid(self.site, self.cfg, t).ravel()
        return [int(k) for k in np.nonzero(el >= self.site.min_elevation)[0]]

    def set_time(self, k: int, t: float, horizon: float) -> float:
        """Last instant >= t at which satellite k is still above the mask."""
        j = int(math.floor(t / self.step)) + 1
        col = self.vis[j:, k]
        off = np.argmin(col) if col.size else 0
        if col.size == 0 or col[off]:
            return horizon
        hi = (j + off) * self.step
        lo = max(t, hi - self.step)
        mask = self.site.min_elevation
        if self.elev(k, lo) < mask:
            return t
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.elev(k, mid) >= mask:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-10:
                break
        return lo

    def rise_time(self, t: float, horizon: float) -> float | None:
        j = int(math.floor(t / self.step)) + 1
        rows = np.nonzero(self.vis[j:].any(axis=1))[0]
        return None if rows.size == 0 else min(horizon, (j + rows[0]) * self.step)


def access_schedule(
    site: GroundSite,
    cfg: ShellConfig,
    horizon: int,
    policy: str = "max-remaining",
    allow_gaps: bool = False,
) -> list[AccessWindow]:
    """Single-satellite tracking schedule over ``[0, horizon]`` ns.

    ``max-remaining``: at every switch take the visible satellite that stays
    above the mask longest.  ``max-elevation``: take the highest one.
    Windows abut; the last one may be cut by the horizon (``truncated``).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if policy not in ("max-remaining", "max-elevation"):
        raise ValueError(f"unknown policy {policy!r}")
    h = horizon / NS
    vis = _Visibility(site, cfg, h)
    windows: list[AccessWindow] = []
    t_ns = 0
    while t_ns < horizon:
        t = t_ns / NS
        cands = vis.visible_at(t)
        if not cands:
            nxt = vis.rise_time(t, h)
            if not allow_gaps:
                raise ScheduleGapError(site, t, h if nxt is None else nxt)
            if nxt is None:
                break
            t_ns = max(t_ns + 1, int(nxt * NS))
            continue
        if policy == "max-remaining":
            ends = {k: vis.set_time(k, t, h) for k in cands}
            k = max(cands, key=lambda k: (ends[k], -k))
        else:
            k = max(cands, key=lambda k: (vis.elev(k, t), -k))
            ends = {k: vis.set_time(k, t, h)}
        end_ns = min(horizon, int(math.floor(ends[k] * NS)))
        if end_ns <= t_ns:
            end_ns = t_ns + 1
        sat = GridCoord(*divmod(k, cfg.sats_per_plane))
        windows.append(AccessWindow(sat, t_ns, end_ns, truncated=end_ns >= horizon))
        t_ns = end_ns
    return windows


def window_at(schedule: Sequence[AccessWindow], t: int) -> AccessWindow | None:
    for w in schedule:
        if w.t_start <= t < w.t_end:
            return w
    return None


class Ephemeris:
    """Scalar, allocation-free position lookups for the event loop."""

    def __init__(self, cfg: ShellConfig):
        self.cfg = cfg
        inc = math.radians(cfg.inclination)
        self._ci, self._si = math.cos(inc), math.sin(inc)
        self._r = cfg.radius
        self._n = cfg.mean_motion
        self._planes = [
            (math.cos(2 * math.pi * p / cfg.planes), math.sin(2 * math.pi * p / cfg.planes))
            for p in range(cfg.planes)
        ]
        self._u0 = [
            [2 * math.pi * (i + cfg.phasing_offset * p) / cfg.sats_per_plane for i in range(cfg.sats_per_plane)]
            for p in range(cfg.planes)
        ]

    def sat(self, c: GridCoord, t: float) -> tuple[float, float, float]:
        co, so = self._planes[c[0]]
        u = self._u0[c[0]][c[1]] + self._n * t
        cu, su = math.cos(u), math.sin(u)
        r = self._r
        return (r * (co * cu - so * su * self._ci), r * (so * cu + co * su * self._ci), r * su * self._si)

    def isl_delay_fn(self, a: GridCoord, b: GridCoord):
        """Delay ``f(now_ns) -> ns`` of the link between two satellites.

        With equal arguments of latitude the chord length only depends on
        the common argument of latitude ``u``:
        ``|a - b| = r * sqrt(2 (1 - cos dRAAN) (1 - sin^2 i sin^2 u))``.
        """
        u0a, u0b = self._u0[a[0]][a[1]], self._u0[b[0]][b[1]]
        if abs(math.remainder(u0a - u0b, 2 * math.pi)) > 1e-12:
            def general(now: int) -> int:
                t = now / NS
                return self.delay_ns(self.sat(a, t), self.sat(b, t))
            return general
        co = self._planes[a[0]][0] * self._planes[b[0]][0] + self._planes[a[0]][1] * self._planes[b[0]][1]
        scale = self._r * math.sqrt(max(0.0, 2 * (1 - co))) / SPEED_OF_LIGHT * NS
        si2, n, sin = self._si**2, self._n / NS, math.sin

        def same_phase(now: int) -> int:
            s = sin(u0a + n * now)
            return int(round(scale * math.sqrt(1 - si2 * s * s)))

        return same_phase

    @staticmethod
    def site(site: GroundSite, t: float) -> tuple[float, float, float]:
        lat = math.radians(site.lat)
        theta = math.radians(site.lon) + OMEGA_EARTH * t
        return (R_EARTH * math.cos(lat) * math.cos(theta), R_EARTH * math.cos(lat) * math.sin(theta),
                R_EARTH * math.sin(lat))

    @staticmethod
    def delay_ns(a, b) -> int:
        return int(round(math.dist(a, b) / SPEED_OF_LIGHT * NS))
