"""Scenario configuration: JSON schema, defaults and validation.

A scenario file is one JSON object.  Every key is optional; missing keys
take the defaults below (the 72x22 shell at 53 deg / 550 km with both
gateways at 42 N, 5300 km apart)::

    {
      "prefix": "/sat",
      "shell": {"planes": 72, "sats_per_plane": 22, "inclination": 53.0,
                "altitude": 550000.0, "phasing_offset": 0.0},
      "min_elevation": 25.0,
      "policy": "max-remaining",
      "consumer_gateway": {"lat": 42.0, "lon": 57.107326},
      "producer_gateway": {"lat": 42.0, "lon": -8.687812},
      "registry": {"/prod": "producer"},
      "protocol": {"H": 0.5, "timeout": 1.0, "freshness_cap": 30.0,
                   "pacing": 0.0, "data_freshness": 10.0,
                   "cache_data": true, "cs_capacity": 10000},
      "traffic": {"prefix": "/prod/data", "rate": 100, "start": 0.0, "duration": null},
      "links": {"isl_rate": 1e9, "ground_rate": 1e9,
                "interest_size": 100, "data_size": 1100},
      "duration": 10000.0,
      "seed": 1,
      "output": {"trace_kinds": "protocol"}
    }

Times are in seconds.  ``protocol.H`` may be a number or a list (sweeps).
Registry values are either ``"producer"`` or an explicit gateway name URI.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from ..constellation import R_EARTH, GroundSite, ShellConfig
from ..mobility import RegistryTable
from ..ndn import name_from_uri

NS = 1_000_000_000

PRODUCER_LAT = 42.0
PRODUCER_LON = -8.687812
GATEWAY_SEPARATION_M = 5300e3


def lon_at_distance(lat: float, lon: float, distance: float) -> float:
    """Longitude east of ``lon`` at great-circle ``distance`` along latitude ``lat``."""
    phi = math.radians(lat)
    c = (math.cos(distance / R_EARTH) - math.sin(phi) ** 2) / math.cos(phi) ** 2
    return lon + math.degrees(math.acos(max(-1.0, min(1.0, c))))


DEFAULTS: dict[str, Any] = {
    "prefix": "/sat",
    "shell": {"planes": 72, "sats_per_plane": 22, "inclination": 53.0, "altitude": 550e3, "phasing_offset": 0.0},
    "min_elevation": 25.0,
    "policy": "max-remaining",
    "consumer_gateway": {
        "lat": PRODUCER_LAT,
        "lon": round(lon_at_distance(PRODUCER_LAT, PRODUCER_LON, GATEWAY_SEPARATION_M), 6),
    },
    "producer_gateway": {"lat": PRODUCER_LAT, "lon": PRODUCER_LON},
    "registry": {"/prod": "producer"},
    "protocol": {
        "H": 0.5,
        "timeout": 1.0,
        "freshness_cap": 30.0,
        "pacing": 0.0,
        "data_freshness": 10.0,
        "cache_data": True,
        "cs_capacity": 10_000,
    },
    "traffic": {"prefix": "/prod/data", "rate": 100.0, "start": 0.0, "duration": None},
    "links": {"isl_rate": 1e9, "ground_rate": 1e9, "interest_size": 100, "data_size": 1100},
    "duration": 10_000.0,
    "seed": 1,
    "output": {"trace_kinds": "protocol"},
}

DEFAULT_H_GRID = (0.0, 0.1, 0.25, 0.5, 1.0, 2.0)
POLICIES = ("max-remaining", "max-elevation")


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown configuration key {k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k != "registry":
            out[k] = _merge(base[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _ns(seconds: float) -> int:
    return int(round(seconds * NS))


@dataclass
class Scenario:
    raw: dict
    prefix: tuple
    shell: ShellConfig
    consumer: GroundSite
    producer: GroundSite
    registry: RegistryTable
    H: list[int]
    timeout: int
    freshness_cap: int
    pacing: int
    data_freshness: int
    cache_data: bool
    cs_capacity: int
    traffic_prefix: tuple
    rate: float
    traffic_start: int
    traffic_stop: int
    duration: int
    isl_rate: float
    ground_rate: float
    interest_size: int
    data_size: int
    seed: int
    policy: str
    trace_kinds: Any = "protocol"

    @property
    def handover(self) -> int:
        if len(self.H) != 1:
            raise ConfigError("scenario carries several H values; pick one with with_H()")
        return self.H[0]

    def with_H(self, h_seconds: float) -> "Scenario":
        return from_dict(_merge(self.raw, {"protocol": {"H": h_seconds}}))

    def override(self, **changes) -> "Scenario":
        """Return a copy with nested fields replaced, e.g. ``override(traffic={"rate": 10})``."""
        return from_dict(_merge(self.raw, changes))

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def from_dict(cfg: dict) -> Scenario:
    raw = _merge(DEFAULTS, cfg)
    try:
        prefix = name_from_uri(raw["prefix"])
        shell = ShellConfig(**raw["shell"])
        mask = float(raw["min_elevation"])
        cg, pg = raw["consumer_gateway"], raw["producer_gateway"]
        consumer = GroundSite.at(float(cg["lat"]), float(cg["lon"]), prefix, mask)
        producer = GroundSite.at(float(pg["lat"]), float(pg["lon"]), prefix, mask)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    registry = RegistryTable()
    if not isinstance(raw["registry"], dict) or not raw["registry"]:
        raise ConfigError("registry must map at least one content prefix to a gateway")
    for content, gw in raw["registry"].items():
        try:
            gw_name = producer.olc_name if gw == "producer" else name_from_uri(gw)
            registry.add(name_from_uri(content), gw_name)
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad registry entry {content!r}: {exc}") from exc
        if tuple(gw_name) != tuple(producer.olc_name):
            raise ConfigError(f"registry entry {content!r} names {gw}, not the producer gateway")

    proto = raw["protocol"]
    hs = proto["H"] if isinstance(proto["H"], list) else [proto["H"]]
    if not hs or any(float(h) < 0 for h in hs):
        raise ConfigError("protocol.H must be non-negative")
    duration = float(raw["duration"])
    if duration <= 0:
        raise ConfigError("duration must be positive")
    tr = raw["traffic"]
    start = float(tr["start"])
    stop = duration if tr["duration"] is None else min(duration, start + float(tr["duration"]))
    if float(tr["rate"]) <= 0 or stop <= start:
        raise ConfigError("traffic must have a positive rate and a non-empty interval")
    try:
        traffic_prefix = name_from_uri(tr["prefix"])
        registry.lookup(traffic_prefix)
    except (LookupError, ValueError) as exc:
        raise ConfigError(f"traffic prefix {tr['prefix']} is not in the registry") from exc
    if float(proto["timeout"]) <= 0:
        raise ConfigError("protocol.timeout must be positive")
    if raw["policy"] not in POLICIES:
        raise ConfigError(f"policy must be one of {', '.join(POLICIES)}")

    links = raw["links"]
    return Scenario(
        raw=raw,
        prefix=prefix,
        shell=shell,
        consumer=consumer,
        producer=producer,
        registry=registry,
        H=sorted(_ns(float(h)) for h in hs),
        timeout=_ns(float(proto["timeout"])),
        freshness_cap=_ns(float(proto["freshness_cap"])),
        pacing=_ns(float(proto["pacing"])),
        data_freshness=_ns(float(proto["data_freshness"])),
        cache_data=bool(proto["cache_data"]),
        cs_capacity=int(proto["cs_capacity"]),
        traffic_prefix=traffic_prefix,
        rate=float(tr["rate"]),
        traffic_start=_ns(start),
        traffic_stop=_ns(stop),
        duration=_ns(duration),
        isl_rate=float(links["isl_rate"]),
        ground_rate=float(links["ground_rate"]),
        interest_size=int(links["interest_size"]),
        data_size=int(links["data_size"]),
        seed=int(raw["seed"]),
        policy=str(raw["policy"]),
        trace_kinds=raw["output"]["trace_kinds"],
    )


def load(path: str | Path, overrides: Optional[dict] = None) -> Scenario:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("scenario file must hold a JSON object")
    if overrides:
        cfg = _merge(_merge(DEFAULTS, cfg), overrides)
    return from_dict(cfg)


def default_scenario(**changes) -> Scenario:
    return from_dict(changes)


def smoke(**changes) -> Scenario:
    """Small 8x8 instance that runs in seconds."""
    base = {
        "shell": {"planes": 8, "sats_per_plane": 8, "inclination": 53.0, "altitude": 1000e3},
        "min_elevation": 30.0,
        "duration": 600.0,
        "traffic": {"rate": 10.0},
    }
    return from_dict(_merge(_merge(DEFAULTS, base), changes))
