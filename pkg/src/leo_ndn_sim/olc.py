"""Open Location Code (plus code) encoding and gateway naming.

Gateways are named ``<sat_prefix>/<pair>/<pair>/...`` where the pairs are
the significant digits of the plus code of the gateway's location.  A name
made of fewer pairs addresses the enclosing (coarser) area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

ALPHABET = "23456789CFGHJMPQRVWX"
SEPARATOR = "+"
SEPARATOR_POSITION = 8
PADDING = "0"
BASE = 20
PAIR_DIGITS = 10
GRID_ROWS = 5
GRID_COLUMNS = 4
MAX_DIGITS = 12

_DIGIT_VALUE = {c: i for i, c in enumerate(ALPHABET)}

# Integer resolution of the finest supported cell, in cells per degree.
_LAT_UNITS = BASE**3 * GRID_ROWS ** (MAX_DIGITS - PAIR_DIGITS)
_LON_UNITS = BASE**3 * GRID_COLUMNS ** (MAX_DIGITS - PAIR_DIGITS)


class OLCError(ValueError):
    """Raised for malformed codes or invalid encoding parameters."""


@dataclass(frozen=True)
class GeoBox:
    lat_lo: float
    lat_hi: float
    lon_lo: float
    lon_hi: float

    @property
    def center(self) -> tuple[float, float]:
        return (self.lat_lo + self.lat_hi) / 2, (self.lon_lo + self.lon_hi) / 2

    @property
    def height(self) -> float:
        return self.lat_hi - self.lat_lo

    @property
    def width(self) -> float:
        return self.lon_hi - self.lon_lo

    def contains(self, lat: float, lon: float) -> bool:
        lon = normalize_longitude(lon)
        return self.lat_lo <= lat <= self.lat_hi and self.lon_lo <= lon <= self.lon_hi

    def within(self, other: "GeoBox") -> bool:
        return (
            other.lat_lo <= self.lat_lo
            and self.lat_hi <= other.lat_hi
            and other.lon_lo <= self.lon_lo
            and self.lon_hi <= other.lon_hi
        )


@dataclass(frozen=True)
class PlusCode:
    code: str
    significant_length: int

    def __str__(self) -> str:
        return self.code

    @classmethod
    def parse(cls, code: str) -> "PlusCode":
        code = code.upper()
        return cls(code, _validate(code))


def normalize_longitude(lon: float) -> float:
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0:
        lon += 360.0
    return lon - 180.0


def _check_length(length: int) -> None:
    if length < 2 or length > MAX_DIGITS or length % 2:
        raise OLCError(f"significant length must be even and in [2, {MAX_DIGITS}], got {length}")


def lat_cell_height(length: int) -> float:
    """Height in degrees of a cell with ``length`` significant digits."""
    if length <= PAIR_DIGITS:
        return float(BASE) ** (2 - length // 2)
    return BASE**-3 / GRID_ROWS ** (length - PAIR_DIGITS)


def encode(lat: float, lon: float, significant_length: int = PAIR_DIGITS) -> PlusCode:
    _check_length(significant_length)
    if not -90.0 <= lat <= 90.0:
        raise OLCError(f"latitude out of range: {lat}")
    lon = normalize_longitude(lon)
    if lat == 90.0:
        lat -= lat_cell_height(significant_length)

    # Rounding to 1e-6 units first absorbs binary representation noise.
    lat_val = int(round((lat + 90.0) * _LAT_UNITS, 6))
    lon_val = int(round((lon + 180.0) * _LON_UNITS, 6)) % (360 * _LON_UNITS)
    # Values that round up to the north pole belong to the top row.
    lat_val = min(lat_val, 180 * _LAT_UNITS - 1)

    grid = ""
    for _ in range(MAX_DIGITS - PAIR_DIGITS):
        grid = ALPHABET[(lat_val % GRID_ROWS) * GRID_COLUMNS + lon_val % GRID_COLUMNS] + grid
        lat_val //= GRID_ROWS
        lon_val //= GRID_COLUMNS

    pairs = []
    for _ in range(PAIR_DIGITS // 2):
        pairs.append(ALPHABET[lat_val % BASE] + ALPHABET[lon_val % BASE])
        lat_val //= BASE
        lon_val //= BASE
    digits = ("".join(reversed(pairs)) + grid)[:significant_length]

    if significant_length < SEPARATOR_POSITION:
        code = digits + PADDING * (SEPARATOR_POSITION - significant_length) + SEPARATOR
    else:
        code = digits[:SEPARATOR_POSITION] + SEPARATOR + digits[SEPARATOR_POSITION:]
    return PlusCode(code, significant_length)


def _validate(code: str) -> int:
    """Return the number of significant digits of a full code, or raise."""
    if code.count(SEPARATOR) != 1 or code.index(SEPARATOR) != SEPARATOR_POSITION:
        raise OLCError(f"separator must appear once at position {SEPARATOR_POSITION}: {code!r}")
    head, tail = code.split(SEPARATOR)
    if PADDING in head:
        sig = head.index(PADDING)
        if sig == 0 or sig % 2 or head[sig:] != PADDING * (len(head) - sig) or tail:
            raise OLCError(f"bad padding in {code!r}")
    else:
        sig = len(head)
        if len(tail) == 1:
            raise OLCError(f"single character after separator in {code!r}")
    digits = head[:sig] + tail
    if any(c not in _DIGIT_VALUE for c in digits):
        raise OLCError(f"invalid character in {code!r}")
    if len(digits) > MAX_DIGITS or len(digits) % 2:
        raise OLCError(f"unsupported code length in {code!r}")
    if _DIGIT_VALUE[digits[0]] >= 9 or _DIGIT_VALUE[digits[1]] >= 18:
        raise OLCError(f"code outside the globe: {code!r}")
    return len(digits)


def significant_digits(code: PlusCode | str) -> str:
    if isinstance(code, str):
        code = PlusCode.parse(code)
    return code.code.replace(SEPARATOR, "")[: code.significant_length]


def decode(code: PlusCode | str) -> GeoBox:
    digits = significant_digits(code)
    lat_units = lon_units = 0
    lat_step = _LAT_UNITS * BASE**2
    lon_step = _LON_UNITS * BASE**2
    for i in range(0, min(len(digits), PAIR_DIGITS), 2):
        lat_step //= BASE
        lon_step //= BASE
        lat_units += _DIGIT_VALUE[digits[i]] * lat_step
        lon_units += _DIGIT_VALUE[digits[i + 1]] * lon_step
    for c in digits[PAIR_DIGITS:]:
        lat_step //= GRID_ROWS
        lon_step //= GRID_COLUMNS
        row, col = divmod(_DIGIT_VALUE[c], GRID_COLUMNS)
        lat_units += row * lat_step
        lon_units += col * lon_step
    return GeoBox(
        lat_lo=lat_units / _LAT_UNITS - 90.0,
        lat_hi=(lat_units + lat_step) / _LAT_UNITS - 90.0,
        lon_lo=lon_units / _LON_UNITS - 180.0,
        lon_hi=(lon_units + lon_step) / _LON_UNITS - 180.0,
    )


def to_name_components(code: PlusCode | str) -> list[str]:
    """Split the significant digits into two-character name components."""
    digits = significant_digits(code)
    return [digits[i : i + 2] for i in range(0, len(digits), 2)]


def from_name_components(components: Sequence[str]) -> PlusCode:
    digits = "".join(components).upper()
    _check_length(len(digits))
    if len(digits) < SEPARATOR_POSITION:
        code = digits + PADDING * (SEPARATOR_POSITION - len(digits)) + SEPARATOR
    else:
        code = digits[:SEPARATOR_POSITION] + SEPARATOR + digits[SEPARATOR_POSITION:]
    return PlusCode.parse(code)


def name_matches_gateway(
    requested: Sequence[str], gateway: Sequence[str], prefix: Sequence[str]
) -> bool:
    """True if the locator part of ``requested`` is a prefix of the gateway's.

    Both names must start with the constellation ``prefix``; a shorter
    requested locator addresses every gateway inside the coarser area.
    """
    n = len(prefix)
    if tuple(requested[:n]) != tuple(prefix) or tuple(gateway[:n]) != tuple(prefix):
        return False
    req, gw = tuple(requested[n:]), tuple(gateway[n:])
    return len(req) <= len(gw) and gw[: len(req)] == req
