"""Torus grid of inter-satellite links and Interest dissemination.

Satellite ``(plane, index)`` has four stable links: Fore/Aft to the next and
previous satellite in its plane, Starboard/Port to the same index in the
next and previous plane.  Hop distance is the 1-norm with wrap-around.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence


class GridDims(NamedTuple):
    planes: int
    sats_per_plane: int

    def validate(self) -> None:
        if self.planes < 3 or self.sats_per_plane < 3:
            raise ValueError(f"grid must be at least 3x3, got {self.planes}x{self.sats_per_plane}")

    def coords(self) -> Iterable["GridCoord"]:
        for p in range(self.planes):
            for i in range(self.sats_per_plane):
                yield GridCoord(p, i)

    @property
    def size(self) -> int:
        return self.planes * self.sats_per_plane


class GridCoord(NamedTuple):
    plane: int
    index: int

    def check(self, dims: GridDims) -> None:
        if not (0 <= self.plane < dims.planes and 0 <= self.index < dims.sats_per_plane):
            raise ValueError(f"{self} outside {dims.planes}x{dims.sats_per_plane} grid")


class Direction(enum.IntEnum):
    FORE = 0
    AFT = 1
    PORT = 2
    STARBOARD = 3

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]


_OPPOSITE = {
    Direction.FORE: Direction.AFT,
    Direction.AFT: Direction.FORE,
    Direction.PORT: Direction.STARBOARD,
    Direction.STARBOARD: Direction.PORT,
}

# (plane step, index step) per direction, in the fixed tie-break order F, A, P, S.
_STEP = ((0, 1), (0, -1), (-1, 0), (1, 0))
DIRECTIONS = tuple(Direction)


def _axis(delta: int, n: int) -> int:
    delta %= n
    return min(delta, n - delta)


def torus_distance(a: GridCoord, b: GridCoord, dims: GridDims) -> int:
    a.check(dims)
    b.check(dims)
    return _axis(a[0] - b[0], dims[0]) + _axis(a[1] - b[1], dims[1])


def neighbor(c: GridCoord, d: Direction, dims: GridDims) -> GridCoord:
    dp, di = _STEP[d]
    return GridCoord((c[0] + dp) % dims[0], (c[1] + di) % dims[1])


def progress_directions(current: GridCoord, target: GridCoord, dims: GridDims) -> list[Direction]:
    """Directions whose neighbor is strictly closer to ``target``."""
    here = torus_distance(current, target, dims)
    return [h for h in DIRECTIONS if torus_distance(neighbor(current, h, dims), target, dims) < here]


@dataclass
class DisseminationPlan:
    subsets: dict[Direction, tuple[GridCoord, ...]] = field(default_factory=dict)
    local: bool = False

    def __getitem__(self, d: Direction) -> tuple[GridCoord, ...]:
        return self.subsets.get(d, ())

    def directions(self) -> list[Direction]:
        return [h for h in DIRECTIONS if self.subsets.get(h)]

    @property
    def link_count(self) -> int:
        return len(self.directions())


def _remove_redundant(sets: list[set], order: Sequence[int]) -> list[set]:
    sets = [set(s) for s in sets]
    for h in order:
        others = set().union(*(sets[k] for k in range(4) if k != h))
        if sets[h] <= others:
            sets[h] = set()
    return sets


@lru_cache(maxsize=1 << 16)
def _plan(current: GridCoord, delegations: tuple[GridCoord, ...], dims: GridDims):
    sets: list[set] = [set(), set(), set(), set()]
    for d in delegations:
        for h in progress_directions(current, d, dims):
            sets[h].add(d)

    # The fixed F,A,P,S scan can leave an irredundant but non-minimum cover;
    # among scan orders, take the first that reaches the minimum link count.
    best = None
    for order in itertools.permutations(range(4)):
        cand = _remove_redundant(sets, order)
        used = sum(1 for s in cand if s)
        if best is None or used < best[0]:
            best = (used, cand)
        if used <= 1:
            break
    sets = best[1]

    for d in delegations:
        holders = [h for h in range(4) if d in sets[h]]
        if len(holders) > 1:
            keep = max(holders, key=lambda h: (len(sets[h]), -h))
            for h in holders:
                if h != keep:
                    sets[h].discard(d)

    return tuple(tuple(sorted(s)) for s in sets)


def disseminate(
    current: GridCoord, delegations: Iterable[GridCoord], dims: GridDims
) -> DisseminationPlan:
    """Split a delegation set over the four outgoing links.

    Each delegation other than ``current`` goes to exactly one direction
    whose neighbor is strictly closer to it, using as few links as possible.
    ``current`` itself is dropped from the plan and sets ``local``.
    """
    delegations = sorted(set(delegations))
    if not delegations:
        raise ValueError("empty delegation set")
    current.check(dims)
    for d in delegations:
        d.check(dims)
    local = current in delegations
    remote = tuple(d for d in delegations if d != current)
    if not remote:
        return DisseminationPlan({}, local)
    subsets = _plan(current, remote, dims)
    return DisseminationPlan({h: subsets[h] for h in DIRECTIONS if subsets[h]}, local)


def sat_name(prefix: Sequence[str], c: GridCoord) -> tuple[str, ...]:
    return (*prefix, str(c[0]), str(c[1]))


def parse_sat_name(name: Sequence[str], prefix: Sequence[str], dims: GridDims) -> GridCoord | None:
    """Return the coordinate a satellite name refers to, else None.

    A satellite name is the constellation prefix followed by exactly two
    decimal components within the grid dimensions.
    """
    n = len(prefix)
    if len(name) != n + 2 or tuple(name[:n]) != tuple(prefix):
        return None
    p, i = name[n], name[n + 1]
    if not (p.isdigit() and i.isdigit()):
        return None
    c = GridCoord(int(p), int(i))
    if c.plane >= dims.planes or c.index >= dims.sats_per_plane:
        return None
    return c


def plan_to_hints(
    plan: DisseminationPlan, pgw_name: Sequence[str] | None, prefix: Sequence[str]
) -> dict[Direction, tuple[tuple[str, ...], ...]]:
    """Forwarding hint for each Interest copy: its delegations plus the P-Gw name."""
    hints = {}
    for h in plan.directions():
        names = [sat_name(prefix, c) for c in plan[h]]
        if pgw_name is not None:
            names.append(tuple(pgw_name))
        hints[h] = tuple(names)
    return hints
