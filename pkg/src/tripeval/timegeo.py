"""Time-spec parsing, great-circle distances and the open-path route optimum.

The route optimum is a minimum-length Hamiltonian path with free endpoints:
exact bitmask dynamic programming up to EXACT_THRESHOLD nodes, nearest
neighbor plus repeated 2-opt beyond that.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import ALL_DAY, MINUTES_PER_DAY, DatasetInstance, Plan, TimeWindow

EARTH_RADIUS_KM = 6371.0
EXACT_THRESHOLD = 13  # n^2 * 2^n DP states stay near 1e6 at 13 nodes


class MalformedTimeSpec(ValueError):
    pass


_RANGE_RE = re.compile(r"^\s*(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})\s*$")
_ALL_DAY_RE = re.compile(r"^\s*open\s+all\s+day\s*\.?\s*$", re.IGNORECASE)


def _minutes(hours: int, mins: int, text: str) -> int:
    if mins > 59 or hours > 24 or (hours == 24 and mins != 0):
        raise MalformedTimeSpec(f"invalid clock time in {text!r}")
    return hours * 60 + mins


def parse_time_spec(text: str) -> TimeWindow:
    """Parse a 24-hour "H:MM-H:MM" range; "0:00-24:00" and "Open All Day" mean all day.

    An end before the start denotes a window wrapping midnight.
    """
    if _ALL_DAY_RE.match(text):
        return ALL_DAY
    m = _RANGE_RE.match(text)
    if not m:
        raise MalformedTimeSpec(f"cannot parse time spec {text!r}")
    start = _minutes(int(m.group(1)), int(m.group(2)), text)
    end = _minutes(int(m.group(3)), int(m.group(4)), text)
    if start == 0 and end == MINUTES_PER_DAY:
        return ALL_DAY
    if end < start:
        return TimeWindow(start, end, wraps_midnight=True)
    return TimeWindow(start, end)


def format_time_spec(window: TimeWindow) -> str:
    """Canonical "H:MM-H:MM" rendering; inverse of parse_time_spec."""
    if window.is_all_day:
        return "0:00-24:00"
    return f"{window.start // 60}:{window.start % 60:02d}-{window.end // 60}:{window.end % 60:02d}"


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometers on a 6371.0 km sphere."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative pairwise distances in kilometers."""

    d: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", tuple(tuple(row) for row in self.d))
        n = len(self.d)
        for i, row in enumerate(self.d):
            if len(row) != n:
                raise ValueError(f"row {i} has length {len(row)}, expected {n}")
            if row[i] != 0.0:
                raise ValueError(f"d[{i}][{i}] must be 0, got {row[i]}")
            for j, v in enumerate(row):
                if v < 0:
                    raise ValueError(f"d[{i}][{j}] is negative")
                if v != self.d[j][i]:
                    raise ValueError(f"matrix not symmetric at ({i},{j})")

    @property
    def n(self) -> int:
        return len(self.d)

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "DistanceMatrix":
        pts = list(points)
        rows = []
        for i, (lat1, lon1) in enumerate(pts):
            row = []
            for j, (lat2, lon2) in enumerate(pts):
                row.append(0.0 if i == j else haversine_km(lat1, lon1, lat2, lon2))
            rows.append(tuple(row))
        # Re-symmetrize: haversine is symmetric, but float evaluation order is not.
        sym = [[max(rows[i][j], rows[j][i]) for j in range(len(pts))] for i in range(len(pts))]
        return cls(tuple(tuple(r) for r in sym))


def path_length(m: DistanceMatrix, order: Sequence[int]) -> float:
    return sum(m.d[order[i]][order[i + 1]] for i in range(len(order) - 1))


def _held_karp_open_path(m: DistanceMatrix) -> tuple[list[int], float]:
    """Exact shortest open path: DP over (visited subset, last node), any start."""
    n = m.n
    d = m.d
    full = (1 << n) - 1
    dp = [[math.inf] * n for _ in range(1 << n)]
    parent = [[-1] * n for _ in range(1 << n)]
    for i in range(n):
        dp[1 << i][i] = 0.0
    for mask in range(1 << n):
        row = dp[mask]
        for last in range(n):
            cost = row[last]
            if cost is math.inf:
                continue
            dl = d[last]
            for nxt in range(n):
                if mask & (1 << nxt):
                    continue
                nmask = mask | (1 << nxt)
                cand = cost + dl[nxt]
                if cand < dp[nmask][nxt]:
                    dp[nmask][nxt] = cand
                    parent[nmask][nxt] = last
    best_last = min(range(n), key=lambda i: dp[full][i])
    best = dp[full][best_last]
    order = [best_last]
    mask, last = full, best_last
    while parent[mask][last] != -1:
        prev = parent[mask][last]
        mask ^= 1 << last
        order.append(prev)
        last = prev
    order.reverse()
    return order, best


def nearest_neighbor_path(m: DistanceMatrix) -> tuple[list[int], float]:
    """Greedy open path, best over all start nodes."""
    n = m.n
    best_order: list[int] | None = None
    best_len = math.inf
    for start in range(n):
        unvisited = set(range(n))
        unvisited.discard(start)
        order = [start]
        total = 0.0
        while unvisited:
            here = order[-1]
            nxt = min(unvisited, key=lambda j: (m.d[here][j], j))
            total += m.d[here][nxt]
            order.append(nxt)
            unvisited.discard(nxt)
        if total < best_len:
            best_len = total
            best_order = order
    assert best_order is not None
    return best_order, best_len


def two_opt_path(m: DistanceMatrix, order: Sequence[int]) -> tuple[list[int], float]:
    """Repeated 2-opt segment reversal on an open path until no improvement."""
    d = m.d
    order = list(order)
    n = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                # Reversing order[i..j] touches the edges entering i and leaving j.
                before = 0.0
                after = 0.0
                if i > 0:
                    before += d[order[i - 1]][order[i]]
                    after += d[order[i - 1]][order[j]]
                if j < n - 1:
                    before += d[order[j]][order[j + 1]]
                    after += d[order[i]][order[j + 1]]
                if after + 1e-12 < before:
                    order[i:j + 1] = reversed(order[i:j + 1])
                    improved = True
    return order, path_length(m, order)


def shortest_open_path(m: DistanceMatrix) -> tuple[list[int], float]:
    """Minimum-length Hamiltonian path with free endpoints.

    Exact up to EXACT_THRESHOLD nodes; nearest neighbor refined by 2-opt
    beyond that. The returned length always equals the returned order's length.
    """
    n = m.n
    if n < 1:
        raise ValueError("need at least one node")
    if n == 1:
        return [0], 0.0
    if n <= EXACT_THRESHOLD:
        return _held_karp_open_path(m)
    order, _ = nearest_neighbor_path(m)
    return two_opt_path(m, order)


def plan_travel_km(plan: Plan, instance: DatasetInstance) -> float:
    """Total haversine distance over consecutive resolvable visits within each day.

    Entries whose POI is not in the candidate set are skipped (the leg joins
    their resolvable neighbors directly); days are never connected to each other.
    """
    total = 0.0
    for day in plan.days:
        prev = None
        for entry in day:
            poi = instance.poi(entry.poi_name)
            if poi is None:
                continue
            if prev is not None:
                total += haversine_km(prev.lat, prev.lon, poi.lat, poi.lon)
            prev = poi
    return total
