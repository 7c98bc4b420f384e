"""Domain types shared by every module: queries, POIs, trajectories, plans.

All times are integer minutes since local midnight (no dates, no time zones);
POI identity is the exact name string, matched case-sensitively. Every type is
an immutable value object and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Mapping

if TYPE_CHECKING:
    from .judge import Verdict

MINUTES_PER_DAY = 1440


class ConstraintKind(Enum):
    GENERIC = "generic"
    SEASON = "season"
    HOLIDAY = "holiday"
    POI_CATEGORY = "poi_category"
    TRAVELER_CATEGORY = "traveler_category"
    TRIP_COMPACTNESS = "trip_compactness"


@dataclass(frozen=True)
class TimeWindow:
    """Clock-time interval in minutes since midnight, closed-open [start, end).

    A window with ``wraps_midnight`` covers [start, 1440) plus [0, end).
    The all-day window is [0, 1440].
    """

    start: int
    end: int
    wraps_midnight: bool = False

    def __post_init__(self) -> None:
        for name, v in (("start", self.start), ("end", self.end)):
            if not 0 <= v <= MINUTES_PER_DAY:
                raise ValueError(f"TimeWindow.{name} must be in [0, {MINUTES_PER_DAY}], got {v}")
        if not self.wraps_midnight and self.start > self.end:
            raise ValueError(f"non-wrapping TimeWindow must have start <= end, got {self.start} > {self.end}")

    @property
    def is_all_day(self) -> bool:
        return not self.wraps_midnight and self.start == 0 and self.end == MINUTES_PER_DAY

    def contains(self, minute: int) -> bool:
        """Whether a clock minute falls inside the window (start inclusive, end exclusive)."""
        if self.wraps_midnight:
            return minute >= self.start or minute < self.end
        if self.is_all_day:
            return 0 <= minute <= MINUTES_PER_DAY
        return self.start <= minute < self.end


ALL_DAY = TimeWindow(0, MINUTES_PER_DAY)


@dataclass(frozen=True)
class Query:
    """Natural-language travel request: city, number of days and an optional soft constraint."""

    id: str
    city: str
    duration_days: int
    constraint_kind: ConstraintKind
    constraint_text: str | None
    text: str

    def __post_init__(self) -> None:
        if self.duration_days < 1:
            raise ValueError(f"duration_days must be >= 1, got {self.duration_days}")
        generic = self.constraint_kind is ConstraintKind.GENERIC
        if generic and self.constraint_text is not None:
            raise ValueError("generic queries must not carry constraint_text")
        if not generic and self.constraint_text is None:
            raise ValueError(f"{self.constraint_kind.value} queries require constraint_text")


@dataclass(frozen=True)
class Poi:
    """Attraction with spatial, temporal and semantic attributes.

    ``recommended_visit`` is None when no recommendation exists; an all-day
    window means "any time is fine".
    """

    name: str
    address: str
    lat: float
    lon: float
    opening_hours: TimeWindow
    recommended_visit: TimeWindow | None
    expected_duration_h: float
    description: str

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon out of range: {self.lon}")
        if self.expected_duration_h <= 0:
            raise ValueError(f"expected_duration_h must be positive, got {self.expected_duration_h}")


@dataclass(frozen=True)
class Trajectory:
    """Ordered POI-name reference itinerary; the flattened order is the visiting sequence."""

    days: tuple[tuple[str, ...], ...]
    remarks: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.days) < 1:
            raise ValueError("trajectory needs at least one day")
        object.__setattr__(self, "days", tuple(tuple(d) for d in self.days))
        object.__setattr__(self, "remarks", dict(self.remarks))

    @property
    def sequence(self) -> tuple[str, ...]:
        return tuple(name for day in self.days for name in day)

    def __len__(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True)
class PlanEntry:
    """One scheduled visit: POI name plus start/end minutes within the day."""

    poi_name: str
    start: int
    end: int


@dataclass(frozen=True)
class Plan:
    """Day-partitioned schedule of POI visits."""

    days: tuple[tuple[PlanEntry, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "days", tuple(tuple(d) for d in self.days))

    def entries(self) -> Iterator[tuple[int, int, PlanEntry]]:
        """Yield (day_index, entry_index, entry) in schedule order."""
        for di, day in enumerate(self.days):
            for ei, entry in enumerate(day):
                yield di, ei, entry

    def poi_names(self) -> list[str]:
        return [e.poi_name for _, _, e in self.entries()]

    def visit_sequence(self) -> tuple[str, ...]:
        """POI names in first-occurrence order, duplicates dropped."""
        seen: dict[str, None] = {}
        for name in self.poi_names():
            seen.setdefault(name)
        return tuple(seen)

    @property
    def n_entries(self) -> int:
        return sum(len(d) for d in self.days)


@dataclass(frozen=True)
class DatasetInstance:
    """One benchmark case: query, candidate POIs, reference trajectories, leaderboard.

    Trajectory POI names are allowed to fall outside the candidate set; such
    names model retrieval noise and surface through the failure-rate metric.
    """

    query: Query
    candidates: tuple[Poi, ...]
    trajectories: tuple[Trajectory, ...]
    leaderboard: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "leaderboard", tuple(self.leaderboard))
        names = [p.name for p in self.candidates]
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate candidate POI names: {dupes}")
        known = set(names)
        unknown = [n for n in self.leaderboard if n not in known]
        if unknown:
            raise ValueError(f"leaderboard names not in candidates: {unknown}")
        object.__setattr__(self, "_by_name", {p.name: p for p in self.candidates})

    def poi(self, name: str) -> Poi | None:
        """Resolve a POI by exact name; None for hallucinated names."""
        return self._by_name.get(name)  # type: ignore[attr-defined]

    def poi_remarks(self, name: str) -> str:
        """All trajectory remarks recorded for a POI, joined."""
        parts = [t.remarks[name] for t in self.trajectories if name in t.remarks]
        return " ".join(parts)


class ViolationKind(Enum):
    OUT_OF_RANGE = "out_of_range"
    ZERO_DURATION = "zero_duration"
    INVERTED = "inverted"
    OUT_OF_ORDER = "out_of_order"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class Violation:
    day: int
    index: int
    kind: ViolationKind


def validate_plan(plan: Plan, instance: DatasetInstance | None = None) -> list[Violation]:
    """Check structural plan invariants; violations are data, not errors.

    Within each day entries must be sorted by start, every entry must satisfy
    start < end, times must stay inside [0, 1440] (no day schedules past
    midnight) and entries must not overlap. The instance argument is accepted
    for signature stability; name resolution is a metric concern, not a
    structural one.
    """
    violations: list[Violation] = []
    for di, day in enumerate(plan.days):
        prev_start = None
        prev_end = None
        for ei, entry in enumerate(day):
            if not (0 <= entry.start <= MINUTES_PER_DAY and 0 <= entry.end <= MINUTES_PER_DAY):
                violations.append(Violation(di, ei, ViolationKind.OUT_OF_RANGE))
                continue
            if entry.start == entry.end:
                violations.append(Violation(di, ei, ViolationKind.ZERO_DURATION))
            elif entry.start > entry.end:
                violations.append(Violation(di, ei, ViolationKind.INVERTED))
            if prev_start is not None and entry.start < prev_start:
                violations.append(Violation(di, ei, ViolationKind.OUT_OF_ORDER))
            if prev_end is not None and entry.start < prev_end:
                violations.append(Violation(di, ei, ViolationKind.OVERLAP))
            prev_start = entry.start
            prev_end = max(entry.end, prev_end) if prev_end is not None else entry.end
    return violations


METRIC_KEYS = ("fr", "rr", "dmr", "dur", "tbr", "str", "pp", "pr", "tsr")


@dataclass(frozen=True)
class EvaluationReport:
    """Per-plan metric values (percent) plus flags and per-entry judge verdicts."""

    failure_rate: float
    repetition_rate: float
    distance_margin: float
    duration_underflow: float
    time_buffer: float
    start_rationality: float
    popularity: float
    poi_relevance: float
    schedule_relevance: float
    flags: tuple[str, ...] = ()
    verdicts: Mapping[str, tuple["Verdict", ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "flags", tuple(self.flags))
        object.__setattr__(self, "verdicts", {k: tuple(v) for k, v in self.verdicts.items()})
        rates = {
            "fr": self.failure_rate,
            "rr": self.repetition_rate,
            "dur": self.duration_underflow,
            "tbr": self.time_buffer,
            "str": self.start_rationality,
            "pp": self.popularity,
            "pr": self.poi_relevance,
            "tsr": self.schedule_relevance,
        }
        for key, value in rates.items():
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{key} must lie in [0, 100], got {value}")
        if self.distance_margin < 0.0:
            raise ValueError(f"dmr must be nonnegative, got {self.distance_margin}")

    def value(self, key: str) -> float:
        return self.values()[key]

    def values(self) -> dict[str, float]:
        """Metric values keyed by the short wire names (fr..tsr)."""
        return {
            "fr": self.failure_rate,
            "rr": self.repetition_rate,
            "dmr": self.distance_margin,
            "dur": self.duration_underflow,
            "tbr": self.time_buffer,
            "str": self.start_rationality,
            "pp": self.popularity,
            "pr": self.poi_relevance,
            "tsr": self.schedule_relevance,
        }
