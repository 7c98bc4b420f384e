"""The nine plan-quality metrics and the dimension-rank aggregation.

Metric values are percentages. Hallucinated entries (names absent from the
candidate set) count toward the failure rate and keep their place in the
repetition and buffer metrics, but are skipped by the distance, duration,
judged and popularity metrics because no attributes exist for them.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from scipy.stats import rankdata

from .judge import Judge
from .model import METRIC_KEYS, DatasetInstance, EvaluationReport, Plan
from .timegeo import DistanceMatrix, plan_travel_km, shortest_open_path


class MetricDirection(Enum):
    LOWER_BETTER = "lower"
    HIGHER_BETTER = "higher"


DIRECTIONS: dict[str, MetricDirection] = {
    "fr": MetricDirection.LOWER_BETTER,
    "rr": MetricDirection.LOWER_BETTER,
    "dmr": MetricDirection.LOWER_BETTER,
    "dur": MetricDirection.LOWER_BETTER,
    "tbr": MetricDirection.HIGHER_BETTER,
    "str": MetricDirection.HIGHER_BETTER,
    "pp": MetricDirection.HIGHER_BETTER,
    "pr": MetricDirection.HIGHER_BETTER,
    "tsr": MetricDirection.HIGHER_BETTER,
}


class InconsistentTable(ValueError):
    pass


@dataclass(frozen=True)
class DimensionRanks:
    """Spatial, temporal, semantic and relevance rank averages plus their mean."""

    r_s: float
    r_t: float
    r_p: float
    r_r: float
    r_c: float


def failure_rate(plan: Plan, instance: DatasetInstance) -> float:
    """Percentage of plan entries whose POI name is not in the candidate set."""
    entries = plan.poi_names()
    if not entries:
        return 0.0
    missing = sum(1 for name in entries if instance.poi(name) is None)
    return 100.0 * missing / len(entries)


def repetition_rate(plan: Plan) -> float:
    """Percentage of plan entries that repeat an already-visited POI name."""
    entries = plan.poi_names()
    if not entries:
        return 0.0
    return 100.0 * (len(entries) - len(set(entries))) / len(entries)


def _distinct_resolvable(plan: Plan, instance: DatasetInstance) -> list[str]:
    seen: dict[str, None] = {}
    for name in plan.poi_names():
        if instance.poi(name) is not None:
            seen.setdefault(name)
    return list(seen)


@functools.lru_cache(maxsize=4096)
def _open_path_length(points: tuple[tuple[float, float], ...]) -> float:
    _, length = shortest_open_path(DistanceMatrix.from_points(points))
    return length


def route_optimum_km(plan: Plan, instance: DatasetInstance) -> float:
    """Length of the shortest open path over the plan's distinct resolvable POIs."""
    names = _distinct_resolvable(plan, instance)
    if not names:
        return 0.0
    pois = [instance.poi(n) for n in names]
    # The optimum only depends on the point set, so cache on its sorted form.
    return _open_path_length(tuple(sorted((p.lat, p.lon) for p in pois)))  # type: ignore[union-attr]


def _distance_margin_raw(plan: Plan, instance: DatasetInstance) -> float | None:
    """Signed margin, or None when degenerate (under two distinct resolvable
    POIs, or a zero-length optimum)."""
    if len(_distinct_resolvable(plan, instance)) < 2:
        return None
    optimum = route_optimum_km(plan, instance)
    if optimum == 0.0:
        return None
    travel = plan_travel_km(plan, instance)
    return 100.0 * (travel - optimum) / optimum


def distance_margin_ratio(plan: Plan, instance: DatasetInstance) -> float:
    """Percent excess of the plan's travel distance over the route optimum.

    The optimum is one open path over all distinct resolvable POIs, ignoring
    day boundaries; with fewer than two such POIs, or all of them co-located,
    the margin is 0. A multi-day plan can undercut the single-path optimum
    because its days are not connected by travel legs; no excess means a
    margin of 0, so the value never goes negative.
    """
    raw = _distance_margin_raw(plan, instance)
    if raw is None:
        return 0.0
    return max(0.0, raw)


def duration_underflow_ratio(plan: Plan, instance: DatasetInstance) -> float:
    """Mean percent shortfall of planned visit time against the expected duration.

    Staying longer than expected is not penalized.
    """
    shortfalls = []
    for _, _, entry in plan.entries():
        poi = instance.poi(entry.poi_name)
        if poi is None:
            continue
        planned_h = (entry.end - entry.start) / 60.0
        shortfalls.append(100.0 * max(0.0, poi.expected_duration_h - planned_h) / poi.expected_duration_h)
    if not shortfalls:
        return 0.0
    return sum(shortfalls) / len(shortfalls)


def time_buffer_ratio(plan: Plan) -> float:
    """Percent of the daily spans left free between visits.

    Each day's span runs from its first start to its last end; a single-visit
    day contributes its full duration as span and no buffer. Overlapping
    entries cannot drive a day's buffer below zero.
    """
    total_span = 0
    total_buffer = 0
    for day in plan.days:
        if not day:
            continue
        span = max(e.end for e in day) - min(e.start for e in day)
        visits = sum(e.end - e.start for e in day)
        total_span += span
        if len(day) > 1:
            total_buffer += max(0, span - visits)
    if total_span == 0:
        return 0.0
    return 100.0 * total_buffer / total_span


def _verdict_rate(verdicts: Sequence) -> float:
    if not verdicts:
        return 0.0
    return 100.0 * sum(1 for v in verdicts if v.ok) / len(verdicts)


def start_time_rationality(plan: Plan, instance: DatasetInstance, judge: Judge) -> float:
    return _verdict_rate(judge.judge_start_times(plan, instance))


def poi_relevance(plan: Plan, instance: DatasetInstance, judge: Judge) -> float:
    return _verdict_rate(judge.judge_poi_relevance(plan, instance))


def time_schedule_relevance(plan: Plan, instance: DatasetInstance, judge: Judge) -> float:
    return _verdict_rate(judge.judge_schedule_relevance(plan, instance))


def poi_popularity(plan: Plan, instance: DatasetInstance) -> float:
    """Top-M recall of the plan's distinct POIs against the leaderboard,
    where M is the number of distinct planned POIs."""
    names = set(_distinct_resolvable(plan, instance))
    m = len(names)
    if m == 0 or not instance.leaderboard:
        return 0.0
    top = set(instance.leaderboard[: min(m, len(instance.leaderboard))])
    return 100.0 * len(names & top) / m


def competition_ranks(values: Sequence[float], direction: MetricDirection) -> list[float]:
    """Competition ("1224") ranks, best value first; ties share the minimum rank."""
    if direction is MetricDirection.LOWER_BETTER:
        keyed = list(values)
    else:
        keyed = [-v for v in values]
    return [float(r) for r in rankdata(keyed, method="min")]


def rank_methods(
    table: Mapping[str, Mapping[str, float]],
    directions: Mapping[str, MetricDirection] | None = None,
) -> dict[str, DimensionRanks]:
    """Aggregate per-metric competition ranks into the four dimension ranks.

    Spatial is the distance-margin rank, temporal averages the duration,
    buffer and start-rationality ranks, semantic is the popularity rank,
    relevance averages the two judged relevance ranks, and the composite is
    the mean of the four. The commonsense pair (fr, rr) must be present but
    does not enter any rank column.
    """
    directions = dict(directions or DIRECTIONS)
    methods = list(table)
    if not methods:
        return {}
    for method in methods:
        missing = [k for k in METRIC_KEYS if k not in table[method]]
        if missing:
            raise InconsistentTable(f"method {method!r} lacks metrics {missing}")
    rank_by_metric: dict[str, list[float]] = {}
    for key in METRIC_KEYS:
        rank_by_metric[key] = competition_ranks([table[m][key] for m in methods], directions[key])
    out: dict[str, DimensionRanks] = {}
    for i, method in enumerate(methods):
        r_s = rank_by_metric["dmr"][i]
        r_t = (rank_by_metric["dur"][i] + rank_by_metric["tbr"][i] + rank_by_metric["str"][i]) / 3.0
        r_p = rank_by_metric["pp"][i]
        r_r = (rank_by_metric["pr"][i] + rank_by_metric["tsr"][i]) / 2.0
        out[method] = DimensionRanks(r_s, r_t, r_p, r_r, (r_s + r_t + r_p + r_r) / 4.0)
    return out


def evaluate(plan: Plan, instance: DatasetInstance, judge: Judge) -> EvaluationReport:
    """Compute all nine metrics plus flags and the judged per-entry verdicts."""
    flags: list[str] = []
    if plan.n_entries == 0:
        flags.append("EmptyPlan")
    distinct = _distinct_resolvable(plan, instance)
    raw_margin = _distance_margin_raw(plan, instance)
    if len(distinct) < 2:
        flags.append("DegeneratePlan")
    elif raw_margin is None:
        flags.append("ZeroOptimum")
    elif raw_margin < 0.0:
        flags.append("BelowPathOptimum")
    if not instance.leaderboard:
        flags.append("MissingLeaderboard")

    str_verdicts = tuple(judge.judge_start_times(plan, instance))
    pr_verdicts = tuple(judge.judge_poi_relevance(plan, instance))
    tsr_verdicts = tuple(judge.judge_schedule_relevance(plan, instance))
    return EvaluationReport(
        failure_rate=failure_rate(plan, instance),
        repetition_rate=repetition_rate(plan),
        distance_margin=0.0 if raw_margin is None else max(0.0, raw_margin),
        duration_underflow=duration_underflow_ratio(plan, instance),
        time_buffer=time_buffer_ratio(plan),
        start_rationality=_verdict_rate(str_verdicts),
        popularity=poi_popularity(plan, instance),
        poi_relevance=_verdict_rate(pr_verdicts),
        schedule_relevance=_verdict_rate(tsr_verdicts),
        flags=tuple(flags),
        verdicts={"str": str_verdicts, "pr": pr_verdicts, "tsr": tsr_verdicts},
    )


def aggregate_reports(reports: Sequence[EvaluationReport]) -> dict[str, float]:
    """Macro-average metric values over queries (each query weighted equally)."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    out = {}
    for key in METRIC_KEYS:
        out[key] = sum(r.value(key) for r in reports) / len(reports)
    return out
