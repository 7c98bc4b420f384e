"""Similarity, rank-correlation and win-rate statistics plus the
retrieval-quantity sensitivity sweep."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

from scipy import stats

from . import llm, metrics, strategies
from .judge import Judge
from .model import METRIC_KEYS, DatasetInstance, EvaluationReport, Plan, PlanEntry, Trajectory


@dataclass(frozen=True)
class SimilarityConfig:
    beta: float = 0.5  # weight of the POI-set component against the order component

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


class LengthMismatch(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class QuerySetMismatch(ValueError):
    pass


def _check_pair(a: Sequence[float], b: Sequence[float]) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"length {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise LengthMismatch("need at least two observations")


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> float:
    """Tie-corrected rank correlation (tau-b); equals tau-a on tie-free input."""
    _check_pair(a, b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # constant input becomes a typed error below
        tau = stats.kendalltau(list(a), list(b)).statistic
    if math.isnan(tau):
        raise DegenerateInput("an input is constant; tau undefined")
    return float(tau)


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks."""
    _check_pair(a, b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # constant input becomes a typed error below
        rho = stats.spearmanr(list(a), list(b)).statistic
    if math.isnan(rho):
        raise DegenerateInput("an input is constant; rho undefined")
    return float(rho)


def jaccard(a: set, b: set) -> float:
    """|a n b| / |a u b|; two empty sets count as identical (1.0)."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _visit_sequence(s: Plan | Trajectory | Sequence[str]) -> tuple[str, ...]:
    if isinstance(s, Plan):
        return s.visit_sequence()
    if isinstance(s, Trajectory):
        seq = s.sequence
    else:
        seq = tuple(s)
    seen: dict[str, None] = {}
    for name in seq:
        seen.setdefault(name)
    return tuple(seen)


def sigma(
    s: Plan | Trajectory | Sequence[str],
    t: Plan | Trajectory | Sequence[str],
    config: SimilarityConfig = SimilarityConfig(),
) -> float:
    """Similarity in [0, 1]: beta-weighted mix of POI-set overlap and order agreement.

    The order component maps the Kendall tau over common POIs onto [0, 1];
    with fewer than two common POIs no order evidence exists and the
    component is 0.
    """
    seq_s = _visit_sequence(s)
    seq_t = _visit_sequence(t)
    set_s, set_t = set(seq_s), set(seq_t)
    sigma_poi = jaccard(set_s, set_t)
    common = [name for name in seq_s if name in set_t]
    if len(common) < 2:
        sigma_order = 0.0
    else:
        pos_t = {name: i for i, name in enumerate(seq_t)}
        ranks_s = list(range(len(common)))
        ranks_t = [pos_t[name] for name in common]
        sigma_order = (kendall_tau(ranks_s, ranks_t) + 1.0) / 2.0
    return config.beta * sigma_poi + (1.0 - config.beta) * sigma_order


def win_rate(
    reports_a: Mapping[str, EvaluationReport],
    reports_b: Mapping[str, EvaluationReport],
    metric: str,
    direction: metrics.MetricDirection | None = None,
) -> float:
    """Percent of queries where the first method strictly beats the second; ties never win."""
    if metric not in METRIC_KEYS:
        raise ValueError(f"unknown metric {metric!r}")
    if set(reports_a) != set(reports_b):
        raise QuerySetMismatch(
            f"query sets differ: {sorted(set(reports_a) ^ set(reports_b))[:5]}"
        )
    if not reports_a:
        raise QuerySetMismatch("no queries to compare")
    direction = direction or metrics.DIRECTIONS[metric]
    wins = 0
    for qid, report_a in reports_a.items():
        va, vb = report_a.value(metric), reports_b[qid].value(metric)
        if direction is metrics.MetricDirection.LOWER_BETTER:
            wins += va < vb
        else:
            wins += va > vb
    return 100.0 * wins / len(reports_a)


def pseudo_plan(trajectory: Trajectory, instance: DatasetInstance) -> Plan:
    """Schedule a reference trajectory with nominal times so the metric engine
    can score it. Used as the per-trajectory quality proxy; the scoring is an
    approximation and outputs carry a 'pseudo_plan' marker where emitted."""
    days = []
    for day_names in trajectory.days:
        entries = []
        cursor = 540
        for name in day_names:
            poi = instance.poi(name)
            duration = int(poi.expected_duration_h * 60) if poi else 60
            end = min(cursor + max(duration, 30), 1439)
            if end <= cursor:
                break
            entries.append(PlanEntry(name, cursor, end))
            cursor = end + 30
        days.append(tuple(entries))
    return Plan(tuple(days))


@dataclass(frozen=True)
class SweepRow:
    m: int
    condition: str
    means: Mapping[str, float]
    ranks: metrics.DimensionRanks


def sensitivity_sweep(
    instances: Sequence[DatasetInstance],
    m_values: Sequence[int],
    client: llm.ChatClient,
    judge: Judge,
    clean_instances: Sequence[DatasetInstance] | None = None,
    compression: strategies.Compression = strategies.Compression.NONE,
) -> list[SweepRow]:
    """Run trajectory-grounded planning per retrieval count and noise condition,
    macro-average the metrics, and rank every (m, condition) cell together.

    The swept strategy is rag(m); a post-retrieval compression variant can be
    selected as the base.
    """
    conditions: list[tuple[str, Sequence[DatasetInstance]]] = [("noisy", instances)]
    if clean_instances is not None:
        if len(clean_instances) != len(instances):
            raise ValueError("clean variant must cover the same instances")
        conditions.append(("clean", clean_instances))
    cells: dict[tuple[int, str], dict[str, float]] = {}
    for condition, cond_instances in conditions:
        for m in m_values:
            reports = []
            for instance in cond_instances:
                config = strategies.StrategyConfig(
                    strategies.StrategyKind.RAG, m=m, compression=compression
                )
                plan = strategies.generate_plan(instance, config, client)
                reports.append(metrics.evaluate(plan, instance, judge))
            cells[(m, condition)] = metrics.aggregate_reports(reports)
    table = {f"rag(m={m})/{condition}": means for (m, condition), means in cells.items()}
    ranked = metrics.rank_methods(table)
    return [
        SweepRow(m, condition, means, ranked[f"rag(m={m})/{condition}"])
        for (m, condition), means in cells.items()
    ]


WIN_RATE_COLUMNS = ("metric", "win_rate")
SENSITIVITY_COLUMNS = ("m", "condition", *METRIC_KEYS, "r_s", "r_t", "r_p", "r_r", "r_c")


def write_win_rate_csv(path, rates: Mapping[str, float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(WIN_RATE_COLUMNS)
        for metric in METRIC_KEYS:
            if metric in rates:
                writer.writerow([metric, f"{rates[metric]:.2f}"])


def write_sensitivity_csv(path, rows: Sequence[SweepRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SENSITIVITY_COLUMNS)
        for row in rows:
            ranks = row.ranks
            writer.writerow(
                [row.m, row.condition]
                + [f"{row.means[k]:.2f}" for k in METRIC_KEYS]
                + [f"{v:.2f}" for v in (ranks.r_s, ranks.r_t, ranks.r_p, ranks.r_r, ranks.r_c)]
            )
