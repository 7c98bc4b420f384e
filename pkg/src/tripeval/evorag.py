"""Evolutionary plan optimizer.

The population holds one plan seeded per reference trajectory plus one from
direct prompting. Each generation the plans are evaluated and rank-ordered, a
reflection memory is updated from the results, the elite share is rewritten by
a mutation-only call, and the remainder is regenerated by a crossover-and-
mutation call steered toward dissimilar parents. The best plans of all
generations are finally ranked together, so the returned plan never falls
behind the best initial seed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from . import llm, metrics, strategies
from .analysis import SimilarityConfig, sigma
from .judge import Judge
from .model import METRIC_KEYS, DatasetInstance, EvaluationReport, Plan

PLAN_ATTEMPTS = 5

_PROVENANCE_ORDER = {"direct": 0, "trajectory": 1, "mutated": 2, "crossed": 3}

CRITERIA_TEXT = """Lower is better:
- Failure rate: share of planned visits naming an attraction outside the reference list.
- Repetition rate: share of planned visits repeating an attraction.
- Distance margin: percent extra travel distance over the shortest route through the planned attractions.
- Duration underflow: average percent by which visits fall short of the expected duration.
Higher is better:
- Time buffer: share of each day left free between visits.
- Start-time rationality: share of visits starting within opening hours and recommended windows.
- Popularity: share of planned attractions among the equally-many top leaderboard entries.
- POI relevance and schedule relevance: share of visits matching the personalized request."""


@dataclass(frozen=True)
class EvoConfig:
    generations: int = 1
    alpha: float = 0.25  # share of the population rewritten by mutation alone
    beta: float = 0.5  # POI-set weight inside the parent dissimilarity measure
    seed: int = 0

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class Provenance:
    kind: str  # direct | trajectory | mutated | crossed
    index: int = -1

    def __post_init__(self) -> None:
        if self.kind not in _PROVENANCE_ORDER:
            raise ValueError(f"unknown provenance kind {self.kind!r}")

    @property
    def sort_key(self) -> tuple[int, int]:
        return (_PROVENANCE_ORDER[self.kind], self.index)

    def __str__(self) -> str:
        return self.kind if self.index < 0 else f"{self.kind}[{self.index}]"


@dataclass(frozen=True)
class Individual:
    plan: Plan
    provenance: Provenance
    report: EvaluationReport | None = None
    fitness_rank: float = 0.0
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReflectionMemory:
    text: str = ""
    version: int = 0
    flags: tuple[str, ...] = ()


class EvoRunError(RuntimeError):
    """Optimization failure carrying the history gathered before the failure."""

    def __init__(self, message: str, history: list[list[dict]]):
        super().__init__(message)
        self.history = history


def initialize_population(instance: DatasetInstance, client: llm.ChatClient) -> list[Individual]:
    """One direct-prompting seed plus one trajectory-grounded seed per reference."""
    if not instance.trajectories:
        raise ValueError("population seeding needs at least one trajectory")
    individuals = [
        _seeded(instance, strategies.StrategyConfig(strategies.StrategyKind.DIRECT), client, Provenance("direct"))
    ]
    for i, trajectory in enumerate(instance.trajectories):
        single = dataclasses.replace(instance, trajectories=(trajectory,))
        config = strategies.StrategyConfig(strategies.StrategyKind.RAG, m=1)
        individuals.append(_seeded(single, config, client, Provenance("trajectory", i)))
    return individuals


def _seeded(
    instance: DatasetInstance,
    config: strategies.StrategyConfig,
    client: llm.ChatClient,
    provenance: Provenance,
) -> Individual:
    try:
        return Individual(strategies.generate_plan(instance, config, client), provenance)
    except strategies.StrategyFailure:
        if config.kind is strategies.StrategyKind.DIRECT:
            raise
        # A failed trajectory seed falls back to its own direct plan.
        fallback = strategies.StrategyConfig(strategies.StrategyKind.DIRECT)
        plan = strategies.generate_plan(instance, fallback, client)
        return Individual(plan, provenance, flags=("seed_fallback",))


def dimension_rank_profile(reports: list[EvaluationReport]) -> list[float]:
    """Mean of the five dimension ranks (commonsense included) per report."""
    ranks = {
        key: metrics.competition_ranks([r.value(key) for r in reports], metrics.DIRECTIONS[key])
        for key in METRIC_KEYS
    }
    out = []
    for i in range(len(reports)):
        commonsense = (ranks["fr"][i] + ranks["rr"][i]) / 2.0
        spatial = ranks["dmr"][i]
        temporal = (ranks["dur"][i] + ranks["tbr"][i] + ranks["str"][i]) / 3.0
        semantic = ranks["pp"][i]
        relevance = (ranks["pr"][i] + ranks["tsr"][i]) / 2.0
        out.append((commonsense + spatial + temporal + semantic + relevance) / 5.0)
    return out


def fitness_order(
    population: list[Individual], instance: DatasetInstance, judge: Judge
) -> list[Individual]:
    """Evaluate everyone and sort best-first by mean dimension rank.

    Ties break on the distance margin, then on provenance order, keeping the
    ordering deterministic.
    """
    reports = [metrics.evaluate(ind.plan, instance, judge) for ind in population]
    fitness = dimension_rank_profile(reports)
    evaluated = [
        dataclasses.replace(ind, report=report, fitness_rank=rank)
        for ind, report, rank in zip(population, reports, fitness)
    ]
    return sorted(
        evaluated,
        key=lambda ind: (ind.fitness_rank, ind.report.distance_margin, ind.provenance.sort_key),
    )


def _format_population(population: list[Individual]) -> str:
    lines = []
    for i, ind in enumerate(population, start=1):
        lines.append(f"Plan {i} ({ind.provenance}): {llm.serialize_plan(ind.plan)}")
        if ind.report is not None:
            values = ", ".join(f"{k}={ind.report.value(k):.2f}" for k in METRIC_KEYS)
            lines.append(f"  evaluation: {values}")
    return "\n".join(lines)


def reflect(
    memory: ReflectionMemory,
    ranked: list[Individual],
    instance: DatasetInstance,
    client: llm.ChatClient,
) -> ReflectionMemory:
    """Update the optimization memory from the ranked population; a failed
    call carries the old memory forward with a flag."""
    prompt = llm.render(
        llm.load_templates()["reflect"],
        {
            "QUERY": instance.query.text,
            "POI REFERENCE LIST": llm.format_poi_reference_list(instance.candidates),
            "PREVIOUS PLANNING RESULTS": _format_population(ranked),
            "CRITERIA & OBJECTIVES": CRITERIA_TEXT,
            "PREVIOUS REFLECTION": memory.text or "(none)",
        },
    )
    try:
        text = llm.chat(llm.ChatRequest(messages=[{"role": "user", "content": prompt}]), client)
    except llm.TransportError:
        return dataclasses.replace(memory, flags=memory.flags + ("reflection_failed",))
    return ReflectionMemory(text, memory.version + 1, memory.flags)


def _dissimilar_pairs(population: list[Individual], count: int, beta: float) -> str:
    """Narrative of the least-similar plan pairs, least similar first."""
    config = SimilarityConfig(beta=beta)
    scored = []
    for i in range(len(population)):
        for j in range(i + 1, len(population)):
            scored.append((sigma(population[i].plan, population[j].plan, config), i, j))
    scored.sort(key=lambda t: (t[0], t[1], t[2]))
    lines = [
        f"Plan {i + 1} & Plan {j + 1} (similarity {s:.2f})" for s, i, j in scored[:count]
    ]
    return "\n".join(lines) if lines else "(none)"


def _plans_call(client: llm.ChatClient, prompt: str) -> list[Plan]:
    last: Exception | None = None
    for _ in range(PLAN_ATTEMPTS):
        reply = llm.chat(llm.ChatRequest(messages=[{"role": "user", "content": prompt}]), client)
        try:
            plans = llm.extract_plans_json(reply)
        except (llm.NoJsonFound, llm.SchemaMismatch, llm.BadTime) as exc:
            last = exc
            continue
        if plans:
            return plans
        last = ValueError("empty plan array")
    raise strategies.StrategyFailure(f"no parseable plan array after {PLAN_ATTEMPTS} attempts: {last}")


def _fill(plans: list[Plan], needed: int, parents: list[Individual], kind: str) -> list[Individual]:
    out = [Individual(plan, Provenance(kind, i)) for i, plan in enumerate(plans[:needed])]
    shortfall = needed - len(out)
    for k in range(shortfall):
        parent = parents[k % len(parents)]
        out.append(
            Individual(parent.plan, Provenance(kind, len(out)), flags=("backfilled",))
        )
    return out


def evolve_generation(
    ranked: list[Individual],
    memory: ReflectionMemory,
    instance: DatasetInstance,
    client: llm.ChatClient,
    config: EvoConfig,
) -> list[Individual]:
    """Produce the next population: elite mutation plus dissimilarity-driven
    crossover, preserving the population size."""
    size = len(ranked)
    elite_count = max(1, math.floor(config.alpha * size))
    base = {
        "QUERY": instance.query.text,
        "POI REFERENCE LIST": llm.format_poi_reference_list(instance.candidates),
        "CRITERIA & OBJECTIVES": CRITERIA_TEXT,
        "REFLECTION": memory.text or "(none)",
    }
    templates = llm.load_templates()

    mutation_prompt = llm.render(
        templates["update_mutation"],
        {
            **base,
            "PREVIOUS PLANNING RESULTS": _format_population(ranked[:elite_count]),
            "NUMBER OF PLANS": str(elite_count),
        },
    )
    mutated = _fill(_plans_call(client, mutation_prompt), elite_count, ranked, "mutated")

    cross_count = size - elite_count
    if cross_count == 0:
        return mutated
    crossover_prompt = llm.render(
        templates["update_crossover"],
        {
            **base,
            "PREVIOUS PLANNING RESULTS": _format_population(ranked),
            "PARENT PAIRS": _dissimilar_pairs(ranked, cross_count, config.beta),
            "NUMBER OF PLANS": str(cross_count),
        },
    )
    crossed = _fill(_plans_call(client, crossover_prompt), cross_count, ranked, "crossed")
    return mutated + crossed


def _snapshot(population: list[Individual]) -> list[dict]:
    out = []
    for ind in population:
        out.append(
            {
                "provenance": str(ind.provenance),
                "fitness_rank": ind.fitness_rank,
                "metrics": ind.report.values() if ind.report else None,
                "flags": list(ind.flags),
            }
        )
    return out


def run(
    instance: DatasetInstance,
    client: llm.ChatClient,
    judge: Judge,
    config: EvoConfig = EvoConfig(),
) -> tuple[Plan, list[list[dict]]]:
    """Optimize one query and return the overall best plan plus the
    per-generation population history."""
    history: list[list[dict]] = []
    try:
        population = initialize_population(instance, client)
        memory = ReflectionMemory()
        bests: list[Individual] = []
        for _ in range(config.generations):
            ranked = fitness_order(population, instance, judge)
            history.append(_snapshot(ranked))
            bests.append(ranked[0])
            memory = reflect(memory, ranked, instance, client)
            population = evolve_generation(ranked, memory, instance, client, config)
        final = fitness_order(population, instance, judge)
        history.append(_snapshot(final))
        bests.append(final[0])
        winner = fitness_order(bests, instance, judge)[0]
        return winner.plan, history
    except (strategies.StrategyFailure, llm.TransportError) as exc:
        raise EvoRunError(str(exc), history) from exc
