"""Binary per-entry judging for the three judged metrics.

Two interchangeable judges: a deterministic rule judge for offline runs and
tests, and an LLM judge that renders the evaluation prompts and parses the
{"POI name": verdict} reply object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

from .model import ConstraintKind, DatasetInstance, Plan, PlanEntry, Poi, Query

if TYPE_CHECKING:
    from .llm import ChatClient

POSITIVE_LABELS = frozenset({"appropriate", "satisfied"})
NEGATIVE_LABELS = frozenset({"inappropriate", "unsatisfied"})

JUDGED_METRICS = ("str", "pr", "tsr")


class JudgeFailure(RuntimeError):
    pass


class MalformedJudgeOutput(JudgeFailure):
    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw[:200]!r}")
        self.raw = raw


@dataclass(frozen=True)
class Verdict:
    """One binary judgment for one plan entry under one judged metric."""

    day: int
    index: int
    poi_name: str
    ok: bool
    rationale: str | None = None


class Judge(Protocol):
    def judge_start_times(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]: ...

    def judge_poi_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]: ...

    def judge_schedule_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]: ...


def rule_judge_str(entry: PlanEntry, poi: Poi, day: int = 0, index: int = 0) -> Verdict:
    """Appropriate iff the start lies in the opening hours and, when a concrete
    recommendation exists, inside the recommended window too."""
    ok = poi.opening_hours.contains(entry.start)
    rec = poi.recommended_visit
    if ok and rec is not None and not rec.is_all_day:
        ok = rec.contains(entry.start)
    rationale = None if ok else "start outside opening or recommended window"
    return Verdict(day, index, entry.poi_name, ok, rationale)


def rule_judge_relevance(
    query: Query,
    entry: PlanEntry,
    poi: Poi,
    aspect: str,
    remarks: str = "",
    day: int = 0,
    index: int = 0,
) -> Verdict:
    """Deterministic stand-in for LLM relevance judging.

    Generic queries are vacuously satisfied. POI-category constraints demand
    the constraint token in the POI description; season/holiday/traveler
    constraints accept the description or trajectory remarks. Trip compactness
    is a whole-schedule property, so its per-entry schedule verdict is always
    satisfied.
    """
    if aspect not in ("poi", "schedule"):
        raise ValueError(f"unknown relevance aspect {aspect!r}")
    kind = query.constraint_kind
    if kind is ConstraintKind.GENERIC:
        return Verdict(day, index, entry.poi_name, True)
    if kind is ConstraintKind.TRIP_COMPACTNESS:
        # Neither aspect is constrained per entry by a compactness request.
        return Verdict(day, index, entry.poi_name, True)
    token = (query.constraint_text or "").lower()
    haystack = poi.description.lower()
    if kind is not ConstraintKind.POI_CATEGORY:
        haystack = f"{haystack} {remarks.lower()}"
    ok = token in haystack
    rationale = None if ok else f"constraint token {query.constraint_text!r} not found"
    return Verdict(day, index, entry.poi_name, ok, rationale)


def _resolvable_entries(plan: Plan, instance: DatasetInstance) -> list[tuple[int, int, PlanEntry, Poi]]:
    out = []
    for di, ei, entry in plan.entries():
        poi = instance.poi(entry.poi_name)
        if poi is not None:
            out.append((di, ei, entry, poi))
    return out


class RuleJudge:
    """Pure, total judge driven by POI attributes and the query constraint."""

    def judge_start_times(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return [rule_judge_str(e, p, di, ei) for di, ei, e, p in _resolvable_entries(plan, instance)]

    def judge_poi_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return self._relevance(plan, instance, "poi")

    def judge_schedule_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return self._relevance(plan, instance, "schedule")

    def _relevance(self, plan: Plan, instance: DatasetInstance, aspect: str) -> list[Verdict]:
        return [
            rule_judge_relevance(
                instance.query, e, p, aspect, instance.poi_remarks(e.poi_name), di, ei
            )
            for di, ei, e, p in _resolvable_entries(plan, instance)
        ]


def llm_judge(
    metric: str,
    query: Query,
    plan: Plan,
    instance: DatasetInstance,
    client: "ChatClient",
    max_retries: int = 2,
) -> list[Verdict]:
    """Render the evaluation prompt for one judged metric and parse the verdicts.

    The reply must contain a JSON object mapping POI names to verdict strings
    (Appropriate/Inappropriate or Satisfied/Unsatisfied, case-insensitive).
    POIs missing from the reply are re-queried; after the retry budget the
    call fails rather than inventing verdicts.
    """
    from . import llm

    if metric not in JUDGED_METRICS:
        raise ValueError(f"unknown judged metric {metric!r}")
    entries = _resolvable_entries(plan, instance)
    if not entries:
        return []

    templates = llm.load_templates()
    template = templates[{"str": "evaluate_str", "pr": "evaluate_pr", "tsr": "evaluate_tsr"}[metric]]
    pois = [p for _, _, _, p in entries]
    slot_lines = "\n".join(
        f"- {e.poi_name}: {llm.format_minutes(e.start)}-{llm.format_minutes(e.end)} (Day {di + 1})"
        for di, _, e, _ in entries
    )
    bindings = {"QUERY": query.text}
    if metric == "str":
        bindings["REFERENCE TEMPORAL INFORMATION OF POIS"] = llm.format_poi_temporal_list(pois)
        bindings["PLANNED START VISIT TIMES OF POIS"] = slot_lines
    elif metric == "pr":
        bindings["PLANNED POIS"] = "\n".join(f"- {p.name}" for p in pois)
    else:
        bindings["PLANNED TIME SLOTS of POIS"] = slot_lines
    prompt = llm.render(template, bindings)

    outcomes: dict[str, bool] = {}
    wanted = {e.poi_name for _, _, e, _ in entries}
    last_raw = ""
    for _ in range(max_retries + 1):
        raw = llm.chat(llm.ChatRequest(messages=[{"role": "user", "content": prompt}]), client)
        last_raw = raw
        try:
            obj = llm.extract_last_json(raw)
        except llm.NoJsonFound:
            continue
        if not isinstance(obj, dict):
            continue
        for name, label in obj.items():
            if name not in wanted or not isinstance(label, str):
                continue
            norm = label.strip().lower()
            if norm in POSITIVE_LABELS:
                outcomes[name] = True
            elif norm in NEGATIVE_LABELS:
                outcomes[name] = False
            else:
                raise MalformedJudgeOutput(f"unrecognized verdict {label!r} for {name!r}", raw)
        if wanted <= outcomes.keys():
            break
    missing = sorted(wanted - outcomes.keys())
    if missing:
        raise JudgeFailure(f"no verdict for {missing} after {max_retries + 1} attempts; last reply {last_raw[:200]!r}")
    return [Verdict(di, ei, e.poi_name, outcomes[e.poi_name]) for di, ei, e, _ in entries]


class LlmJudge:
    """Judge backed by a chat client; deterministic when the client is."""

    def __init__(self, client: "ChatClient", max_retries: int = 2):
        self.client = client
        self.max_retries = max_retries

    def judge_start_times(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return llm_judge("str", instance.query, plan, instance, self.client, self.max_retries)

    def judge_poi_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return llm_judge("pr", instance.query, plan, instance, self.client, self.max_retries)

    def judge_schedule_relevance(self, plan: Plan, instance: DatasetInstance) -> list[Verdict]:
        return llm_judge("tsr", instance.query, plan, instance, self.client, self.max_retries)
