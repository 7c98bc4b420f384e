"""Baseline planning pipelines: direct, chain-of-thought, self-review,
divide-and-conquer, critic debate, and trajectory-grounded generation with
optional extractive or abstractive compression of the references.

Every pipeline funnels its final reply through the plan extractor; an
unparseable reply triggers a full re-generation call, capped at PLAN_ATTEMPTS.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from . import llm
from .model import DatasetInstance, Plan, Trajectory

PLAN_ATTEMPTS = 5
MAC_MAX_SUBPROBLEMS = 4
MAC_OUTPUT_LIMIT = 500  # executor replies are truncated before threading


class StrategyKind(Enum):
    DIRECT = "direct"
    COT = "cot"
    REFLEXION = "reflexion"
    MAC = "mac"
    MAD = "mad"
    RAG = "rag"


class Compression(Enum):
    NONE = "none"
    EXTRACTIVE = "extractive"
    ABSTRACTIVE = "abstractive"


class StrategyFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategyConfig:
    kind: StrategyKind
    m: int | None = None
    compression: Compression = Compression.NONE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is StrategyKind.RAG:
            if self.m is None or self.m < 1:
                raise ValueError("RAG needs a trajectory count m >= 1")
        elif self.compression is not Compression.NONE:
            raise ValueError("compression only applies to RAG")

    def label(self) -> str:
        if self.kind is not StrategyKind.RAG:
            return self.kind.value
        if self.compression is Compression.EXTRACTIVE:
            return f"rag+extr(m={self.m})"
        if self.compression is Compression.ABSTRACTIVE:
            return "rag+abst"
        return f"rag(m={self.m})"


def _chat(client: llm.ChatClient, prompt: str) -> str:
    return llm.chat(llm.ChatRequest(messages=[{"role": "user", "content": prompt}]), client)


def _plan_call(client: llm.ChatClient, prompt: str) -> Plan:
    """Chat until the reply parses as a plan, re-generating on parse failure."""
    last: Exception | None = None
    for _ in range(PLAN_ATTEMPTS):
        reply = _chat(client, prompt)
        try:
            return llm.extract_plan_json(reply)
        except (llm.NoJsonFound, llm.SchemaMismatch, llm.BadTime) as exc:
            last = exc
    raise StrategyFailure(f"no parseable plan after {PLAN_ATTEMPTS} attempts: {last}")


def _json_call(client: llm.ChatClient, prompt: str) -> object:
    last: Exception | None = None
    for _ in range(PLAN_ATTEMPTS):
        reply = _chat(client, prompt)
        try:
            return llm.extract_last_json(reply)
        except llm.NoJsonFound as exc:
            last = exc
    raise StrategyFailure(f"no parseable JSON after {PLAN_ATTEMPTS} attempts: {last}")


def _base_bindings(instance: DatasetInstance) -> dict[str, str]:
    return {
        "QUERY": instance.query.text,
        "POI REFERENCE LIST": llm.format_poi_reference_list(instance.candidates),
    }


def _render(name: str, bindings: dict[str, str]) -> str:
    return llm.render(llm.load_templates()[name], bindings)


def generate_plan(instance: DatasetInstance, config: StrategyConfig, client: llm.ChatClient) -> Plan:
    """Run one planning pipeline for one query and return the parsed plan."""
    kind = config.kind
    if kind is StrategyKind.DIRECT:
        return _plan_call(client, _render("direct", _base_bindings(instance)))
    if kind is StrategyKind.COT:
        return _plan_call(client, _render("cot", _base_bindings(instance)))
    if kind is StrategyKind.REFLEXION:
        return _reflexion(instance, client)
    if kind is StrategyKind.MAC:
        return _mac(instance, client)
    if kind is StrategyKind.MAD:
        return _mad(instance, client)
    if kind is StrategyKind.RAG:
        return _rag(instance, config, client)
    raise ValueError(f"unknown strategy {kind!r}")


def _reflexion(instance: DatasetInstance, client: llm.ChatClient) -> Plan:
    base = _base_bindings(instance)
    initial = _plan_call(client, _render("direct", base))
    feedback = _chat(
        client, _render("reflexion_feedback", {**base, "INITIAL PLAN": llm.serialize_plan(initial)})
    )
    return _plan_call(
        client,
        _render(
            "reflexion_refinement",
            {**base, "INITIAL PLAN": llm.serialize_plan(initial), "FEEDBACK": feedback},
        ),
    )


def _subproblem_order(key: str) -> tuple[int, str]:
    m = re.search(r"(\d+)\s*$", key)
    return (int(m.group(1)) if m else 1_000_000, key)


def _mac(instance: DatasetInstance, client: llm.ChatClient) -> Plan:
    base = _base_bindings(instance)
    decomposition = _json_call(client, _render("mac_decompose", {"QUERY": instance.query.text}))
    if not isinstance(decomposition, dict) or not decomposition:
        raise StrategyFailure(f"decomposition is not a JSON object: {decomposition!r:.120}")
    keys = sorted(decomposition, key=_subproblem_order)[:MAC_MAX_SUBPROBLEMS]

    outputs: list[str] = []
    for key in keys:
        info = json.dumps({key: decomposition[key]}, ensure_ascii=False)
        previous = "\n".join(outputs) if outputs else "(none)"
        reply = _chat(
            client,
            _render(
                "mac_executor",
                {**base, "SUB-PROBLEM INFORMATION": info, "PREVIOUS OUTPUTS": previous},
            ),
        )
        outputs.append(reply[:MAC_OUTPUT_LIMIT])
    return _plan_call(
        client, _render("mac_summarize", {**base, "SUB-PROBLEM OUTPUTS": "\n".join(outputs)})
    )


_MAD_CRITICS = (
    ("mad_critic_spatial", "Spatial perspective"),
    ("mad_critic_temporal", "Temporal perspective"),
    ("mad_critic_semantic", "Semantic perspective"),
    ("mad_critic_relevance", "Relevance perspective"),
)


def _mad(instance: DatasetInstance, client: llm.ChatClient) -> Plan:
    base = _base_bindings(instance)
    initial = _plan_call(client, _render("direct", base))
    plan_text = llm.serialize_plan(initial)
    feedback_parts = []
    for template, tag in _MAD_CRITICS:
        reply = _chat(client, _render(template, {**base, "INITIAL PLAN": plan_text}))
        feedback_parts.append(f"{tag}: {reply}")
    return _plan_call(
        client,
        _render(
            "reflexion_refinement",
            {**base, "INITIAL PLAN": plan_text, "FEEDBACK": "\n".join(feedback_parts)},
        ),
    )


def _rag_prompt(instance: DatasetInstance, trajectories: list[Trajectory]) -> str:
    return _render(
        "rag", {**_base_bindings(instance), "TRAJECTORIES": llm.format_trajectories(trajectories)}
    )


def _rag(instance: DatasetInstance, config: StrategyConfig, client: llm.ChatClient) -> Plan:
    m = config.m or 1
    if config.compression is Compression.NONE:
        if len(instance.trajectories) < m:
            raise ValueError(f"need {m} trajectories, instance has {len(instance.trajectories)}")
        return _plan_call(client, _rag_prompt(instance, list(instance.trajectories[:m])))
    if config.compression is Compression.EXTRACTIVE:
        return _plan_call(client, _rag_prompt(instance, _extract_trajectories(instance, m, client)))
    return _plan_call(client, _rag_prompt(instance, [_merge_trajectories(instance, client)]))


def _extract_trajectories(instance: DatasetInstance, m: int, client: llm.ChatClient) -> list[Trajectory]:
    """Compression pass: let the model pick m trajectory IDs out of the full set."""
    if len(instance.trajectories) < m:
        raise ValueError(f"need {m} trajectories, instance has {len(instance.trajectories)}")
    prompt = _render(
        "compress_extractive",
        {
            **_base_bindings(instance),
            "TRAJECTORIES": llm.format_trajectories(list(instance.trajectories)),
            "EXTRACTIVE NUMBER": str(m),
        },
    )
    last = ""
    for _ in range(PLAN_ATTEMPTS):
        obj = _json_call(client, prompt)
        ids = obj.get("Extractive IDs") if isinstance(obj, dict) else None
        picked: list[int] = []
        for raw in ids or []:
            try:
                i = int(raw)
            except (TypeError, ValueError):
                continue
            if 1 <= i <= len(instance.trajectories) and i not in picked:
                picked.append(i)
        if len(picked) >= m:
            return [instance.trajectories[i - 1] for i in picked[:m]]
        last = repr(obj)
    raise StrategyFailure(f"extractive compression never produced {m} valid IDs: {last:.120}")


def _merge_trajectories(instance: DatasetInstance, client: llm.ChatClient) -> Trajectory:
    """Compression pass: merge every trajectory into one reference route."""
    prompt = _render(
        "compress_abstractive",
        {
            **_base_bindings(instance),
            "TRAJECTORIES": llm.format_trajectories(list(instance.trajectories)),
        },
    )
    last = ""
    for _ in range(PLAN_ATTEMPTS):
        obj = _json_call(client, prompt)
        results = obj.get("Results") if isinstance(obj, dict) else None
        try:
            return _trajectory_from_results(results)
        except ValueError:
            last = repr(obj)
    raise StrategyFailure(f"abstractive compression never produced a trajectory: {last:.120}")


def _trajectory_from_results(results: object) -> Trajectory:
    if not isinstance(results, dict) or not results:
        raise ValueError("Results must be a non-empty object of days")
    days = []
    remarks: dict[str, str] = {}
    for key in sorted(results, key=_subproblem_order):
        items = results[key]
        if not isinstance(items, list):
            raise ValueError(f"{key!r} must hold a list")
        names = []
        for item in items:
            if not isinstance(item, dict) or "POI name" not in item:
                raise ValueError("trajectory item lacks 'POI name'")
            name = str(item["POI name"])
            names.append(name)
            remark = str(item.get("Remark", "") or "")
            if remark:
                remarks[name] = remark
        if names:
            days.append(tuple(names))
    if not days:
        raise ValueError("merged trajectory is empty")
    return Trajectory(tuple(days), remarks)
