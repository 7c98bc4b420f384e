"""Dataset directory schema, loaders, report persistence and the seeded
synthetic dataset generator.

A dataset directory holds a manifest plus line-delimited JSON files, one
entity per line, cross-referenced by query id:

    manifest.json, queries.jsonl, pois.jsonl, trajectories.jsonl,
    leaderboards.jsonl, noise.jsonl

The noise sidecar labels every corrupted trajectory POI name so a clean
variant of the trajectories can be derived.
"""

from __future__ import annotations

import dataclasses
import json
import os
import random
from pathlib import Path
from typing import Mapping, Sequence

from . import llm
from .judge import Verdict
from .model import (
    ConstraintKind,
    DatasetInstance,
    EvaluationReport,
    Plan,
    Poi,
    Query,
    TimeWindow,
    Trajectory,
)
from .timegeo import (
    DistanceMatrix,
    format_time_spec,
    nearest_neighbor_path,
    parse_time_spec,
    two_opt_path,
)

SCHEMA_VERSION = "1"
ENTITY_FILES = {
    "queries": "queries.jsonl",
    "pois": "pois.jsonl",
    "trajectories": "trajectories.jsonl",
    "leaderboards": "leaderboards.jsonl",
    "noise": "noise.jsonl",
}


class IoError(OSError):
    pass


class SchemaError(ValueError):
    def __init__(self, file: str, where: str, reason: str):
        super().__init__(f"{file} [{where}]: {reason}")
        self.file = file
        self.where = where
        self.reason = reason


class CrossRefError(ValueError):
    def __init__(self, query_id: str, detail: str):
        super().__init__(f"query {query_id!r}: {detail}")
        self.query_id = query_id


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Entity encoding


def _window_str(window: TimeWindow | None) -> str | None:
    return None if window is None else format_time_spec(window)


def _query_to_json(q: Query) -> dict:
    return {
        "id": q.id,
        "city": q.city,
        "duration_days": q.duration_days,
        "constraint_kind": q.constraint_kind.value,
        "constraint_text": q.constraint_text,
        "text": q.text,
    }


def _query_from_json(obj: dict) -> Query:
    return Query(
        id=str(obj["id"]),
        city=str(obj["city"]),
        duration_days=int(obj["duration_days"]),
        constraint_kind=ConstraintKind(obj["constraint_kind"]),
        constraint_text=obj.get("constraint_text"),
        text=str(obj["text"]),
    )


def _poi_to_json(query_id: str, p: Poi) -> dict:
    return {
        "query_id": query_id,
        "name": p.name,
        "address": p.address,
        "lat": p.lat,
        "lon": p.lon,
        "opening_hours": format_time_spec(p.opening_hours),
        "recommended_visit": _window_str(p.recommended_visit),
        "expected_duration_h": p.expected_duration_h,
        "description": p.description,
    }


def _poi_from_json(obj: dict) -> Poi:
    rec = obj.get("recommended_visit")
    return Poi(
        name=str(obj["name"]),
        address=str(obj["address"]),
        lat=float(obj["lat"]),
        lon=float(obj["lon"]),
        opening_hours=parse_time_spec(str(obj["opening_hours"])),
        recommended_visit=None if rec is None else parse_time_spec(str(rec)),
        expected_duration_h=float(obj["expected_duration_h"]),
        description=str(obj["description"]),
    )


def _trajectory_to_json(query_id: str, t: Trajectory) -> dict:
    return {"query_id": query_id, "days": [list(day) for day in t.days], "remarks": dict(t.remarks)}


def _trajectory_from_json(obj: dict) -> Trajectory:
    return Trajectory(
        days=tuple(tuple(str(n) for n in day) for day in obj["days"]),
        remarks={str(k): str(v) for k, v in obj.get("remarks", {}).items()},
    )


# ---------------------------------------------------------------------------
# Dataset save / load


def save_dataset(
    instances: Sequence[DatasetInstance],
    out_dir: str | Path,
    noise: Sequence[dict] | None = None,
) -> Path:
    """Write a dataset directory; inverse of load_dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def dump(obj: dict) -> str:
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)

    lines: dict[str, list[str]] = {key: [] for key in ENTITY_FILES}
    for inst in instances:
        qid = inst.query.id
        lines["queries"].append(dump(_query_to_json(inst.query)))
        lines["pois"].extend(dump(_poi_to_json(qid, p)) for p in inst.candidates)
        lines["trajectories"].extend(dump(_trajectory_to_json(qid, t)) for t in inst.trajectories)
        lines["leaderboards"].append(dump({"query_id": qid, "ranking": list(inst.leaderboard)}))
    lines["noise"] = [dump(record) for record in (noise or [])]

    for key, filename in ENTITY_FILES.items():
        body = "".join(line + "\n" for line in lines[key])
        atomic_write_text(out / filename, body)
    manifest = {
        "version": SCHEMA_VERSION,
        "query_count": len(instances),
        "files": dict(ENTITY_FILES),
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def _read_jsonl(path: Path) -> list[tuple[int, dict]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(path.name, f"line {lineno}", f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise SchemaError(path.name, f"line {lineno}", "expected a JSON object")
        rows.append((lineno, obj))
    return rows


def load_dataset(dataset_dir: str | Path) -> list[DatasetInstance]:
    """Load and validate a dataset directory; instances come back in query-file order."""
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise SchemaError("manifest.json", str(root), "missing manifest")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("manifest.json", str(root), f"invalid JSON: {exc}") from exc
    files = manifest.get("files", {})
    for key in ENTITY_FILES:
        name = files.get(key)
        if not name or not (root / name).is_file():
            raise SchemaError("manifest.json", key, f"referenced file missing: {name!r}")

    queries: dict[str, Query] = {}
    order: list[str] = []
    for lineno, obj in _read_jsonl(root / files["queries"]):
        try:
            q = _query_from_json(obj)
        except (KeyError, ValueError) as exc:
            raise SchemaError(files["queries"], f"line {lineno}", str(exc)) from exc
        if q.id in queries:
            raise SchemaError(files["queries"], f"line {lineno}", f"duplicate query id {q.id!r}")
        queries[q.id] = q
        order.append(q.id)
    if manifest.get("query_count") != len(order):
        raise SchemaError(
            "manifest.json", "query_count", f"declares {manifest.get('query_count')}, found {len(order)}"
        )

    pois: dict[str, list[Poi]] = {qid: [] for qid in order}
    for lineno, obj in _read_jsonl(root / files["pois"]):
        qid = str(obj.get("query_id"))
        if qid not in pois:
            raise CrossRefError(qid, f"{files['pois']} line {lineno} references unknown query")
        try:
            pois[qid].append(_poi_from_json(obj))
        except (KeyError, ValueError) as exc:
            raise SchemaError(files["pois"], f"line {lineno}", str(exc)) from exc

    trajectories: dict[str, list[Trajectory]] = {qid: [] for qid in order}
    for lineno, obj in _read_jsonl(root / files["trajectories"]):
        qid = str(obj.get("query_id"))
        if qid not in trajectories:
            raise CrossRefError(qid, f"{files['trajectories']} line {lineno} references unknown query")
        try:
            trajectories[qid].append(_trajectory_from_json(obj))
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(files["trajectories"], f"line {lineno}", str(exc)) from exc

    leaderboards: dict[str, list[str]] = {}
    for lineno, obj in _read_jsonl(root / files["leaderboards"]):
        qid = str(obj.get("query_id"))
        if qid not in pois:
            raise CrossRefError(qid, f"{files['leaderboards']} line {lineno} references unknown query")
        leaderboards[qid] = [str(n) for n in obj.get("ranking", [])]

    for lineno, obj in _read_jsonl(root / files["noise"]):
        qid = str(obj.get("query_id"))
        if qid not in pois:
            raise CrossRefError(qid, f"{files['noise']} line {lineno} references unknown query")

    instances = []
    for qid in order:
        try:
            instances.append(
                DatasetInstance(
                    query=queries[qid],
                    candidates=tuple(pois[qid]),
                    trajectories=tuple(trajectories[qid]),
                    leaderboard=tuple(leaderboards.get(qid, [])),
                )
            )
        except ValueError as exc:
            raise SchemaError(files["leaderboards"], qid, str(exc)) from exc
    return instances


def load_noise(dataset_dir: str | Path) -> dict[str, list[dict]]:
    """Noise sidecar records grouped by query id."""
    root = Path(dataset_dir)
    out: dict[str, list[dict]] = {}
    for _, obj in _read_jsonl(root / ENTITY_FILES["noise"]):
        out.setdefault(str(obj["query_id"]), []).append(obj)
    return out


def denoise_instance(instance: DatasetInstance, records: Sequence[dict]) -> DatasetInstance:
    """Clean trajectory variant: put the labeled original names back."""
    days = [[list(day) for day in t.days] for t in instance.trajectories]
    for record in records:
        t, d, i = int(record["trajectory"]), int(record["day"]), int(record["index"])
        days[t][d][i] = str(record["clean"])
    cleaned = tuple(
        Trajectory(tuple(tuple(day) for day in t_days), instance.trajectories[ti].remarks)
        for ti, t_days in enumerate(days)
    )
    return dataclasses.replace(instance, trajectories=cleaned)


# ---------------------------------------------------------------------------
# Synthetic dataset generation

_CITIES = (
    ("Beijing", 39.90, 116.40),
    ("Shanghai", 31.23, 121.47),
    ("Chengdu", 30.66, 104.06),
    ("Xi'an", 34.34, 108.94),
    ("Hangzhou", 30.27, 120.15),
    ("Guilin", 25.28, 110.29),
    ("Qingdao", 36.07, 120.38),
    ("Suzhou", 31.30, 120.60),
)

_POI_WORDS = (
    "Museum", "Lakeside Park", "Ancient Temple", "Drum Tower", "Old Town",
    "Botanical Garden", "Stone Bridge", "Night Market", "Pagoda", "Art Gallery",
    "Riverside Walk", "Opera House", "Folk Village", "Observatory", "Grand Canal Pier",
    "City Wall",
)

_CATEGORY_TOKENS = (
    "Natural Landscapes",
    "Historical & Cultural Heritage",
    "Leisure & Recreation Areas",
    "City Sightseeing",
)
_SEASON_TOKENS = ("spring", "summer", "autumn", "winter")
_HOLIDAY_TOKENS = ("Spring Festival", "Labor Day", "Mid-Autumn Festival", "National Day")
_TRAVELER_TOKENS = ("parent-child", "couple", "senior", "solo")
_COMPACT_TOKEN = "Special Forces-style"
_CORRUPTIONS = (" East Gate", " Annex", " North Entrance")

_KIND_CYCLE = (
    ConstraintKind.GENERIC,
    ConstraintKind.SEASON,
    ConstraintKind.HOLIDAY,
    ConstraintKind.POI_CATEGORY,
    ConstraintKind.TRAVELER_CATEGORY,
    ConstraintKind.TRIP_COMPACTNESS,
)


def _synth_query(rng: random.Random, index: int) -> Query:
    city = _CITIES[index % len(_CITIES)][0]
    kind = _KIND_CYCLE[index % len(_KIND_CYCLE)]
    days = rng.choice((3, 4, 5))
    if kind is ConstraintKind.GENERIC:
        token = None
        text = f"Plan a {days}-day trip to {city} with a relaxed schedule."
    elif kind is ConstraintKind.SEASON:
        token = rng.choice(_SEASON_TOKENS)
        text = f"Plan a {days}-day {token} trip to {city}."
    elif kind is ConstraintKind.HOLIDAY:
        token = rng.choice(_HOLIDAY_TOKENS)
        text = f"Plan a {days}-day trip to {city} during {token}."
    elif kind is ConstraintKind.POI_CATEGORY:
        token = rng.choice(_CATEGORY_TOKENS)
        text = f"Plan a {days}-day trip to {city} focused on {token}."
    elif kind is ConstraintKind.TRAVELER_CATEGORY:
        token = rng.choice(_TRAVELER_TOKENS)
        text = f"Plan a {days}-day {token} trip to {city}."
    else:
        token = _COMPACT_TOKEN
        text = f"Plan a {days}-day {token} tour of {city}."
    return Query(f"q{index:04d}", city, days, kind, token, text)


def _synth_window(rng: random.Random) -> TimeWindow:
    if rng.random() < 0.2:
        return parse_time_spec("0:00-24:00")
    start = rng.randrange(6, 11) * 60 + rng.choice((0, 30))
    end = rng.randrange(17, 23) * 60 + rng.choice((0, 30))
    return TimeWindow(start, end)


def _synth_poi(rng: random.Random, query: Query, city_lat: float, city_lon: float, k: int) -> Poi:
    word = _POI_WORDS[k % len(_POI_WORDS)]
    suffix = "" if k < len(_POI_WORDS) else f" {k // len(_POI_WORDS) + 1}"
    name = f"{query.city} {word}{suffix}"
    opening = _synth_window(rng)
    roll = rng.random()
    if roll < 0.3:
        recommended: TimeWindow | None = None
    elif roll < 0.5:
        recommended = parse_time_spec("0:00-24:00")
    else:
        open_start = opening.start if not opening.is_all_day else 480
        rec_end = min(open_start + rng.choice((120, 180, 240)), 1439)
        recommended = TimeWindow(open_start, rec_end)
    flavor = rng.choice(_CATEGORY_TOKENS)
    description = f"{flavor} highlight of {query.city}."
    if query.constraint_text and rng.random() < 0.6:
        description += f" Well suited to {query.constraint_text} visits."
    return Poi(
        name=name,
        address=f"{k + 1} {word} Road, {query.city}",
        lat=round(city_lat + (rng.random() - 0.5) * 0.3, 6),
        lon=round(city_lon + (rng.random() - 0.5) * 0.3, 6),
        opening_hours=opening,
        recommended_visit=recommended,
        expected_duration_h=rng.choice((0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)),
        description=description,
    )


def _synth_trajectory(
    rng: random.Random,
    query: Query,
    pois: Sequence[Poi],
    traj_index: int,
) -> tuple[Trajectory, list[dict]]:
    size = rng.randint(4, min(10, len(pois)))
    members = rng.sample(list(pois), size)
    matrix = DistanceMatrix.from_points([(p.lat, p.lon) for p in members])
    order, _ = two_opt_path(matrix, nearest_neighbor_path(matrix)[0])
    names = [members[i].name for i in order]

    remarks = {}
    for name in names:
        if rng.random() < 0.3:
            if query.constraint_text and rng.random() < 0.5:
                remarks[name] = f"Locals recommend it for {query.constraint_text}."
            else:
                remarks[name] = "Crowded on weekend mornings."

    n_days = rng.randint(1, min(3, size))
    per_day = -(-size // n_days)
    days = [names[i : i + per_day] for i in range(0, size, per_day)]

    noise_records = []
    noisy_days = []
    for d, day in enumerate(days):
        noisy_day = []
        for i, name in enumerate(day):
            if name not in remarks and rng.random() < 0.1:
                corrupt = name + rng.choice(_CORRUPTIONS)
                noise_records.append(
                    {
                        "query_id": query.id,
                        "trajectory": traj_index,
                        "day": d,
                        "index": i,
                        "clean": name,
                        "corrupt": corrupt,
                    }
                )
                noisy_day.append(corrupt)
            else:
                noisy_day.append(name)
        noisy_days.append(tuple(noisy_day))
    return Trajectory(tuple(noisy_days), remarks), noise_records


def synth_dataset(
    seed: int,
    n_queries: int,
    pois_per_query: int = 12,
    trajs_per_query: int = 8,
    out_dir: str | Path = "dataset",
) -> Path:
    """Generate a deterministic offline dataset; identical seeds yield
    byte-identical directories."""
    if min(n_queries, pois_per_query, trajs_per_query) < 1:
        raise ValueError("all counts must be >= 1")
    rng = random.Random(seed)
    instances = []
    noise: list[dict] = []
    for index in range(n_queries):
        query = _synth_query(rng, index)
        _, city_lat, city_lon = _CITIES[index % len(_CITIES)]
        pois = tuple(_synth_poi(rng, query, city_lat, city_lon, k) for k in range(pois_per_query))
        trajs = []
        for t in range(trajs_per_query):
            trajectory, records = _synth_trajectory(rng, query, pois, t)
            trajs.append(trajectory)
            noise.extend(records)
        leaderboard = tuple(rng.sample([p.name for p in pois], len(pois)))
        instances.append(DatasetInstance(query, pois, tuple(trajs), leaderboard))
    return save_dataset(instances, out_dir, noise)


# ---------------------------------------------------------------------------
# Reports and plans


def report_to_json(report: EvaluationReport) -> dict:
    verdicts = {
        metric: [
            {"day": v.day, "index": v.index, "poi_name": v.poi_name, "ok": v.ok, "rationale": v.rationale}
            for v in vs
        ]
        for metric, vs in report.verdicts.items()
    }
    return {**report.values(), "flags": list(report.flags), "verdicts": verdicts}


def report_from_json(obj: dict) -> EvaluationReport:
    try:
        verdicts = {
            metric: tuple(
                Verdict(int(v["day"]), int(v["index"]), str(v["poi_name"]), bool(v["ok"]), v.get("rationale"))
                for v in vs
            )
            for metric, vs in obj.get("verdicts", {}).items()
        }
        return EvaluationReport(
            failure_rate=float(obj["fr"]),
            repetition_rate=float(obj["rr"]),
            distance_margin=float(obj["dmr"]),
            duration_underflow=float(obj["dur"]),
            time_buffer=float(obj["tbr"]),
            start_rationality=float(obj["str"]),
            popularity=float(obj["pp"]),
            poi_relevance=float(obj["pr"]),
            schedule_relevance=float(obj["tsr"]),
            flags=tuple(str(f) for f in obj.get("flags", [])),
            verdicts=verdicts,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("report", "object", str(exc)) from exc


def save_reports(reports: Mapping[str, EvaluationReport], path: str | Path) -> None:
    payload = {qid: report_to_json(r) for qid, r in reports.items()}
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def load_reports(path: str | Path) -> dict[str, EvaluationReport]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), "file", f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError(str(path), "file", "expected an object keyed by query id")
    return {str(qid): report_from_json(obj) for qid, obj in payload.items()}


def save_plans(plans: Mapping[str, Plan], path: str | Path) -> None:
    payload = {qid: llm.plan_to_wire(plan) for qid, plan in plans.items()}
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def load_plans(path: str | Path) -> dict[str, Plan]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), "file", f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError(str(path), "file", "expected an object keyed by query id")
    out = {}
    for qid, obj in payload.items():
        try:
            out[str(qid)] = llm.wire_to_plan(obj)
        except (llm.SchemaMismatch, llm.BadTime) as exc:
            raise SchemaError(str(path), str(qid), str(exc)) from exc
    return out
