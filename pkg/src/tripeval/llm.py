"""Chat client abstraction, prompt templating and plan JSON extraction.

Clients speak a chat-completions style wire protocol ({model, messages,
temperature} in, assistant text out). Two offline clients exist alongside the
HTTP one: a strict replay client fed scripted replies, and a deterministic
mock planner that synthesizes valid replies from the prompt itself so that
the whole pipeline runs without a network.
"""

from __future__ import annotations

import functools
import json
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Protocol, Sequence

from .model import Plan, PlanEntry, Poi, Trajectory
from .timegeo import format_time_spec

DEFAULT_TIMEOUT_S = 120.0


class TransportError(RuntimeError):
    pass


class RateLimited(TransportError):
    pass


class AuthError(RuntimeError):
    pass


class NoJsonFound(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


class BadTime(ValueError):
    pass


class MissingPlaceholder(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


@dataclass(frozen=True)
class ChatRequest:
    messages: Sequence[dict[str, str]]
    model: str = "default"
    temperature: float = 0.0
    max_retries: int = 5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not self.messages:
            raise ValueError("messages must be non-empty")
        object.__setattr__(self, "messages", tuple(dict(m) for m in self.messages))


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str


_PLACEHOLDER_RE = re.compile(r"<([A-Z][A-Za-z0-9 &\-']*)>")


def render(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every <PLACEHOLDER>; leftover placeholders are an error, not a warning."""
    text = template.body
    for key, value in bindings.items():
        text = text.replace(f"<{key}>", value)
    left = _PLACEHOLDER_RE.search(text)
    if left:
        raise MissingPlaceholder(left.group(1))
    return text


@functools.lru_cache(maxsize=1)
def load_templates() -> dict[str, PromptTemplate]:
    """Load every packaged template file, keyed by file stem."""
    out = {}
    for entry in resources.files(__package__).joinpath("templates").iterdir():
        if entry.name.endswith(".txt"):
            out[entry.name[:-4]] = PromptTemplate(entry.name[:-4], entry.read_text(encoding="utf-8"))
    return out


# ---------------------------------------------------------------------------
# Prompt serialization helpers


def format_minutes(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_clock(text: str) -> int:
    """Parse "HH:MM" (or "H:MM") into minutes since midnight."""
    m = re.match(r"^\s*(\d{1,2}):(\d{2})\s*$", text or "")
    if not m:
        raise BadTime(f"cannot parse clock time {text!r}")
    hours, mins = int(m.group(1)), int(m.group(2))
    if mins > 59 or hours > 24 or (hours == 24 and mins != 0):
        raise BadTime(f"clock time out of range: {text!r}")
    return hours * 60 + mins


def _poi_line(poi: Poi) -> str:
    rec = "none" if poi.recommended_visit is None else format_time_spec(poi.recommended_visit)
    return (
        f"- {poi.name} | address: {poi.address} | location: {poi.lat:.5f},{poi.lon:.5f}"
        f" | open: {format_time_spec(poi.opening_hours)} | recommended: {rec}"
        f" | expected hours: {poi.expected_duration_h:g} | description: {poi.description}"
    )


def format_poi_reference_list(pois: Iterable[Poi]) -> str:
    """One POI per line: name, address, coordinates, hours, recommendation, duration, description."""
    return "\n".join(_poi_line(p) for p in pois)


def format_poi_temporal_list(pois: Iterable[Poi]) -> str:
    lines = []
    for p in pois:
        rec = "none" if p.recommended_visit is None else format_time_spec(p.recommended_visit)
        lines.append(f"- {p.name} | open: {format_time_spec(p.opening_hours)} | recommended: {rec}")
    return "\n".join(lines)


def format_trajectories(trajectories: Sequence[Trajectory]) -> str:
    """Numbered trajectory listing; IDs are 1-based positions in this listing."""
    lines = []
    for i, traj in enumerate(trajectories, start=1):
        days = "; ".join(f"Day {d + 1}: " + " -> ".join(names) for d, names in enumerate(traj.days))
        lines.append(f"Trajectory {i}: {days}")
        for name, remark in traj.remarks.items():
            if remark:
                lines.append(f"  note on {name}: {remark}")
    return "\n".join(lines)


def plan_to_wire(plan: Plan) -> dict[str, list[dict[str, str]]]:
    """Encode a plan in the day-keyed JSON answer format."""
    out: dict[str, list[dict[str, str]]] = {}
    for i, day in enumerate(plan.days, start=1):
        out[f"Day {i}"] = [
            {
                "POI name": e.poi_name,
                "Start visit time": format_minutes(e.start),
                "End visit time": format_minutes(e.end),
            }
            for e in day
        ]
    return out


def serialize_plan(plan: Plan) -> str:
    return json.dumps(plan_to_wire(plan), ensure_ascii=False)


def wire_to_plan(obj: object) -> Plan:
    """Decode the day-keyed JSON answer format into a Plan."""
    if not isinstance(obj, dict) or not obj:
        raise SchemaMismatch("expected a non-empty JSON object of days")
    numbered: dict[int, object] = {}
    for key, value in obj.items():
        m = re.match(r"^Day (\d+)$", str(key))
        if not m:
            raise SchemaMismatch(f"unexpected key {key!r}, expected 'Day k'")
        numbered[int(m.group(1))] = value
    expected = list(range(1, len(numbered) + 1))
    if sorted(numbered) != expected:
        raise SchemaMismatch(f"day keys must be contiguous from 1, got {sorted(numbered)}")
    days = []
    for k in expected:
        value = numbered[k]
        if not isinstance(value, list):
            raise SchemaMismatch(f"'Day {k}' must hold a list of visits")
        entries = []
        for item in value:
            if not isinstance(item, dict):
                raise SchemaMismatch(f"visit in 'Day {k}' is not an object")
            try:
                name = item["POI name"]
                start = item["Start visit time"]
                end = item["End visit time"]
            except KeyError as exc:
                raise SchemaMismatch(f"visit in 'Day {k}' lacks key {exc.args[0]!r}") from None
            entries.append(PlanEntry(str(name), parse_clock(str(start)), parse_clock(str(end))))
        days.append(tuple(entries))
    return Plan(tuple(days))


# ---------------------------------------------------------------------------
# JSON extraction


def _match_balanced(text: str, start: int) -> int | None:
    """End index of the bracket value opening at start, or None if unbalanced."""
    stack: list[str] = []
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            stack.append("}" if ch == "{" else "]")
        elif ch in "}]":
            if not stack or ch != stack[-1]:
                return None
            stack.pop()
            if not stack:
                return i + 1
    return None


def _json_spans(text: str) -> list[tuple[int, int]]:
    """Top-level balanced {...} / [...] spans, string literals respected.

    A dangling opener is skipped so values nested behind it still surface.
    """
    spans = []
    i = 0
    while i < len(text):
        if text[i] in "{[":
            end = _match_balanced(text, i)
            if end is not None:
                spans.append((i, end))
                i = end
                continue
        i += 1
    return spans


def extract_last_json(text: str) -> object:
    """Parse the last balanced JSON value embedded anywhere in the text."""
    for start, end in reversed(_json_spans(text)):
        try:
            return json.loads(text[start:end])
        except json.JSONDecodeError:
            continue
    raise NoJsonFound("no parseable JSON value in reply")


def extract_plan_json(text: str) -> Plan:
    """Pull the day-keyed plan object out of an assistant reply."""
    obj = extract_last_json(text)
    return wire_to_plan(obj)


def extract_plans_json(text: str) -> list[Plan]:
    """Pull a JSON array of day-keyed plan objects out of an assistant reply."""
    obj = extract_last_json(text)
    if not isinstance(obj, list):
        raise SchemaMismatch("expected a JSON array of plans")
    return [wire_to_plan(item) for item in obj]


# ---------------------------------------------------------------------------
# Clients


class ChatClient(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


def chat(request: ChatRequest, client: ChatClient, backoff_base: float | None = None) -> str:
    """Issue one chat call with exponential-backoff retries on transport failures.

    The pacing comes from the client's backoff_base attribute unless given
    explicitly; offline clients advertise zero and never sleep.
    """
    if backoff_base is None:
        backoff_base = getattr(client, "backoff_base", 0.5)
    last: TransportError | None = None
    for attempt in range(request.max_retries + 1):
        try:
            return client.complete(request)
        except AuthError:
            raise
        except TransportError as exc:
            last = exc
            if attempt < request.max_retries and backoff_base > 0:
                time.sleep(backoff_base * (2**attempt))
    assert last is not None
    raise last


class HttpChatClient:
    """Minimal chat-completions HTTP client; endpoint and key come from the
    LLM_BASE_URL / LLM_API_KEY environment variables unless given explicitly."""

    backoff_base = 0.5

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.base_url = (base_url or os.environ.get("LLM_BASE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("LLM_API_KEY", "")
        self.timeout_s = timeout_s
        if not self.base_url:
            raise ValueError("no endpoint: set LLM_BASE_URL or pass base_url")

    def complete(self, request: ChatRequest) -> str:
        body = json.dumps(
            {
                "model": request.model,
                "messages": list(request.messages),
                "temperature": request.temperature,
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            f"{self.base_url}/chat/completions",
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            if exc.code == 429:
                raise RateLimited(f"rate limited: {exc}") from exc
            if exc.code in (401, 403):
                raise AuthError(f"auth rejected: {exc}") from exc
            raise TransportError(f"http error: {exc}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"transport failure: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {payload!r:.200}") from exc


class ScriptedChatClient:
    """Replay client: returns scripted replies in order, exactly once each.

    A reply that is an Exception instance is raised instead of returned,
    letting tests script transport failures.
    """

    backoff_base = 0.0

    def __init__(self, replies: Sequence[str | Exception]):
        self._replies = list(replies)
        self._cursor = 0
        self.requests: list[ChatRequest] = []

    @property
    def calls(self) -> int:
        return self._cursor

    def complete(self, request: ChatRequest) -> str:
        self.requests.append(request)
        if self._cursor >= len(self._replies):
            raise TransportError(f"script exhausted after {len(self._replies)} replies")
        reply = self._replies[self._cursor]
        self._cursor += 1
        if isinstance(reply, Exception):
            raise reply
        return reply


_POI_LINE_RE = re.compile(
    r"^- (?P<name>.+?) \| address: .*? \| location: (?P<lat>-?[\d.]+),(?P<lon>-?[\d.]+)"
    r" \| open: (?P<open>[^|]+?) \| recommended: [^|]+ \| expected hours: (?P<hours>[\d.]+) \|"
)
_TRAJ_LINE_RE = re.compile(r"^Trajectory (\d+): (.+)$")
_DAYS_RE = re.compile(r"(\d+)[ -]day")


class MockPlannerClient:
    """Deterministic offline planner and judge.

    Replies are synthesized from the prompt alone (plus the seed), so reruns
    are byte-identical and independent prompts can be answered in parallel.
    """

    backoff_base = 0.0

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.calls = 0

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        prompt = request.messages[-1]["content"]
        if "solve one sub-problem" in prompt:
            return '{"notes": "group nearby attractions, start each visit at opening time"}'
        if "Please select the" in prompt and "Extractive Requirements" in prompt:
            return self._extractive(prompt)
        if "merge, and compress these information into a single trajectory" in prompt:
            return self._abstractive(prompt)
        if "break down the problem and plan the execution sequence" in prompt:
            return json.dumps(
                {
                    "Sub-problem 1": {
                        "Sub-problem description": "pick attractions per day by proximity",
                        "Planning requirements": ["group nearby attractions"],
                    },
                    "Sub-problem 2": {
                        "Sub-problem description": "assign visit times within opening hours",
                        "Planning requirements": ["respect expected durations"],
                    },
                }
            )
        if '"Appropriate" or "Inappropriate"' in prompt or '"Satisfied" or "Unsatisfied"' in prompt:
            return self._judge(prompt)
        if "refine your previous reflection" in prompt:
            return (
                "Cluster each day geographically, start visits at opening or recommended"
                " times, hold visits to the expected durations, and prefer leaderboard"
                " attractions matching the request."
            )
        if "provide specific feedback" in prompt:
            return "Feedback: tighten geographic clustering and align starts with opening hours."
        m = re.search(r"set of (\d+) new plans", prompt) or re.search(r"generate (\d+) new plans", prompt)
        if m:
            count = int(m.group(1))
            plans = [self._plan_wire(prompt, variant=v) for v in range(count)]
            return json.dumps(plans, ensure_ascii=False)
        return json.dumps(self._plan_wire(prompt, variant=0), ensure_ascii=False)

    # -- prompt parsing ------------------------------------------------------

    def _pois(self, prompt: str) -> dict[str, tuple[int, float, float, float]]:
        """name -> (opening start minute, expected hours, lat, lon) per reference line."""
        out = {}
        for line in prompt.splitlines():
            m = _POI_LINE_RE.match(line.strip())
            if not m:
                continue
            spec = m.group("open").strip()
            mm = re.match(r"^(\d{1,2}):(\d{2})-", spec)
            open_start = int(mm.group(1)) * 60 + int(mm.group(2)) if mm else 540
            out[m.group("name")] = (
                open_start,
                float(m.group("hours")),
                float(m.group("lat")),
                float(m.group("lon")),
            )
        return out

    def _trajectories(self, prompt: str) -> list[list[str]]:
        out = []
        for line in prompt.splitlines():
            m = _TRAJ_LINE_RE.match(line.strip())
            if not m:
                continue
            names = []
            for day_part in m.group(2).split("; "):
                day_part = re.sub(r"^Day \d+: ", "", day_part)
                names.extend(n.strip() for n in day_part.split(" -> ") if n.strip())
            out.append(names)
        return out

    def _extractive(self, prompt: str) -> str:
        m = re.search(r"select the (\d+) schemes", prompt)
        count = int(m.group(1)) if m else 1
        available = len(self._trajectories(prompt))
        ids = [str(i + 1) for i in range(min(count, max(available, 1)))]
        return json.dumps({"Explanation": "closest to the request", "Extractive IDs": ids})

    def _abstractive(self, prompt: str) -> str:
        merged: dict[str, None] = {}
        for traj in self._trajectories(prompt):
            for name in traj:
                merged.setdefault(name)
        names = list(merged)[:8] or list(self._pois(prompt))[:4]
        half = max(1, (len(names) + 1) // 2)
        results = {"Day 1": [{"POI name": n, "Remark": ""} for n in names[:half]]}
        if names[half:]:
            results["Day 2"] = [{"POI name": n, "Remark": ""} for n in names[half:]]
        return json.dumps({"Explanation": "merged reference route", "Results": results}, ensure_ascii=False)

    def _judge(self, prompt: str) -> str:
        label = "Appropriate" if '"Appropriate"' in prompt else "Satisfied"
        names = re.findall(r"^- ([^|:\n]+?)(?:\s*\||:|$)", prompt, flags=re.MULTILINE)
        verdicts = {name.strip(): label for name in names}
        return json.dumps(verdicts, ensure_ascii=False)

    @staticmethod
    def _route_day(names: list[str], pois: dict) -> list[str]:
        """Nearest-neighbor ordering from the first pick; ties keep list order."""
        if len(names) < 3:
            return names
        remaining = list(names)
        route = [remaining.pop(0)]
        while remaining:
            _, _, lat, lon = pois[route[-1]]
            nxt = min(
                remaining,
                key=lambda n: ((pois[n][2] - lat) ** 2 + (pois[n][3] - lon) ** 2, remaining.index(n)),
            )
            remaining.remove(nxt)
            route.append(nxt)
        return route

    def _plan_wire(self, prompt: str, variant: int) -> dict:
        pois = self._pois(prompt)
        if not pois:
            return {"Day 1": []}
        preferred: list[str] = []
        for traj in self._trajectories(prompt):
            for name in traj:
                if name in pois and name not in preferred:
                    preferred.append(name)
        for name in pois:
            if name not in preferred:
                preferred.append(name)
        m = _DAYS_RE.search(prompt)
        n_days = int(m.group(1)) if m else 3
        n_days = max(1, min(n_days, len(preferred)))
        shift = (self.seed + variant) % len(preferred)
        chosen = (preferred[shift:] + preferred[:shift])[: min(len(preferred), n_days * 3)]
        per_day = -(-len(chosen) // n_days)

        wire: dict[str, list[dict[str, str]]] = {}
        idx = 0
        for day in range(1, n_days + 1):
            entries = []
            cursor = 540
            for name in self._route_day(chosen[idx : idx + per_day], pois):
                open_start, hours, _, _ = pois[name]
                start = max(cursor, open_start)
                duration = max(30, int(round(hours * 4)) * 15)
                end = min(start + duration, 1439)
                if end <= start:
                    continue
                entries.append(
                    {
                        "POI name": name,
                        "Start visit time": format_minutes(start),
                        "End visit time": format_minutes(end),
                    }
                )
                cursor = end + 30
            idx += per_day
            wire[f"Day {day}"] = entries
        return wire
