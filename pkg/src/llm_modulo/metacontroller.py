"""The generate-test loop: prompt, generate, reformat, criticize, repeat.

Each iteration's prompt is rebuilt from scratch (instructions, sandbox
context, format rules, a worked example) plus the backprompts of the
previous iteration's failing critics only.  The loop stops at the first
iteration where every selected critic passes, or when the iteration budget
runs out.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .critics import (
    DEFAULT_CONFIG,
    CriticConfig,
    CriticSet,
    CriticVerdict,
    critic_set,
    evaluate_plan,
    run_critics,
)
from .generators import GeneratorError
from .plan import PLAN_KEYS, Itinerary, ReformatFailure, SchemaViolation, parse_plan_text, serialize_plan
from .query import Query
from .sandbox import (
    Sandbox,
    find_accommodations,
    find_attractions,
    find_distance,
    find_restaurants,
    get_cost_of_transport,
    normalize_city,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 10

INSTRUCTION = """You are a proficient travel planner. Using only the reference information below,
write a day-by-day travel plan for the query. Every flight, restaurant, attraction and
accommodation you name must appear in the reference information, and the plan should respect
the budget and every preference stated in the query."""

FORMAT_RULES = f"""Output format: a JSON array with one object per day, with exactly the keys
{", ".join(PLAN_KEYS)}.
- "day" and "people_number" are integers; all other values are strings.
- current_city is the city of the day, or "from <A> to <B>" on a day you travel.
- transportation is "-" or "<Flight|Taxi|Self-driving>, from <A> to <B>"; flights add
  ", Flight Number: <id>, Departure Time: <hh:mm>, Arrival Time: <hh:mm>".
- breakfast, lunch, dinner and accommodation are "<name>, <city>" or "-".
- attraction lists "<name>, <city>" entries separated by ";" or is "-".
- accommodation is where you sleep that night; the last day needs none."""

FEW_SHOT = """Example (query: 3 days from Springfield to Riverton, March 1-3, 2022, 2 people, budget $900):
[
  {"day": 1, "people_number": 2, "current_city": "from Springfield to Riverton",
   "transportation": "Flight, from Springfield to Riverton, Flight Number: F1234, Departure Time: 08:05, Arrival Time: 09:40",
   "breakfast": "-", "attraction": "River Walk, Riverton", "lunch": "Mill House, Riverton",
   "dinner": "Blue Heron, Riverton", "accommodation": "Elm Street Loft, Riverton"},
  {"day": 2, "people_number": 2, "current_city": "Riverton", "transportation": "-",
   "breakfast": "Daybreak Cafe, Riverton", "attraction": "Old Fort, Riverton;Botanic Garden, Riverton",
   "lunch": "Noodle Bar, Riverton", "dinner": "Harbor Grill, Riverton", "accommodation": "Elm Street Loft, Riverton"},
  {"day": 3, "people_number": 2, "current_city": "from Riverton to Springfield",
   "transportation": "Flight, from Riverton to Springfield, Flight Number: F5678, Departure Time: 18:20, Arrival Time: 19:55",
   "breakfast": "Sunny Side, Riverton", "attraction": "Art Museum, Riverton", "lunch": "Corner Deli, Riverton",
   "dinner": "-", "accommodation": "-"}
]"""


@dataclass(frozen=True)
class PromptBundle:
    instruction: str
    context: str
    format_rules: str
    few_shot: str
    query_text: str
    backprompt_block: str = ""

    def render(self) -> str:
        parts = [
            self.instruction,
            "## Reference information\n" + self.context,
            "## " + self.format_rules,
            "## " + self.few_shot,
            "## Query\n" + self.query_text,
        ]
        if self.backprompt_block:
            parts.append("## Feedback on your previous plan\n" + self.backprompt_block)
        parts.append("## Travel plan (JSON only)")
        return "\n\n".join(parts) + "\n"


def relevant_cities(q: Query, sb: Sandbox) -> list[str]:
    """Cities whose sandbox rows go into the prompt.

    The origin and destination; when the destination is not itself a
    sandbox city (a region for multi-city trips) every sandbox city.
    """
    cities = [q.org]
    if sb.has_city(q.dest):
        cities.append(q.dest)
    else:
        cities += [c for c in sb.cities() if normalize_city(c) != normalize_city(q.org)]
    return cities


def _table(title: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    rows = list(rows)
    lines = [f"### {title} ({len(rows)})", " | ".join(header)]
    lines += [" | ".join(str(x) for x in row) for row in rows]
    return "\n".join(lines)


def _ground_cost(sb: Sandbox, d, mode: str) -> str:
    if mode not in d.available_modes:
        return "-"
    return str(get_cost_of_transport(sb, d.origin_city, d.dest_city, mode, 1))


def render_context(q: Query, sb: Sandbox) -> str:
    cities = relevant_cities(q, sb)
    keys = {normalize_city(c) for c in cities}
    dates = set(q.date_range)
    flights = [
        f for f in sb.flights
        if normalize_city(f.origin_city) in keys and normalize_city(f.dest_city) in keys and f.flight_date in dates
    ]
    ground = [
        d for a in cities for b in cities if normalize_city(a) != normalize_city(b)
        for d in [find_distance(sb, a, b)] if d is not None
    ]
    return "\n\n".join([
        _table(
            "Flights",
            ("Flight Number", "Price", "DepTime", "ArrTime", "FlightDate", "OriginCityName", "DestCityName"),
            ((f.flight_number, f.price, f"{f.dep_time:%H:%M}", f"{f.arr_time:%H:%M}", f.flight_date.isoformat(),
              f.origin_city, f.dest_city) for f in flights),
        ),
        _table(
            "Ground transport",
            ("origin", "destination", "distance", "duration", "modes",
             f"taxi cost per taxi ({sb.transport.taxi_capacity} seats)",
             f"self-driving cost per car ({sb.transport.car_capacity} seats)"),
            ((d.origin_city, d.dest_city, d.distance, d.duration, ";".join(sorted(d.available_modes)),
              _ground_cost(sb, d, "taxi"), _ground_cost(sb, d, "self-driving"))
             for d in ground),
        ),
        _table(
            "Accommodations",
            ("NAME", "price", "room type", "house_rules", "minimum nights", "maximum occupancy", "city"),
            ((h.name, h.price, h.room_type, h.house_rules or "-", h.minimum_nights, h.maximum_occupancy, h.city)
             for c in cities for h in find_accommodations(sb, c)),
        ),
        _table(
            "Restaurants",
            ("Name", "Average Cost", "Cuisines", "Aggregate Rating", "City"),
            ((r.name, r.average_cost, ", ".join(sorted(r.cuisines)), r.rating, r.city)
             for c in cities for r in find_restaurants(sb, c)),
        ),
        _table(
            "Attractions",
            ("Name", "Address", "City"),
            ((a.name, a.address, a.city) for c in cities for a in find_attractions(sb, c)),
        ),
    ])


def describe_query(q: Query) -> str:
    if q.text:
        return q.text
    lc = q.constraints
    prefs = []
    if lc.house_rule:
        prefs.append(f"accommodation must allow {lc.house_rule}")
    if lc.room_type:
        prefs.append(f"room type: {lc.room_type}")
    if lc.cuisine:
        prefs.append(f"cuisines to include: {', '.join(sorted(lc.cuisine))}")
    if lc.transportation:
        prefs.append(f"transportation: {lc.transportation}")
    return (
        f"A {q.days}-day trip for {q.people_number} "
        f"{'person' if q.people_number == 1 else 'people'} from {q.org} to {q.dest}, "
        f"visiting {q.visiting_city_number} "
        f"{'city' if q.visiting_city_number == 1 else 'cities'}, "
        f"from {q.date_range[0].isoformat()} to {q.date_range[-1].isoformat()}, "
        f"with a budget of ${q.budget}. "
        + (("Preferences: " + "; ".join(prefs) + ".") if prefs else "No special preferences.")
    )


def consolidate_backprompts(verdicts: Sequence[CriticVerdict]) -> list[str]:
    """Backprompts of failing verdicts, in verdict order, exact duplicates dropped."""
    out: list[str] = []
    for v in verdicts:
        if not v.passed and v.backprompt not in out:
            out.append(v.backprompt)
    return out


def build_prompt(q: Query, sb: Sandbox, backprompts: Sequence[str] = ()) -> PromptBundle:
    return PromptBundle(
        instruction=INSTRUCTION,
        context=render_context(q, sb),
        format_rules=FORMAT_RULES,
        few_shot=FEW_SHOT,
        query_text=describe_query(q),
        backprompt_block="\n\n".join(backprompts),
    )


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    prompt: str
    reply: str
    plan: Itinerary | None
    reformat: ReformatFailure | None
    verdicts: tuple[CriticVerdict, ...]
    evaluation: tuple[CriticVerdict, ...] = ()
    telemetry: dict | None = None

    @property
    def all_passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    @property
    def fired(self) -> tuple[str, ...]:
        return tuple(v.critic_id for v in self.verdicts if not v.passed)

    def to_dict(self) -> dict:
        d = {
            "iteration": self.iteration,
            "prompt": self.prompt,
            "reply": self.reply,
            "reformat": {"ok": True} if self.reformat is None else {"ok": False, **self.reformat.to_dict()},
            "plan": self.plan.to_list() if self.plan is not None else None,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "evaluation": [v.to_dict() for v in self.evaluation],
        }
        if self.telemetry:
            d["telemetry"] = self.telemetry
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IterationTrace":
        ref = d.get("reformat") or {"ok": True}
        failure = None
        if not ref.get("ok", True):
            failure = ReformatFailure(
                ref["kind"], ref["message"],
                tuple(SchemaViolation(v["field"], v["kind"], v["message"], v.get("day")) for v in ref.get("violations", ())),
            )
        return cls(
            iteration=d["iteration"],
            prompt=d.get("prompt", ""),
            reply=d.get("reply", ""),
            plan=Itinerary.from_list(d["plan"]) if d.get("plan") is not None else None,
            reformat=failure,
            verdicts=tuple(CriticVerdict.from_dict(v) for v in d.get("verdicts", ())),
            evaluation=tuple(CriticVerdict.from_dict(v) for v in d.get("evaluation", ())),
            telemetry=d.get("telemetry"),
        )


@dataclass(frozen=True)
class SessionResult:
    """Outcome of one planning session.

    ``delivered`` means some iteration produced a schema-valid plan; that is
    weaker than ``all_passed``.  ``plan`` is the last such plan, and
    ``final_evaluation`` holds its verdicts under every applicable critic
    (the basis for pass-rate metrics, independent of the loop's selector).
    """

    query: Query
    plan: Itinerary | None
    delivered: bool
    all_passed: bool
    iterations_used: int
    traces: tuple[IterationTrace, ...]
    selector: str = "all"
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    generator: str = ""
    seed: int | None = None
    error: str | None = None
    session_id: str = ""

    def __post_init__(self):
        if self.all_passed and not self.delivered:
            raise ValueError("a session cannot pass without delivering a plan")
        if self.iterations_used != len(self.traces):
            raise ValueError("iterations_used must equal the number of traces")

    @property
    def final_evaluation(self) -> tuple[CriticVerdict, ...]:
        return self.traces[-1].evaluation if self.traces else ()

    def header(self) -> dict:
        return {
            "session_id": self.session_id,
            "query": self.query.to_dict(),
            "selector": self.selector,
            "max_iterations": self.max_iterations,
            "generator": self.generator,
            "seed": self.seed,
        }

    def summary(self) -> dict:
        return {
            **self.header(),
            "delivered": self.delivered,
            "all_passed": self.all_passed,
            "iterations_used": self.iterations_used,
            "error": self.error,
            "plan": self.plan.to_list() if self.plan is not None else None,
            "final_evaluation": [v.to_dict() for v in self.final_evaluation],
        }

    def trace_lines(self) -> list[str]:
        """One JSON line per iteration, each carrying the session header."""
        header = self.header()
        lines = []
        for i, t in enumerate(self.traces):
            record = {"session": header, **t.to_dict()}
            if i == len(self.traces) - 1 and self.error:
                record["error"] = self.error
            lines.append(json.dumps(record, ensure_ascii=False, sort_keys=False))
        return lines

    def write_trace(self, path: str | Path) -> None:
        text = "\n".join(self.trace_lines())
        Path(path).write_text(text + ("\n" if text else ""), encoding="utf-8")


def sessions_from_trace_lines(lines: Iterable[str]) -> list[SessionResult]:
    """Rebuild sessions from trace JSON lines (several sessions may share a file)."""
    entries: list[dict] = []
    open_entry: dict[str, dict] = {}
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        rec = json.loads(raw)
        header = rec["session"]
        key = json.dumps(header, sort_keys=True)
        entry = open_entry.get(key)
        # a repeated header restarting at iteration 1 is a separate session
        if entry is None or rec["iteration"] == 1:
            entry = {"header": header, "traces": [], "error": None}
            entries.append(entry)
            open_entry[key] = entry
        entry["traces"].append(IterationTrace.from_dict(rec))
        entry["error"] = rec.get("error", entry["error"])
    out = []
    for entry in entries:
        header = entry["header"]
        traces = tuple(sorted(entry["traces"], key=lambda t: t.iteration))
        plans = [t.plan for t in traces if t.plan is not None]
        out.append(SessionResult(
            query=Query.from_dict(header["query"]),
            plan=plans[-1] if plans else None,
            delivered=bool(plans),
            all_passed=bool(traces) and traces[-1].all_passed,
            iterations_used=len(traces),
            traces=traces,
            selector=header.get("selector", "all"),
            max_iterations=header.get("max_iterations", DEFAULT_MAX_ITERATIONS),
            generator=header.get("generator", ""),
            seed=header.get("seed"),
            error=entry["error"],
            session_id=header.get("session_id", ""),
        ))
    return out


def load_traces(path: str | Path) -> list[SessionResult]:
    with open(path, encoding="utf-8") as fh:
        return sessions_from_trace_lines(fh)


def run_session(
    q: Query,
    gen,
    selector: str | CriticSet,
    sb: Sandbox,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    config: CriticConfig = DEFAULT_CONFIG,
    reformatter=None,
    seed: int | None = None,
    session_id: str | None = None,
    prompt_builder: Callable[[Query, Sandbox, Sequence[str]], PromptBundle] = build_prompt,
) -> SessionResult:
    """Run the critic loop for one query.

    ``gen`` is any object with ``generate(prompt) -> str``.  ``reformatter``
    optionally rewrites free-form replies that contain no JSON.  A
    :class:`GeneratorError` ends the session early, keeping the traces so far.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    cs = critic_set(selector)
    traces: list[IterationTrace] = []
    backprompts: list[str] = []
    plan: Itinerary | None = None
    error = None
    evaluation: tuple[CriticVerdict, ...] = tuple(evaluate_plan(None, q, sb, config))
    for k in range(1, max_iterations + 1):
        prompt = prompt_builder(q, sb, backprompts).render()
        try:
            reply = gen.generate(prompt)
        except GeneratorError as exc:
            error = f"{type(exc).__name__}: {exc}"
            logger.warning("session %s aborted at iteration %d: %s", session_id, k, error)
            break
        parsed = parse_plan_text(reply, reformatter)
        verdicts = tuple(run_critics(cs, parsed, q, sb, config))
        if isinstance(parsed, Itinerary):
            plan = parsed
            evaluation = tuple(evaluate_plan(plan, q, sb, config))
        telemetry = getattr(gen, "last_telemetry", None) or None
        traces.append(IterationTrace(
            iteration=k,
            prompt=prompt,
            reply=reply,
            plan=parsed if isinstance(parsed, Itinerary) else None,
            reformat=parsed if isinstance(parsed, ReformatFailure) else None,
            verdicts=verdicts,
            evaluation=evaluation,
            telemetry=dict(telemetry) if telemetry else None,
        ))
        if all(v.passed for v in verdicts):
            break
        backprompts = consolidate_backprompts(verdicts)
    return SessionResult(
        query=q,
        plan=plan,
        delivered=plan is not None,
        all_passed=bool(traces) and traces[-1].all_passed,
        iterations_used=len(traces),
        traces=tuple(traces),
        selector=cs.selector,
        max_iterations=max_iterations,
        generator=getattr(gen, "description", type(gen).__name__),
        seed=seed,
        error=error,
        session_id=session_id if session_id is not None else (q.query_id or ""),
    )


def plan_json(result: SessionResult) -> str:
    return serialize_plan(result.plan) if result.plan is not None else "null"
