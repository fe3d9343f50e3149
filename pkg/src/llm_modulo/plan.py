"""Itinerary data model, canonical JSON form, and the deterministic reformatter.

A plan is a list of per-day objects with nine keys.  String fields use
``"-"`` as the explicit "nothing scheduled" marker; a field holding ``"-"``
is present and schema-valid, so judging whether it *should* be filled is
left to the completeness critic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, time, timedelta
from typing import Iterator, Sequence

from .sandbox import normalize_city, parse_clock

EMPTY = "-"
PLAN_KEYS = (
    "day", "people_number", "current_city", "transportation",
    "breakfast", "attraction", "lunch", "dinner", "accommodation",
)
INT_KEYS = ("day", "people_number")
TEXT_KEYS = PLAN_KEYS[2:]
MEALS = ("breakfast", "lunch", "dinner")
VIOLATION_KINDS = ("missing_key", "wrong_type", "malformed_value", "bad_day_sequence")
_WRAPPER_KEYS = ("plan", "itinerary", "llm_response")


@dataclass(frozen=True)
class DayPlan:
    day: int
    people_number: int
    current_city: str
    transportation: str
    breakfast: str
    attraction: str
    lunch: str
    dinner: str
    accommodation: str

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in PLAN_KEYS}

    def replace(self, **changes) -> "DayPlan":
        return DayPlan(**{**self.to_dict(), **changes})


@dataclass(frozen=True)
class Itinerary:
    """Ordered day plans, numbered 1..n with a common party size."""

    days: tuple[DayPlan, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(self.days))
        for i, d in enumerate(self.days, start=1):
            if d.day != i:
                raise ValueError(f"day {i} is numbered {d.day}")
        if len({d.people_number for d in self.days}) > 1:
            raise ValueError("people_number differs between days")

    def __len__(self) -> int:
        return len(self.days)

    def __iter__(self) -> Iterator[DayPlan]:
        return iter(self.days)

    def __getitem__(self, i) -> DayPlan:
        return self.days[i]

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.days]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "Itinerary":
        return cls(tuple(DayPlan(**{k: item[k] for k in PLAN_KEYS}) for item in items))

    def with_day(self, index: int, **changes) -> "Itinerary":
        """Copy with fields of the 0-based ``index``-th day replaced."""
        days = list(self.days)
        days[index] = days[index].replace(**changes)
        return Itinerary(tuple(days))


@dataclass(frozen=True)
class SchemaViolation:
    field: str
    kind: str
    message: str
    day: int | None = None

    def __post_init__(self):
        if self.kind not in VIOLATION_KINDS:
            raise ValueError(f"unknown violation kind {self.kind!r}")
        if not self.message:
            raise ValueError("violation message must be nonempty")

    def __str__(self):
        where = f"day {self.day} " if self.day is not None else ""
        return f"{where}{self.field}: {self.message}"

    def to_dict(self) -> dict:
        return {"day": self.day, "field": self.field, "kind": self.kind, "message": self.message}


@dataclass(frozen=True)
class ReformatFailure:
    """Generator output that could not be turned into a schema-valid plan."""

    kind: str  # no_json_found | invalid_json | schema_violation
    message: str
    violations: tuple[SchemaViolation, ...] = ()
    raw: str = field(default="", repr=False)

    def describe(self) -> list[str]:
        if self.violations:
            return [str(v) for v in self.violations]
        return [self.message]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "violations": [v.to_dict() for v in self.violations],
        }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_schema(doc) -> list[SchemaViolation]:
    """Check a parsed document against the itinerary schema.

    Returns an empty list iff ``doc`` is a list of objects each carrying all
    nine keys with well-typed values, days numbered 1..n consecutively and
    a single party size.  Unknown extra keys are tolerated.
    """
    if not isinstance(doc, list):
        return [SchemaViolation("plan", "wrong_type", f"expected a list of day objects, got {type(doc).__name__}")]
    out: list[SchemaViolation] = []
    day_numbers: list[int] = []
    party_sizes: list[tuple[int, int]] = []
    for pos, item in enumerate(doc, start=1):
        if not isinstance(item, dict):
            out.append(SchemaViolation("day", "wrong_type", f"entry {pos} is not an object", day=pos))
            continue
        label = item.get("day") if _is_int(item.get("day")) else pos
        for key in PLAN_KEYS:
            if key not in item:
                out.append(SchemaViolation(key, "missing_key", f"missing key '{key}'", day=label))
                continue
            value = item[key]
            if key in INT_KEYS:
                if not _is_int(value):
                    out.append(SchemaViolation(key, "wrong_type", f"'{key}' must be an integer, got {value!r}", day=label))
                elif value < 1:
                    out.append(SchemaViolation(key, "malformed_value", f"'{key}' must be >= 1, got {value}", day=label))
                elif key == "day":
                    day_numbers.append(value)
                else:
                    party_sizes.append((label, value))
            elif not isinstance(value, str):
                out.append(SchemaViolation(key, "wrong_type", f"'{key}' must be a string, got {value!r}", day=label))
            elif not value.strip():
                out.append(SchemaViolation(key, "malformed_value", f"'{key}' is empty; use '{EMPTY}' for nothing", day=label))
    if len(day_numbers) == len(doc) and day_numbers != list(range(1, len(doc) + 1)):
        out.append(SchemaViolation(
            "day", "bad_day_sequence",
            f"days must be numbered 1..{len(doc)} in order, got {day_numbers}",
        ))
    if party_sizes:
        first = party_sizes[0][1]
        for label, size in party_sizes[1:]:
            if size != first:
                out.append(SchemaViolation(
                    "people_number", "malformed_value",
                    f"people_number {size} differs from day 1's {first}", day=label,
                ))
    return out


def serialize_plan(it: Itinerary) -> str:
    """Canonical JSON text with fixed key order; byte-stable for equal plans."""
    return json.dumps(it.to_list(), indent=2, ensure_ascii=False)


_FENCE = re.compile(r"```[ \t]*(?:json|JSON)?[ \t]*\n(.*?)```", re.S)


def _find_json(text: str):
    """Return (document, saw_json_like_text)."""
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    decoder = json.JSONDecoder()
    for cand in candidates:
        try:
            return json.loads(cand.strip()), True
        except json.JSONDecodeError:
            pass
    fallback = None
    for cand in candidates:
        for m in re.finditer(r"[\[{]", cand):
            try:
                doc, _ = decoder.raw_decode(cand, m.start())
            except json.JSONDecodeError:
                continue
            if isinstance(doc, list) or (isinstance(doc, dict) and any(k in doc for k in _WRAPPER_KEYS)):
                return doc, True
            if fallback is None and isinstance(doc, dict):
                fallback = doc
    if fallback is not None:
        return fallback, True
    return None, bool(_FENCE.search(text) or re.search(r"[\[{]", text))


def _unwrap(doc):
    if isinstance(doc, dict):
        for key in _WRAPPER_KEYS:
            if isinstance(doc.get(key), list):
                return doc[key]
    return doc


REWRITE_PROMPT = """Convert the travel plan below into JSON. Output only a JSON array with one
object per day, each having exactly these keys in this order:
{keys}.
"day" and "people_number" are integers; every other value is a string, using "-"
when nothing is planned for that slot. Do not add, drop or change any plan details.

Plan:
{text}
"""


def rewrite_prompt(text: str) -> str:
    return REWRITE_PROMPT.format(keys=", ".join(PLAN_KEYS), text=text)


def parse_plan_text(text: str, rewriter=None) -> Itinerary | ReformatFailure:
    """Turn generator text into an :class:`Itinerary`.

    JSON is extracted deterministically (markdown fences and surrounding
    chatter are tolerated).  Only if no JSON can be found and ``rewriter``
    (any object with ``generate(prompt) -> str``) is supplied is the text
    sent out once to be rewritten as JSON.
    """
    doc, saw_json = _find_json(text or "")
    if doc is None:
        if rewriter is not None:
            rewritten = parse_plan_text(rewriter.generate(rewrite_prompt(text or "")))
            if isinstance(rewritten, Itinerary):
                return rewritten
        if saw_json:
            return ReformatFailure("invalid_json", "the plan is not syntactically valid JSON", raw=text or "")
        return ReformatFailure("no_json_found", "no JSON plan found in the response", raw=text or "")
    doc = _unwrap(doc)
    violations = validate_schema(doc)
    if violations:
        return ReformatFailure(
            "schema_violation",
            f"the plan JSON has {len(violations)} schema violation(s)",
            tuple(violations),
            raw=text,
        )
    return Itinerary.from_list(doc)


# --- field grammars -------------------------------------------------------

_FROM_TO = re.compile(r"^\s*from\s+(?P<a>.+?)\s+to\s+(?P<b>.+?)\s*$", re.I)
_LEG = re.compile(r"\bfrom\s+(?P<a>.+?)\s+to\s+(?P<b>[^,]+?)\s*(?=,|$)", re.I)
_FLIGHT_NO = re.compile(r"Flight Number:\s*(?P<v>[^,]+?)\s*(?=,|$)", re.I)
_DEPART = re.compile(r"Departure Time:\s*(?P<v>\d{1,2}:\d{2})", re.I)
_ARRIVE = re.compile(r"Arrival Time:\s*(?P<v>\d{1,2}:\d{2})", re.I)
_MODE_WORDS = {"flight": "flight", "taxi": "taxi", "self-driving": "self-driving", "self driving": "self-driving"}


def is_empty(value: str) -> bool:
    return value.strip() in ("", EMPTY)


def city_span(current_city: str) -> tuple[str, str]:
    """(start, end) city of a day; equal unless the day reads ``from A to B``."""
    m = _FROM_TO.match(current_city)
    if m:
        return m.group("a").strip(), m.group("b").strip()
    city = current_city.strip()
    return city, city


def is_travel_day(current_city: str) -> bool:
    return _FROM_TO.match(current_city) is not None


@dataclass(frozen=True)
class Leg:
    mode: str
    origin: str
    dest: str
    flight_number: str | None = None
    departure: time | None = None
    arrival: time | None = None


def parse_transportation(text: str) -> Leg | None:
    """Parse ``<mode>, from <A> to <B>[, Flight Number: X, Departure Time: hh:mm, Arrival Time: hh:mm]``.

    The benchmark's ``Flight Number: X, from A to B, ...`` ordering is also
    accepted.  Returns None when the text does not follow the grammar.
    """
    if is_empty(text):
        return None
    head = text.split(",", 1)[0].strip().lower()
    number = _FLIGHT_NO.search(text)
    if head in _MODE_WORDS:
        mode = _MODE_WORDS[head]
    elif head.startswith("flight number"):
        mode = "flight"
    else:
        return None
    leg = _LEG.search(text)
    if leg is None:
        return None
    if mode == "flight" and number is None:
        return None
    try:
        dep = parse_clock(_DEPART.search(text).group("v")) if _DEPART.search(text) else None
        arr = parse_clock(_ARRIVE.search(text).group("v")) if _ARRIVE.search(text) else None
    except ValueError:
        return None
    return Leg(
        mode=mode,
        origin=leg.group("a").strip(),
        dest=leg.group("b").strip(),
        flight_number=number.group("v").strip() if number else None,
        departure=dep,
        arrival=arr,
    )


def format_leg(leg: Leg) -> str:
    label = {"flight": "Flight", "taxi": "Taxi", "self-driving": "Self-driving"}[leg.mode]
    parts = [label, f"from {leg.origin} to {leg.dest}"]
    if leg.flight_number:
        parts.append(f"Flight Number: {leg.flight_number}")
    if leg.departure:
        parts.append(f"Departure Time: {leg.departure:%H:%M}")
    if leg.arrival:
        parts.append(f"Arrival Time: {leg.arrival:%H:%M}")
    return ", ".join(parts)


def split_entity(text: str, cities: Sequence[str]) -> tuple[str, str | None]:
    """Split ``"Name, City"`` when the trailing part names one of ``cities``."""
    text = text.strip()
    if "," in text:
        name, tail = text.rsplit(",", 1)
        keys = {normalize_city(c) for c in cities}
        if normalize_city(tail) in keys:
            return name.strip(), tail.strip()
    return text, None


def split_attractions(text: str) -> list[str]:
    if is_empty(text):
        return []
    return [part.strip() for part in text.split(";") if part.strip() and part.strip() != EMPTY]


def trip_dates(days: int, start: date) -> tuple[date, ...]:
    return tuple(start + timedelta(days=i) for i in range(days))
