"""Structured travel queries and their recovery from natural language."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from decimal import Decimal

from .sandbox import money

CUISINES = ("Chinese", "American", "Italian", "Mexican", "Indian", "Mediterranean", "French")
ROOM_TYPES = ("entire room", "private room", "shared room", "not shared room")
HOUSE_RULES = ("parties", "smoking", "children under 10", "pets", "visitors")
TRANSPORT_RULES = ("no flight", "no self-driving", "no taxi")


class QueryError(ValueError):
    """A query violates its invariants or its text could not be parsed."""


class QueryExtractionError(QueryError):
    """The generator never produced a valid set of query fields."""


@dataclass(frozen=True)
class LocalConstraint:
    house_rule: str | None = None
    cuisine: frozenset[str] | None = None
    room_type: str | None = None
    transportation: str | None = None

    def __post_init__(self):
        if self.cuisine is not None:
            object.__setattr__(self, "cuisine", frozenset(self.cuisine) or None)

    def is_empty(self) -> bool:
        return not (self.house_rule or self.cuisine or self.room_type or self.transportation)

    def to_dict(self) -> dict:
        return {
            "house_rule": self.house_rule,
            "cuisine": sorted(self.cuisine) if self.cuisine else None,
            "room_type": self.room_type,
            "transportation": self.transportation,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "LocalConstraint | None":
        if not d:
            return None

        def pick(*keys):
            for k in keys:
                v = d.get(k)
                if v not in (None, "", [], "null", "None"):
                    return v
            return None

        cuisine = pick("cuisine")
        if isinstance(cuisine, str):
            cuisine = [c.strip() for c in re.split(r"[,;]", cuisine) if c.strip()]
        lc = cls(
            house_rule=pick("house_rule", "house rule"),
            cuisine=frozenset(cuisine) if cuisine else None,
            room_type=pick("room_type", "room type"),
            transportation=pick("transportation"),
        )
        return None if lc.is_empty() else lc


@dataclass(frozen=True)
class Query:
    org: str
    dest: str
    days: int
    visiting_city_number: int
    people_number: int
    budget: Decimal
    date_range: tuple[date, ...]
    local_constraint: LocalConstraint | None = None
    query_id: str | None = field(default=None, compare=False)
    text: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "date_range", tuple(self.date_range))
        object.__setattr__(self, "budget", money(self.budget))
        if self.local_constraint is not None and self.local_constraint.is_empty():
            object.__setattr__(self, "local_constraint", None)
        for name in ("days", "visiting_city_number", "people_number"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise QueryError(f"{name} must be a positive integer, got {value!r}")
        if self.budget <= 0:
            raise QueryError(f"budget must be positive, got {self.budget}")
        if len(self.date_range) != self.days:
            raise QueryError(f"{self.days}-day trip needs {self.days} dates, got {len(self.date_range)}")
        if not self.org.strip() or not self.dest.strip():
            raise QueryError("origin and destination must be nonempty")

    @property
    def constraints(self) -> LocalConstraint:
        return self.local_constraint or LocalConstraint()

    def to_dict(self) -> dict:
        budget = int(self.budget) if self.budget == self.budget.to_integral() else float(self.budget)
        d = {
            "org": self.org,
            "dest": self.dest,
            "days": self.days,
            "visiting_city_number": self.visiting_city_number,
            "people_number": self.people_number,
            "local_constraint": self.local_constraint.to_dict() if self.local_constraint else None,
            "budget": budget,
            "date_range": [d.isoformat() for d in self.date_range],
        }
        if self.query_id is not None:
            d = {"query_id": self.query_id, **d}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Query":
        """Build from structured fields; benchmark spellings (``date``, ``house rule``) are accepted."""
        try:
            dates = d.get("date_range", d.get("date"))
            if isinstance(dates, str):
                dates = json.loads(dates) if dates.strip().startswith("[") else [dates]
            lc = d.get("local_constraint")
            if isinstance(lc, str):
                lc = json.loads(lc) if lc.strip().startswith("{") else None
            qid = d.get("query_id", d.get("idx", d.get("id")))
            return cls(
                org=str(d["org"]).strip(),
                dest=str(d["dest"]).strip(),
                days=_as_int(d["days"]),
                visiting_city_number=_as_int(d.get("visiting_city_number", 1)),
                people_number=_as_int(d.get("people_number", 1)),
                budget=money(d["budget"]),
                date_range=tuple(date.fromisoformat(str(x)) for x in dates or ()),
                local_constraint=LocalConstraint.from_dict(lc),
                query_id=None if qid is None else str(qid),
                text=d.get("query", d.get("text")),
            )
        except KeyError as exc:
            raise QueryError(f"missing query field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, QueryError):
                raise
            raise QueryError(str(exc)) from exc


def _as_int(value) -> int:
    if isinstance(value, bool):
        raise QueryError(f"expected an integer, got {value!r}")
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and value.strip().isdigit():
        return int(value)
    if not isinstance(value, int):
        raise QueryError(f"expected an integer, got {value!r}")
    return value


# --- natural-language parsing --------------------------------------------

_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6, "seven": 7,
    "eight": 8, "nine": 9, "ten": 10, "single": 1, "a": 1, "an": 1,
}
_MONTHS = {
    m: i for i, m in enumerate(
        ["january", "february", "march", "april", "may", "june", "july",
         "august", "september", "october", "november", "december"], start=1)
}
_NUM = r"(?:\d+|one|two|three|four|five|six|seven|eight|nine|ten)"
_MONTH = r"(?:January|February|March|April|May|June|July|August|September|October|November|December)"
_ORD = r"(?:st|nd|rd|th)?"
_CITY_END = (
    r"(?=(?<!\bSt)(?<!\bFt)(?<!\bMt)\.(?:\s|$)|,|\?|!|;|$|"
    r"\s(?:spanning|for|with|over|running|from|on|lasting|during|between|starting|departing|this|next|and|in\s+" + _MONTH + r")\b)"
)
_ROUTE = re.compile(r"\bfrom\s+(?!" + _MONTH + r"\b)(?P<org>[A-Z][\w.'’ -]*?)\s+to\s+(?P<dest>[A-Z][\w.'’ -]*?)" + _CITY_END)
_TOUR = re.compile(
    r"\b(?:begins?|starts?|starting|departs?|departing)\s+(?:in|from|at)\s+(?P<org>[A-Z][\w.'’ -]*?)\s+"
    r"and\s+(?:\w+\s+){0,3}?(?:visits?|visiting|tour(?:s|ing)?|cover(?:s|ing)?)\s+(?:to\s+)?"
    r"(?P<n>" + _NUM + r")\s+(?:different\s+|distinct\s+)?cities\s+in\s+(?P<dest>[A-Z][\w.'’ -]*?)" + _CITY_END
)
_DAYS = re.compile(
    r"\b(?P<n>" + _NUM + r")[- ]day\b|\b(?:spanning|over|for|lasting|of|is)\s+(?:a\s+period\s+of\s+)?(?P<m>" + _NUM + r")\s+days\b",
    re.I,
)
_DATES = re.compile(
    r"\b(?P<m1>" + _MONTH + r")\s+(?P<d1>\d{1,2})" + _ORD + r"(?:,?\s*(?P<y1>\d{4}))?\s*(?:to|through|until|and|-|–)\s*"
    r"(?:(?P<m2>" + _MONTH + r")\s+)?(?P<d2>\d{1,2})" + _ORD + r",?\s*(?P<y2>\d{4})"
)
_GROUP = re.compile(r"\b(?:group\s+of\s+)?(?P<n>" + _NUM + r")\s+(?:people|persons|travelers|travellers|individuals|adults|guests)\b", re.I)
_BUDGET = re.compile(r"\$\s?(?P<v>\d[\d,]*(?:\.\d+)?)")
_CITY_COUNT = re.compile(r"\b(?P<n>" + _NUM + r")\s+(?:different\s+|distinct\s+)?cities\b", re.I)
_NO_PREFS = re.compile(r"\bno\s+(?:specific\s+|particular\s+|special\s+)?preferences?\b", re.I)
_ROOM = re.compile(r"\b(?P<neg>not\s+(?:be\s+)?)?(?P<kind>entire|private|shared)\s+rooms?\b", re.I)
_HOUSE = re.compile(
    r"\b(?:allow(?:s|ing)?|permit(?:s|ting)?|accept(?:s|ing)?)\s+(?P<rule>parties|smoking|pets|visitors|children\s+under\s+10)\b|"
    r"\b(?P<petfriendly>pet[- ]friendly)\b|\b(?P<smokefriendly>smoking[- ]friendly)\b",
    re.I,
)
_NO_TRANSPORT = re.compile(
    r"\b(?:no|not|never|without|avoid(?:ing)?|won't|will\s+not|do\s+not|don't|prefer\s+not\s+to)\b"
    r"[^.;]*?\b(?P<mode>flights?|fly|flying|self-driving|self\s+driving|drive|driving|taxis?)\b",
    re.I,
)


def _num(token: str) -> int:
    token = token.lower()
    return int(token) if token.isdigit() else _NUMBER_WORDS[token]


def _sentences(text: str) -> list[str]:
    return [s for s in re.split(r"(?<=[.?!])\s+(?=[A-Z])", text) if s.strip()]


def parse_query(text: str) -> Query:
    """Parse a templated natural-language travel request.

    Clauses are matched in order (route, duration, dates, budget); the first
    one that cannot be found is named in the error.  An unstated party size
    means a single traveler.
    """
    if not text or not text.strip():
        raise QueryError("empty query text")
    text = " ".join(text.split())

    tour = _TOUR.search(text)
    route = _ROUTE.search(text)
    if tour:
        org, dest, n_cities = tour.group("org").strip(), tour.group("dest").strip(), _num(tour.group("n"))
    elif route:
        org, dest = route.group("org").strip(), route.group("dest").strip()
        count = _CITY_COUNT.search(text)
        n_cities = _num(count.group("n")) if count else 1
    else:
        raise QueryError("could not find the route clause ('from <origin> to <destination>')")

    days_m = _DAYS.search(text)
    if not days_m:
        raise QueryError("could not find the trip-length clause ('<n>-day' or 'spanning <n> days')")
    days = _num(days_m.group("n") or days_m.group("m"))

    dates_m = _DATES.search(text)
    if not dates_m:
        raise QueryError("could not find the date clause ('from <Month> <d> to <d>, <yyyy>')")
    year = int(dates_m.group("y1") or dates_m.group("y2"))
    start = date(year, _MONTHS[dates_m.group("m1").lower()], int(dates_m.group("d1")))
    end_month = _MONTHS[(dates_m.group("m2") or dates_m.group("m1")).lower()]
    end = date(int(dates_m.group("y2")), end_month, int(dates_m.group("d2")))
    span = (end - start).days + 1
    if span != days:
        raise QueryError(f"date clause covers {span} days but the trip is {days} days")
    date_range = tuple(start + timedelta(days=i) for i in range(days))

    group = _GROUP.search(text)
    if group:
        people = _num(group.group("n"))
    else:
        # requests that never mention the party are for one traveler
        people = 1

    budget_m = _BUDGET.search(text)
    if not budget_m:
        raise QueryError("could not find the budget clause ('$<amount>')")

    return Query(
        org=org,
        dest=dest,
        days=days,
        visiting_city_number=n_cities,
        people_number=people,
        budget=money(budget_m.group("v")),
        date_range=date_range,
        local_constraint=_local_constraint(text),
        text=text,
    )


def _local_constraint(text: str) -> LocalConstraint | None:
    cuisine: set[str] = set()
    room = house = transport = None
    for sentence in _sentences(text):
        if _NO_PREFS.search(sentence):
            continue
        if re.search(r"cuisine|food|dishes|dining|restaurants?", sentence, re.I):
            cuisine.update(c for c in CUISINES if re.search(rf"\b{c}\b", sentence, re.I))
        m = _ROOM.search(sentence)
        if m and room is None:
            kind = m.group("kind").lower()
            room = "not shared room" if m.group("neg") and kind == "shared" else f"{kind} room"
        m = _HOUSE.search(sentence)
        if m and house is None:
            if m.group("petfriendly"):
                house = "pets"
            elif m.group("smokefriendly"):
                house = "smoking"
            else:
                house = " ".join(m.group("rule").lower().split())
        m = _NO_TRANSPORT.search(sentence)
        if m and transport is None:
            mode = m.group("mode").lower()
            if mode.startswith("fl"):
                transport = "no flight"
            elif mode.startswith("taxi"):
                transport = "no taxi"
            else:
                transport = "no self-driving"
    lc = LocalConstraint(house, frozenset(cuisine) or None, room, transport)
    return None if lc.is_empty() else lc


# --- generator-backed extraction ----------------------------------------

EXTRACTION_PROMPT = """Extract the structured fields of the travel request below.
Reply with a single JSON object and nothing else, using exactly these keys:
  "org": origin city (string)
  "dest": destination city, or the state/region for multi-city trips (string)
  "days": trip length in days (integer >= 1)
  "visiting_city_number": number of destination cities to visit (integer >= 1)
  "people_number": number of travelers (integer >= 1)
  "budget": total budget in dollars (number > 0)
  "date_range": list of ISO dates (YYYY-MM-DD), one per trip day
  "local_constraint": null, or an object with keys "house_rule" (one of {house}),
      "cuisine" (list drawn from {cuisines}), "room_type" (one of {rooms}),
      "transportation" (one of {transport}); use null for any unstated preference.

Request:
{text}
"""


def extraction_prompt(text: str) -> str:
    return EXTRACTION_PROMPT.format(
        text=text,
        house=", ".join(HOUSE_RULES),
        cuisines=", ".join(CUISINES),
        rooms=", ".join(ROOM_TYPES),
        transport=", ".join(TRANSPORT_RULES),
    )


def _first_object(reply: str) -> dict:
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", reply):
        try:
            doc, _ = decoder.raw_decode(reply, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(doc, dict):
            return doc
    raise QueryError("reply contains no JSON object")


def extract_query_fields(text: str, gen, max_extract_retries: int = 2) -> Query:
    """Ask ``gen`` for the query fields, re-asking with the error on invalid replies.

    At most ``1 + max_extract_retries`` generator calls are made.
    """
    prompt = extraction_prompt(text)
    last_error = None
    for _ in range(1 + max_extract_retries):
        reply = gen.generate(prompt)
        try:
            q = Query.from_dict(_first_object(reply))
        except QueryError as exc:
            last_error = exc
            prompt = (
                extraction_prompt(text)
                + f"\nYour previous reply was rejected: {exc}. Reply again with corrected JSON.\n"
            )
            continue
        return Query(**{**q.__dict__, "text": text})
    raise QueryExtractionError(
        f"no valid query after {1 + max_extract_retries} attempts: {last_error}"
    )
