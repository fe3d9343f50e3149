"""Binary plan critics and the cost model behind the budget check.

Every critic is a pure function of (plan, query, sandbox) that returns a
pass/fail verdict; a failing verdict carries a backprompt naming the
violated constraint and the offending values, one ``- `` bullet per
problem.  Critics are registered in a fixed order which is also the order
their verdicts and backprompts appear in.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources
from types import MappingProxyType
from typing import Callable, Mapping, Sequence

from .plan import (
    MEALS,
    DayPlan,
    Itinerary,
    ReformatFailure,
    city_span,
    is_empty,
    is_travel_day,
    parse_transportation,
    split_attractions,
    split_entity,
    validate_schema,
)
from .query import Query
from .sandbox import (
    ACCOMMODATION_COLUMNS,
    ATTRACTION_COLUMNS,
    CENT,
    DISTANCE_COLUMNS,
    FLIGHT_COLUMNS,
    RESTAURANT_COLUMNS,
    AccommodationRecord,
    AttractionRecord,
    LookupFailure,
    RestaurantRecord,
    Sandbox,
    find_accommodations,
    find_attractions,
    find_distance,
    find_flight_by_number,
    find_restaurants,
    get_cost_of_transport,
    normalize_city,
    normalize_name,
)

GROUPS = ("format", "commonsense", "hard")
SELECTORS = ("all", "common", "hard", "json")

DEFAULT_OPTIONAL_MEALS = MappingProxyType({"first": frozenset({"breakfast"}), "last": frozenset({"dinner"})})
STRICT_MEALS = MappingProxyType({})


@dataclass(frozen=True)
class CriticConfig:
    """Tunable critic policy.

    ``optional_meals`` maps ``"first"``/``"last"`` (trip day position) to the
    meal slots that may hold ``"-"`` on that day; every other meal is required.
    """

    optional_meals: Mapping[str, frozenset[str]] = DEFAULT_OPTIONAL_MEALS
    forbid_mode_conflict: bool = True


DEFAULT_CONFIG = CriticConfig()


@dataclass(frozen=True)
class CriticVerdict:
    critic_id: str
    group: str
    passed: bool
    backprompt: str = ""

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown critic group {self.group!r}")
        if self.passed == bool(self.backprompt):
            raise ValueError("a verdict carries a backprompt iff it fails")

    def to_dict(self) -> dict:
        return {
            "critic_id": self.critic_id,
            "group": self.group,
            "passed": self.passed,
            "backprompt": self.backprompt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriticVerdict":
        return cls(d["critic_id"], d["group"], bool(d["passed"]), d.get("backprompt", ""))


# --- entity resolution -----------------------------------------------------


def day_cities(day: DayPlan) -> list[str]:
    start, end = city_span(day.current_city)
    return [start] if normalize_city(start) == normalize_city(end) else [start, end]


def night_city(day: DayPlan) -> str:
    return city_span(day.current_city)[1]


def _lookup(records_for: Callable, text: str, cities: Sequence[str]):
    name, city = split_entity(text, cities)
    wanted = normalize_name(name)
    for c in [city] if city else cities:
        for rec in records_for(c):
            if normalize_name(rec.name) == wanted:
                return rec
    return None


def resolve_restaurant(sb: Sandbox, text: str, cities: Sequence[str]) -> RestaurantRecord | None:
    return _lookup(lambda c: find_restaurants(sb, c), text, cities)


def resolve_attraction(sb: Sandbox, text: str, cities: Sequence[str]) -> AttractionRecord | None:
    return _lookup(lambda c: find_attractions(sb, c), text, cities)


def resolve_accommodation(sb: Sandbox, text: str, city: str) -> AccommodationRecord | None:
    return _lookup(lambda c: find_accommodations(sb, c), text, [city])


def _restaurant_key(day: DayPlan, value: str) -> str:
    return normalize_name(split_entity(value, day_cities(day))[0])


# --- cost ------------------------------------------------------------------


def leg_cost(sb: Sandbox, day: DayPlan) -> Decimal:
    leg = parse_transportation(day.transportation)
    if leg is None:
        return Decimal("0.00")
    try:
        return get_cost_of_transport(
            sb, leg.origin, leg.dest, leg.mode, day.people_number, leg.flight_number,
        )
    except LookupFailure:
        return Decimal("0.00")


def get_total_cost(it: Itinerary, q: Query, sb: Sandbox) -> Decimal:
    """Total trip cost for the party named in the plan.

    Transport legs via :func:`get_cost_of_transport`, each meal at the
    restaurant's average cost per person, each night at the room price
    times the number of rooms the party needs.  Names the sandbox does not
    know contribute nothing (the itinerary validator reports them).
    """
    total = Decimal("0.00")
    for day in it:
        people = day.people_number
        total += leg_cost(sb, day)
        cities = day_cities(day)
        for meal in MEALS:
            value = getattr(day, meal)
            if is_empty(value):
                continue
            rec = resolve_restaurant(sb, value, cities)
            if rec is not None:
                total += rec.average_cost * people
        if not is_empty(day.accommodation):
            rec = resolve_accommodation(sb, day.accommodation, night_city(day))
            if rec is not None:
                total += rec.price * math.ceil(people / rec.maximum_occupancy)
    return total.quantize(CENT)


# --- individual checks -------------------------------------------------------
# Each returns a list of problem descriptions; an empty list means pass.


def check_format(plan, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    if isinstance(plan, ReformatFailure):
        return plan.describe()
    return [str(v) for v in validate_schema(plan.to_list())]


def check_complete_information(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    problems = []
    n = len(it)
    for day in it:
        optional: set[str] = set()
        if day.day == 1:
            optional |= set(cfg.optional_meals.get("first", ()))
        if day.day == n:
            optional |= set(cfg.optional_meals.get("last", ()))
        if is_empty(day.current_city):
            problems.append(f"day {day.day} current_city: missing")
        for meal in MEALS:
            if is_empty(getattr(day, meal)) and meal not in optional:
                problems.append(f"day {day.day} {meal}: missing")
        if not split_attractions(day.attraction):
            problems.append(f"day {day.day} attraction: missing")
        if day.day < n and is_empty(day.accommodation):
            problems.append(f"day {day.day} accommodation: missing although the trip continues")
    return problems


def check_diverse_restaurants(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    seen: dict[str, list[str]] = {}
    names: dict[str, str] = {}
    for day in it:
        for meal in MEALS:
            value = getattr(day, meal)
            if is_empty(value):
                continue
            key = _restaurant_key(day, value)
            names.setdefault(key, split_entity(value, day_cities(day))[0])
            seen.setdefault(key, []).append(f"day {day.day} {meal}")
    return [
        f"restaurant '{names[k]}' is repeated: {', '.join(slots)}"
        for k, slots in seen.items() if len(slots) > 1
    ]


def check_diverse_attractions(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    seen: dict[str, list[str]] = {}
    names: dict[str, str] = {}
    for day in it:
        for item in split_attractions(day.attraction):
            name = split_entity(item, day_cities(day))[0]
            key = normalize_name(name)
            names.setdefault(key, name)
            seen.setdefault(key, []).append(f"day {day.day}")
    return [
        f"attraction '{names[k]}' is repeated: {', '.join(slots)}"
        for k, slots in seen.items() if len(slots) > 1
    ]


def _route_problems(it: Itinerary, q: Query) -> list[str]:
    problems = []
    spans = [city_span(d.current_city) for d in it]
    if normalize_city(spans[0][0]) != normalize_city(q.org):
        problems.append(f"day 1 current_city: the trip must start in {q.org}, not {spans[0][0]}")
    if normalize_city(spans[-1][1]) != normalize_city(q.org):
        problems.append(f"day {len(it)} current_city: the trip must end back in {q.org}, not {spans[-1][1]}")
    for i in range(len(spans) - 1):
        if normalize_city(spans[i][1]) != normalize_city(spans[i + 1][0]):
            problems.append(
                f"day {i + 2} current_city: day {i + 1} ends in {spans[i][1]} "
                f"but day {i + 2} starts in {spans[i + 1][0]}"
            )
    visited: dict[str, str] = {}
    for start, end in spans:
        for c in (start, end):
            if normalize_city(c) != normalize_city(q.org):
                visited.setdefault(normalize_city(c), c)
    if len(visited) != q.visiting_city_number:
        problems.append(
            f"the trip visits {len(visited)} cities ({', '.join(visited.values()) or 'none'}) "
            f"but the query asks for {q.visiting_city_number}"
        )
    elif q.visiting_city_number == 1 and normalize_city(q.dest) not in visited:
        problems.append(f"the trip visits {', '.join(visited.values())} but the destination is {q.dest}")
    return problems


def _leg_problems(day: DayPlan, q: Query, sb: Sandbox) -> list[str]:
    text = day.transportation
    travel = is_travel_day(day.current_city)
    start, end = city_span(day.current_city)
    if is_empty(text):
        return [f"day {day.day} transportation: missing for travel from {start} to {end}"] if travel else []
    leg = parse_transportation(text)
    if leg is None:
        return [f"day {day.day} transportation: '{text}' could not be understood"]
    if not travel or normalize_city(leg.origin) != normalize_city(start) or normalize_city(leg.dest) != normalize_city(end):
        return [
            f"day {day.day} transportation: goes from {leg.origin} to {leg.dest} "
            f"but current_city is '{day.current_city}'"
        ]
    if leg.mode == "flight":
        when = q.date_range[day.day - 1] if day.day <= len(q.date_range) else None
        rec = find_flight_by_number(sb, leg.origin, leg.dest, leg.flight_number, when)
        if rec is None:
            on = f" on {when.isoformat()}" if when else ""
            return [f"day {day.day} transportation: flight {leg.flight_number} from {leg.origin} to {leg.dest}{on} does not exist"]
        out = []
        if leg.departure and leg.departure != rec.dep_time:
            out.append(f"day {day.day} transportation: flight {rec.flight_number} departs at {rec.dep_time:%H:%M}, not {leg.departure:%H:%M}")
        if leg.arrival and leg.arrival != rec.arr_time:
            out.append(f"day {day.day} transportation: flight {rec.flight_number} arrives at {rec.arr_time:%H:%M}, not {leg.arrival:%H:%M}")
        return out
    rec = find_distance(sb, leg.origin, leg.dest)
    if rec is None or leg.mode not in rec.available_modes:
        return [f"day {day.day} transportation: no {leg.mode} route from {leg.origin} to {leg.dest}"]
    return []


def check_itinerary(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    if len(it) != q.days:
        return [f"the plan has {len(it)} days but the query asks for {q.days}"]
    problems = []
    if it[0].people_number != q.people_number:
        problems.append(f"the plan is for {it[0].people_number} people but the query has {q.people_number}")
    problems += _route_problems(it, q)
    for day in it:
        problems += _leg_problems(day, q, sb)
        cities = day_cities(day)
        where = " or ".join(cities)
        for meal in MEALS:
            value = getattr(day, meal)
            if not is_empty(value) and resolve_restaurant(sb, value, cities) is None:
                problems.append(f"day {day.day} {meal}: '{value}' is not a restaurant in {where}")
        for item in split_attractions(day.attraction):
            if resolve_attraction(sb, item, cities) is None:
                problems.append(f"day {day.day} attraction: '{item}' is not an attraction in {where}")
        if not is_empty(day.accommodation) and resolve_accommodation(sb, day.accommodation, night_city(day)) is None:
            problems.append(f"day {day.day} accommodation: '{day.accommodation}' is not available in {night_city(day)}")
    return problems


_ROOM_TYPE_MATCH = {
    "entire room": lambda t: t == "entire home/apt",
    "private room": lambda t: t == "private room",
    "shared room": lambda t: t == "shared room",
    "not shared room": lambda t: t != "shared room",
}


def room_type_ok(required: str, room_type: str) -> bool:
    required = normalize_name(required)
    actual = normalize_name(room_type)
    match = _ROOM_TYPE_MATCH.get(required)
    return match(actual) if match else actual == required


def house_rule_ok(rule: str, house_rules: str) -> bool:
    return f"no {normalize_name(rule)}" not in normalize_name(house_rules)


def check_accommodation(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    lc = q.constraints
    problems = []
    runs: list[list] = []  # [record, first_day, nights]
    for day in it:
        if is_empty(day.accommodation):
            runs.append([None, day.day, 0])
            continue
        rec = resolve_accommodation(sb, day.accommodation, night_city(day))
        if rec is None:
            problems.append(f"day {day.day} accommodation: '{day.accommodation}' is not available in {night_city(day)}")
            runs.append([None, day.day, 0])
            continue
        if lc.room_type and not room_type_ok(lc.room_type, rec.room_type):
            problems.append(
                f"day {day.day} accommodation: '{rec.name}' is a {rec.room_type} "
                f"but the query requires {lc.room_type}"
            )
        if lc.house_rule and not house_rule_ok(lc.house_rule, rec.house_rules):
            problems.append(
                f"day {day.day} accommodation: '{rec.name}' does not allow {lc.house_rule} "
                f"(house rules: {rec.house_rules})"
            )
        if runs and runs[-1][0] is rec:
            runs[-1][2] += 1
        else:
            runs.append([rec, day.day, 1])
    for rec, first, nights in runs:
        if rec is not None and nights < rec.minimum_nights:
            problems.append(
                f"day {first} accommodation: '{rec.name}' requires at least {rec.minimum_nights} "
                f"nights but is booked for {nights}"
            )
    return problems


def check_cuisine(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    required = q.constraints.cuisine
    if not required:
        return []
    served: set[str] = set()
    for day in it:
        for meal in MEALS:
            value = getattr(day, meal)
            if is_empty(value):
                continue
            rec = resolve_restaurant(sb, value, day_cities(day))
            if rec is not None:
                served |= {c.casefold() for c in rec.cuisines}
    missing = sorted(c for c in required if c.casefold() not in served)
    if missing:
        return [f"required cuisine {c} is not served by any chosen restaurant" for c in missing]
    return []


def _forbidden_mode(rule: str | None) -> str | None:
    if not rule:
        return None
    rule = normalize_name(rule)
    for mode in ("self-driving", "flight", "taxi"):
        if rule in (f"no {mode}", f"no {mode}s"):
            return mode
    return None


def check_transportation(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    forbidden = _forbidden_mode(q.constraints.transportation)
    problems = []
    used: dict[str, int] = {}
    for day in it:
        if is_empty(day.transportation):
            continue
        leg = parse_transportation(day.transportation)
        if leg is None:
            problems.append(
                f"day {day.day} transportation: '{day.transportation}' could not be understood; expected "
                "'<Flight|Taxi|Self-driving>, from <A> to <B>[, Flight Number: <id>, Departure Time: <hh:mm>, Arrival Time: <hh:mm>]'"
            )
            continue
        used.setdefault(leg.mode, day.day)
        if leg.mode == forbidden:
            problems.append(f"day {day.day} transportation: uses {leg.mode} but the query says {q.constraints.transportation}")
    if cfg.forbid_mode_conflict and "flight" in used and "self-driving" in used:
        problems.append(
            f"day {used['self-driving']} transportation: the trip mixes self-driving (day {used['self-driving']}) "
            f"and flight (day {used['flight']}); a car cannot be left behind"
        )
    return problems


def check_budget(it: Itinerary, q: Query, sb: Sandbox, cfg: CriticConfig) -> list[str]:
    total = get_total_cost(it, q, sb)
    if total <= q.budget:
        return []
    return [f"total cost {total} exceeds the budget {q.budget} by {total - q.budget}"]


# --- registry ----------------------------------------------------------------


@dataclass(frozen=True)
class Critic:
    critic_id: str
    group: str
    title: str
    description: str
    check: Callable = field(repr=False)
    applies: Callable[[Query], bool] = field(default=lambda q: True, repr=False)
    objective: str = field(default="", repr=False)

    def __call__(self, plan, q: Query, sb: Sandbox, cfg: CriticConfig = DEFAULT_CONFIG) -> CriticVerdict:
        try:
            problems = self.check(plan, q, sb, cfg)
        except Exception as exc:  # critics never crash the loop
            problems = [f"internal error while checking: {type(exc).__name__}: {exc}"]
        if not problems:
            return CriticVerdict(self.critic_id, self.group, True, "")
        bullets = "\n".join(f"- {p}" for p in problems)
        return CriticVerdict(self.critic_id, self.group, False, f"[{self.title}] {self.description}. Problems:\n{bullets}")


CATALOG: tuple[Critic, ...] = (
    Critic(
        "valid_format", "format", "Format",
        "The plan must be a JSON list of day objects with all nine keys",
        check_format,
        objective="checks that the plan is a JSON list of day objects, each with all nine keys and well-typed values, and days numbered 1..n",
    ),
    Critic(
        "complete_information", "commonsense", "Complete Information",
        "Every day needs its meals, at least one attraction, and a place to stay unless it is the last day",
        check_complete_information,
        objective="checks that no required field holds '-': an accommodation on every day but the last, at least one attraction per day, and every meal except breakfast on the first day and dinner on the last day",
    ),
    Critic(
        "diverse_restaurants", "commonsense", "Diverse Restaurants",
        "No restaurant may be visited more than once during the trip",
        check_diverse_restaurants,
        objective="checks that no restaurant name repeats across all breakfast, lunch and dinner slots of the trip ('-' is not a restaurant)",
    ),
    Critic(
        "diverse_attractions", "commonsense", "Diverse Attractions",
        "No attraction may be visited more than once during the trip",
        check_diverse_attractions,
        objective="checks that no attraction repeats across the trip; an attraction field may list several attractions separated by ';'",
    ),
    Critic(
        "is_valid_information", "commonsense", "Validate Itinerary",
        "The route and every named flight, restaurant, attraction and accommodation must be real and consistent",
        check_itinerary,
        objective="checks the trip structure: the right number of days, departing from and returning to the origin, consistent city transitions and transportation, the requested number of visited cities, and that every named flight, restaurant, attraction and accommodation exists for the stated city and date",
    ),
    Critic(
        "valid_cost", "hard", "Budget",
        "The total cost of the trip must not exceed the budget",
        check_budget,
        objective="computes the total cost with a method called 'get_total_cost' and checks that it does not exceed the query budget",
    ),
    Critic(
        "is_valid_accommodation", "hard", "Room Type",
        "Accommodations must exist, match the requested room type and house rules, and respect minimum stays",
        check_accommodation,
        applies=lambda q: bool(q.constraints.room_type or q.constraints.house_rule),
        objective="checks that each booked accommodation exists in the city of that night, matches the requested room type and house rule, and is booked for at least its minimum number of consecutive nights",
    ),
    Critic(
        "valid_cuisine", "hard", "Cuisines",
        "Every requested cuisine must be served by at least one chosen restaurant",
        check_cuisine,
        applies=lambda q: bool(q.constraints.cuisine),
        objective="checks that every cuisine requested in the query is served by at least one restaurant chosen in the plan",
    ),
    Critic(
        "valid_transportation", "hard", "Transportation",
        "Transportation must be understandable, avoid forbidden modes, and not mix self-driving with flights",
        check_transportation,
        applies=lambda q: bool(q.constraints.transportation),
        objective="checks that no day uses a transportation mode the query forbids (e.g. 'no flight') and that self-driving and flights are not mixed in one trip",
    ),
)
CRITICS = MappingProxyType({c.critic_id: c for c in CATALOG})
CRITIC_IDS = tuple(c.critic_id for c in CATALOG)
FORMAT_ID = "valid_format"


@dataclass(frozen=True)
class CriticSet:
    selector: str
    critics: tuple[Critic, ...]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.critic_id for c in self.critics)

    def __contains__(self, critic_id: str) -> bool:
        return critic_id in self.ids


_SELECTOR_GROUPS = {
    "all": {"format", "commonsense", "hard"},
    "common": {"format", "commonsense"},
    "hard": {"format", "hard"},
    "json": {"format"},
}


def critic_set(selector: str | CriticSet) -> CriticSet:
    """Resolve ``all``/``common``/``hard``/``json`` (case-insensitive) to its critics."""
    if isinstance(selector, CriticSet):
        return selector
    key = selector.strip().lower()
    if key not in _SELECTOR_GROUPS:
        raise ValueError(f"unknown critic selector {selector!r}; expected one of {SELECTORS}")
    groups = _SELECTOR_GROUPS[key]
    return CriticSet(key, tuple(c for c in CATALOG if c.group in groups))


def run_critics(
    selector: str | CriticSet,
    plan: Itinerary | ReformatFailure,
    q: Query,
    sb: Sandbox,
    config: CriticConfig = DEFAULT_CONFIG,
) -> list[CriticVerdict]:
    """Run a critic set in registry order.

    The format critic always runs first; if it fails nothing else runs.
    """
    cs = critic_set(selector)
    fmt = CRITICS[FORMAT_ID](plan, q, sb, config)
    if not fmt.passed:
        return [fmt]
    return [fmt] + [c(plan, q, sb, config) for c in cs.critics if c.critic_id != FORMAT_ID]


def format_critic(plan, q: Query, sb: Sandbox, config: CriticConfig = DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["valid_format"](plan, q, sb, config)


def complete_information_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["complete_information"](it, q, sb, config)


def diverse_restaurants_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["diverse_restaurants"](it, q, sb, config)


def diverse_attractions_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["diverse_attractions"](it, q, sb, config)


def validate_itinerary_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["is_valid_information"](it, q, sb, config)


def budget_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["valid_cost"](it, q, sb, config)


def room_type_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["is_valid_accommodation"](it, q, sb, config)


def cuisine_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["valid_cuisine"](it, q, sb, config)


def transportation_critic(it, q, sb, config=DEFAULT_CONFIG) -> CriticVerdict:
    return CRITICS["valid_transportation"](it, q, sb, config)


def applicable_critics(q: Query) -> tuple[Critic, ...]:
    """Commonsense and hard critics that count toward pass rates for ``q``.

    Commonsense critics and the budget always apply; the other hard critics
    only when the query states the matching preference.
    """
    return tuple(c for c in CATALOG if c.group != "format" and c.applies(q))


def evaluate_plan(
    plan: Itinerary | ReformatFailure | None,
    q: Query,
    sb: Sandbox,
    config: CriticConfig = DEFAULT_CONFIG,
) -> list[CriticVerdict]:
    """Verdicts of every applicable critic, as used for pass-rate metrics.

    A missing or unparseable plan fails every applicable constraint.
    """
    critics = applicable_critics(q)
    if plan is None or isinstance(plan, ReformatFailure):
        return [
            CriticVerdict(c.critic_id, c.group, False, f"[{c.title}] no plan was delivered")
            for c in critics
        ]
    return [c(plan, q, sb, config) for c in critics]


def catalog() -> list[dict]:
    """Critic catalog as plain records (id, group, description)."""
    return [
        {"id": c.critic_id, "group": c.group, "name": c.title, "description": c.description}
        for c in CATALOG
    ]


# --- critic-extraction prompts ----------------------------------------------


def plan_json_schema() -> dict:
    text = resources.files("llm_modulo").joinpath("schemas/itinerary.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


_EXTRACTION_TEMPLATE = """You are given a travel itinerary as JSON. It is a list with one object per day of the trip:

- plan: a list of objects, one per day, with these fields:
  - day: integer day number, starting at 1.
  - people_number: integer number of travelers.
  - current_city: the city for the day, or "from <A> to <B>" on a travel day.
  - transportation: "-" or "<Flight|Taxi|Self-driving>, from <A> to <B>" optionally followed by
    ", Flight Number: <id>, Departure Time: <hh:mm>, Arrival Time: <hh:mm>".
  - breakfast, lunch, dinner: "-" or "<restaurant name>, <city>".
  - attraction: "-" or "<attraction name>, <city>" entries separated by ";".
  - accommodation: "-" or "<accommodation name>, <city>" for the night of that day.

The JSON Schema of the plan is:
```json
{schema}
```

The travel query is an object with fields org, dest, days, visiting_city_number, people_number,
budget, date_range and local_constraint (house_rule, cuisine, room_type, transportation).

You may use these functions and tables:
1. get_cost_of_transport(source, destination, mode_of_travel, people, flight_number=None) -> float,
   where mode_of_travel is one of "flight", "self-driving", "taxi".
2. A restaurants dataframe with columns: {restaurants}
3. An attractions dataframe with columns: {attractions}
4. An accommodations dataframe with columns: {accommodations}
5. A flights dataframe with columns: {flights}
6. A distances dataframe with columns: {distances}

Task: write a Python function `{function}(plan, query)` that {objective}.
{extra}Use only the plan, the query, and the functions and tables above; do not assume anything else.
Return {returns}. Write the complete implementation.
"""

_EXTRA = {
    "valid_cost": (
        "Count every transportation leg, every breakfast, lunch and dinner, and every night of accommodation. "
        "Meals are priced per person, flights per seat, and rooms per room needed by the whole party, "
        "so take the number of people in the plan into account.\n"
    ),
}


def emit_extraction_prompt(critic_id: str) -> str:
    """Prompt asking a language model to write the code of one critic."""
    if critic_id not in CRITICS:
        raise KeyError(f"unknown critic id {critic_id!r}; known ids: {', '.join(CRITIC_IDS)}")
    critic = CRITICS[critic_id]
    cols = lambda names: ", ".join(f"'{n}'" for n in names)  # noqa: E731
    if critic_id == "valid_cost":
        function, returns = "get_total_cost", "a float with the total cost of the trip"
    else:
        function, returns = critic_id, "a tuple (passed: bool, feedback: str) where feedback explains any violation"
    return _EXTRACTION_TEMPLATE.format(
        schema=json.dumps(plan_json_schema(), indent=2),
        restaurants=cols(RESTAURANT_COLUMNS),
        attractions=cols(ATTRACTION_COLUMNS),
        accommodations=cols(ACCOMMODATION_COLUMNS + ("review rate number",)),
        flights=cols(FLIGHT_COLUMNS),
        distances=cols(DISTANCE_COLUMNS),
        function=function,
        objective=critic.objective,
        extra=_EXTRA.get(critic_id, ""),
        returns=returns,
    )
