"""Seeded synthetic worlds for closed-loop experiments.

``write_synthetic_sandbox`` lays out a six-city sandbox in the standard
CSV layout; ``synthetic_corpus`` draws queries against it and keeps only
those for which the greedy planner already finds a plan passing every
applicable critic, so the corpus is feasible by construction.

``corrupt_plan`` and :class:`RepairGenerator` support the other direction:
start from a known-good plan, break it in located ways, and repair it
using nothing but the critics' backprompts.
"""

from __future__ import annotations

import csv
import json
import math
import random
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from decimal import Decimal
from pathlib import Path

from .critics import DEFAULT_CONFIG, CriticConfig, evaluate_plan, get_total_cost
from .generators import greedy_plan
from .plan import EMPTY, MEALS, PLAN_KEYS, DayPlan, Itinerary, serialize_plan
from .query import CUISINES, HOUSE_RULES, ROOM_TYPES, TRANSPORT_RULES, LocalConstraint, Query
from .sandbox import (
    ACCOMMODATION_COLUMNS,
    ATTRACTION_COLUMNS,
    DATASET_FILES,
    DISTANCE_COLUMNS,
    FLIGHT_COLUMNS,
    RESTAURANT_COLUMNS,
    Sandbox,
    load_sandbox,
)

CITIES = ("Ashford", "Brookvale", "Cedarton", "Dunmore", "Elmshore", "Fairhaven")
REGION = "Lakeland"
START = date(2022, 3, 1)
SPAN_DAYS = 28

_ROOM_KINDS = ("Entire home/apt", "Private room", "Shared room")
_RULES = ("No parties", "No smoking", "No pets", "No visitors", "No children under 10")
_FOOD_WORDS = ("Grill", "Kitchen", "Bistro", "Table", "House", "Corner", "Garden", "Diner")
_SIGHTS = ("Museum", "Park", "Gallery", "Pier", "Garden", "Tower", "Market", "Fort", "Lake", "Theater")


def _clock(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def synthetic_tables(seed: int = 0) -> dict[str, list[list]]:
    """Rows (header first) for each dataset file, fully determined by ``seed``."""
    rng = random.Random(seed)
    coords = {c: (rng.uniform(25, 48), rng.uniform(-120, -70)) for c in CITIES}

    miles = {}
    for i, a in enumerate(CITIES):
        for b in CITIES[i + 1:]:
            lat = coords[a][0] - coords[b][0]
            lon = coords[a][1] - coords[b][1]
            miles[a, b] = miles[b, a] = max(60, round(math.hypot(lat, lon) * 40))

    flights = [list(FLIGHT_COLUMNS)]
    number = 1000
    for day in range(SPAN_DAYS):
        when = START + timedelta(days=day)
        for a in CITIES:
            for b in CITIES:
                if a == b:
                    continue
                for _ in range(rng.randint(1, 2)):
                    number += 1
                    dep = rng.randrange(6 * 60, 20 * 60, 5)
                    elapsed = 45 + miles[a, b] // 8
                    arr = min(dep + elapsed, 23 * 60 + 55)
                    flights.append([
                        f"F{number}", rng.randint(60, 400), _clock(dep), _clock(arr),
                        f"{(arr - dep) // 60} hours {(arr - dep) % 60} minutes",
                        when.isoformat(), a, b, miles[a, b],
                    ])

    distances = [list(DISTANCE_COLUMNS)]
    for a in CITIES:
        for b in CITIES:
            if a != b:
                hours, mins = divmod(round(miles[a, b] / 55 * 60), 60)
                distances.append([a, b, miles[a, b], f"{hours} hours {mins} mins", "self-driving;taxi"])

    hotels = [list(ACCOMMODATION_COLUMNS)]
    restaurants = [list(RESTAURANT_COLUMNS)]
    attractions = [list(ATTRACTION_COLUMNS)]
    for c in CITIES:
        # every room type is bookable for a single night with no house rules
        for kind in _ROOM_KINDS:
            hotels.append([f"{c} {kind.split()[0].split('/')[0]} Stay", rng.randint(60, 200), kind, "", 1,
                           rng.randint(2, 4), c])
        for i in range(5):
            kind = rng.choice(_ROOM_KINDS)
            rules = ", ".join(sorted(rng.sample(_RULES, rng.randint(1, 2))))
            hotels.append([f"{c} Inn {i + 1}", rng.randint(40, 300), kind, rules, rng.randint(1, 3),
                           rng.randint(1, 6), c])
        for i in range(16):
            main = CUISINES[i % len(CUISINES)]
            tags = [main] + ([rng.choice(CUISINES)] if rng.random() < 0.4 else [])
            tags = list(dict.fromkeys(tags))
            restaurants.append([f"{c} {main} {_FOOD_WORDS[i % len(_FOOD_WORDS)]} {i + 1}",
                                rng.randint(8, 60), ", ".join(tags), round(rng.uniform(2.5, 5.0), 1), c])
        lat, lon = coords[c]
        for i, sight in enumerate(_SIGHTS):
            attractions.append([f"{c} {sight}", round(lat + rng.uniform(-0.2, 0.2), 4),
                                round(lon + rng.uniform(-0.2, 0.2), 4), f"{10 + i} Main St, {c}",
                                f"555-{rng.randint(1000, 9999)}", f"https://example.org/{c.lower()}/{i}", c])

    return {
        "flights": flights,
        "accommodations": hotels,
        "restaurants": restaurants,
        "attractions": attractions,
        "distances": distances,
    }


def write_synthetic_sandbox(root: str | Path, seed: int = 0) -> Path:
    """Write the five CSV files for ``seed`` under ``root`` and return it."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for key, rows in synthetic_tables(seed).items():
        with open(root / DATASET_FILES[key], "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    return root


_MONTH_NAMES = ("January", "February", "March", "April", "May", "June", "July",
                "August", "September", "October", "November", "December")


def query_text(q: Query) -> str:
    """Render ``q`` in the templated phrasing that :func:`parse_query` reads."""
    first, last = q.date_range[0], q.date_range[-1]
    when = f"from {_MONTH_NAMES[first.month - 1]} {first.day} to {_MONTH_NAMES[last.month - 1]} {last.day}, {last.year}"
    party = "for one traveler" if q.people_number == 1 else f"for {q.people_number} people"
    if q.visiting_city_number == 1:
        route = f"from {q.org} to {q.dest}"
    else:
        route = f"that begins in {q.org} and visits {q.visiting_city_number} cities in {q.dest}"
    budget = f"{q.budget:,.0f}" if q.budget == q.budget.to_integral() else f"{q.budget:,.2f}"
    parts = [f"Please plan a {q.days}-day trip {route}, {party}, {when}, with a budget of ${budget}."]
    lc = q.constraints
    if lc.cuisine:
        parts.append(f"We would like to try {' and '.join(sorted(lc.cuisine))} cuisine.")
    if lc.room_type:
        phrase = {
            "entire room": "an entire room",
            "not shared room": "rooms that are not shared rooms",
        }.get(lc.room_type, f"a {lc.room_type}")
        parts.append(f"We need {phrase}.")
    if lc.house_rule:
        parts.append(f"The accommodation must allow {lc.house_rule}.")
    if lc.transportation:
        parts.append({
            "no flight": "We prefer not to fly.",
            "no self-driving": "We will not be self-driving.",
            "no taxi": "We want to avoid taxis.",
        }[lc.transportation])
    return " ".join(parts)


def _draw_constraint(rng: random.Random) -> LocalConstraint | None:
    cuisine = frozenset(rng.sample(CUISINES, rng.randint(1, 2))) if rng.random() < 0.5 else None
    room = rng.choice(ROOM_TYPES) if rng.random() < 0.4 else None
    rule = rng.choice(HOUSE_RULES) if rng.random() < 0.3 else None
    transport = rng.choice(TRANSPORT_RULES) if rng.random() < 0.3 else None
    lc = LocalConstraint(rule, cuisine, room, transport)
    return None if lc.is_empty() else lc


def draw_query(rng: random.Random, index: int) -> Query:
    """One random query against the synthetic cities (budget not yet fitted)."""
    days, n_cities = rng.choice(((3, 1), (3, 1), (5, 2), (7, 3)))
    org = rng.choice(CITIES)
    dest = rng.choice([c for c in CITIES if c != org]) if n_cities == 1 else REGION
    start = START + timedelta(days=rng.randrange(SPAN_DAYS - days + 1))
    return Query(
        org=org,
        dest=dest,
        days=days,
        visiting_city_number=n_cities,
        people_number=rng.randint(1, 4),
        budget=Decimal(1_000_000),
        date_range=tuple(start + timedelta(days=i) for i in range(days)),
        local_constraint=_draw_constraint(rng),
        query_id=f"syn-{index:02d}",
    )


def _with_budget(q: Query, budget: Decimal) -> Query:
    return Query(**{**q.__dict__, "budget": budget})


def synthetic_corpus(
    sb: Sandbox,
    n: int = 20,
    seed: int = 0,
    slack: float = 1.25,
    config: CriticConfig = DEFAULT_CONFIG,
) -> list[Query]:
    """``n`` feasible queries: each budget is the greedy plan's cost times
    ``slack``, rounded up to $50, and draws the greedy planner cannot
    satisfy are discarded.
    """
    rng = random.Random(seed)
    out: list[Query] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 50 * n:
            raise RuntimeError(f"only {len(out)} feasible queries after {attempts} draws")
        q = draw_query(rng, len(out) + 1)
        plan = greedy_plan(q, sb, config)
        cost = get_total_cost(plan, q, sb)
        budget = Decimal(max(50, math.ceil(float(cost) * slack / 50) * 50))
        q = _with_budget(q, budget)
        if all(v.passed for v in evaluate_plan(plan, q, sb, config)):
            out.append(Query(**{**q.__dict__, "text": query_text(q)}))
    return out


def synthetic_world(root: str | Path, seed: int = 0, n: int = 20) -> tuple[Sandbox, list[Query]]:
    sb = load_sandbox(write_synthetic_sandbox(root, seed))
    return sb, synthetic_corpus(sb, n, seed)


def write_queries(queries, path: str | Path) -> Path:
    """Store queries as JSON lines (structured fields plus the text when known)."""
    path = Path(path)
    lines = []
    for q in queries:
        d = q.to_dict()
        if q.text:
            d["query"] = q.text
        lines.append(json.dumps(d, ensure_ascii=False))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_queries(path: str | Path) -> list[Query]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Query.from_dict(json.loads(line)))
    return out


# --- located corruption and backprompt-driven repair ----------------------------------

CORRUPTIONS = (
    "unknown_restaurant", "repeat_restaurant", "drop_meal", "repeat_attraction",
    "unknown_attraction", "drop_accommodation", "unknown_accommodation", "bad_transport",
)


def _set(days: list[DayPlan], day: int, **changes) -> None:
    days[day - 1] = days[day - 1].replace(**changes)


def corrupt_plan(it: Itinerary, rng: random.Random, kinds: tuple[str, ...]) -> Itinerary:
    """Apply each corruption in ``kinds`` to a different day of ``it``.

    Every corruption breaks exactly one slot, so each is reported by some
    critic at a ``day N <field>`` location.
    """
    days = list(it.days)
    n = len(days)
    free = list(range(1, n + 1))
    rng.shuffle(free)

    def pick(ok) -> int | None:
        for d in free:
            if ok(days[d - 1]):
                free.remove(d)
                return d
        return None

    def meal_slot(dp: DayPlan) -> str | None:
        filled = [m for m in MEALS if dp.__dict__[m] != EMPTY]
        return rng.choice(filled) if filled else None

    for kind in kinds:
        if kind in ("unknown_restaurant", "drop_meal"):
            d = pick(lambda dp: meal_slot(dp) is not None)
            if d is None:
                continue
            slot = meal_slot(days[d - 1])
            city = days[d - 1].__dict__[slot].rsplit(", ", 1)[-1]
            value = f"Phantom Eatery, {city}" if kind == "unknown_restaurant" else EMPTY
            if kind == "drop_meal" and (d, slot) in ((1, "breakfast"), (n, "dinner")):
                value = f"Phantom Eatery, {city}"
            _set(days, d, **{slot: value})
        elif kind == "repeat_restaurant":
            d = pick(lambda dp: meal_slot(dp) is not None)
            if d is None:
                continue
            donor = next((x for x in days if x.day != d and meal_slot(x) and x.current_city == days[d - 1].current_city), None)
            if donor is None:
                free.append(d)
                continue
            _set(days, d, **{meal_slot(days[d - 1]): donor.__dict__[meal_slot(donor)]})
        elif kind == "repeat_attraction":
            d = pick(lambda dp: dp.attraction != EMPTY)
            donor = next((x for x in days if d and x.day != d and x.attraction != EMPTY
                          and x.current_city == days[d - 1].current_city), None)
            if d is None or donor is None:
                if d is not None:
                    free.append(d)
                continue
            _set(days, d, attraction=donor.attraction)
        elif kind == "unknown_attraction":
            d = pick(lambda dp: dp.attraction != EMPTY)
            if d is not None:
                city = days[d - 1].attraction.rsplit(", ", 1)[-1]
                _set(days, d, attraction=f"Phantom Tower, {city}")
        elif kind in ("drop_accommodation", "unknown_accommodation"):
            d = pick(lambda dp: dp.day < n and dp.accommodation != EMPTY)
            if d is not None:
                city = days[d - 1].accommodation.rsplit(", ", 1)[-1]
                _set(days, d, accommodation=EMPTY if kind == "drop_accommodation" else f"Phantom Lodge, {city}")
        elif kind == "bad_transport":
            d = pick(lambda dp: dp.transportation != EMPTY)
            if d is not None:
                _set(days, d, transportation="Teleport across town")
        else:
            raise ValueError(f"unknown corruption {kind!r}; expected one of {CORRUPTIONS}")
    return Itinerary(tuple(days))


_FEEDBACK = "## Feedback on your previous plan\n"
_LOCATION = re.compile(r"\bday (\d+)(?: (" + "|".join(PLAN_KEYS[2:]) + r"))?\b")


@dataclass
class RepairGenerator:
    """Starts from a broken plan and repairs one reported problem per call.

    The only input used is the feedback section of the prompt: the first
    problem line names day/field locations, and those slots are restored
    from ``reference``.  ``blind_repairs`` counts calls where the feedback
    did not locate anything that could be changed.
    """

    reference: Itinerary
    broken: Itinerary
    description: str = "repair"
    current: Itinerary | None = None
    blind_repairs: int = 0
    calls: int = field(default=0)

    def generate(self, prompt: str) -> str:
        self.calls += 1
        if self.current is None:
            self.current = self.broken
            return serialize_plan(self.current)
        feedback = prompt.split(_FEEDBACK, 1)[1] if _FEEDBACK in prompt else ""
        problems = [line[2:] for line in feedback.splitlines() if line.startswith("- ")]
        repaired = self._repair(problems[0]) if problems else None
        if repaired is None:
            self.blind_repairs += 1
            repaired = self._restore_first_difference()
        self.current = repaired
        return serialize_plan(self.current)

    def _repair(self, problem: str) -> Itinerary | None:
        fallback_field = "attraction" if "attraction" in problem else None
        days = list(self.current.days)
        changed = False
        for m in _LOCATION.finditer(problem):
            d = int(m.group(1))
            slot = m.group(2) or fallback_field
            if slot is None or not 1 <= d <= len(days):
                continue
            want = self.reference[d - 1].__dict__[slot]
            if days[d - 1].__dict__[slot] != want:
                _set(days, d, **{slot: want})
                changed = True
        return Itinerary(tuple(days)) if changed else None

    def _restore_first_difference(self) -> Itinerary:
        days = list(self.current.days)
        for i, (have, want) in enumerate(zip(days, self.reference.days)):
            if have != want:
                days[i] = want
                break
        return Itinerary(tuple(days))

