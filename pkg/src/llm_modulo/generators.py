"""Plan generators: text in, text out.

Three interchangeable implementations of the same ``generate(prompt)``
contract: a chat-completion HTTP client, a scripted test double, and a
greedy symbolic planner that ignores the prompt and builds a plan
straight from the sandbox.
"""

from __future__ import annotations

import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Protocol, Sequence, runtime_checkable

import httpx

from .critics import DEFAULT_CONFIG, CriticConfig, house_rule_ok, room_type_ok
from .plan import EMPTY, MEALS, DayPlan, Itinerary, Leg, format_leg, serialize_plan
from .query import Query
from .sandbox import (
    Sandbox,
    find_accommodations,
    find_attractions,
    find_distance,
    find_flights,
    find_restaurants,
    get_cost_of_transport,
    normalize_city,
)

logger = logging.getLogger(__name__)


@runtime_checkable
class PlanGenerator(Protocol):
    description: str

    def generate(self, prompt: str) -> str: ...


class GeneratorError(RuntimeError):
    """The generator could not produce a reply."""


class GeneratorUnavailable(GeneratorError):
    """Transport failures persisted through the whole retry budget."""


class GeneratorAuthError(GeneratorError):
    """The endpoint rejected the credentials; retrying will not help."""


# --- remote LLM ------------------------------------------------------------------

DEFAULT_SYSTEM_PROMPT = "You are a careful travel planner. Follow the output format exactly."


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4-turbo"
    api_key_env: str = "MODULO_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 4096
    timeout: float = 120.0
    retries: int = 3
    backoff: tuple[float, ...] = (1.0, 2.0, 4.0)
    system_prompt: str = DEFAULT_SYSTEM_PROMPT

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")

    def delay(self, retry: int) -> float:
        if not self.backoff:
            return 0.0
        return self.backoff[min(retry, len(self.backoff) - 1)]

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "").strip()
        if not key:
            raise GeneratorAuthError(f"environment variable {self.api_key_env} is not set")
        return key


_RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}


def llm_generate(
    cfg: LlmConfig,
    prompt: str,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    telemetry: dict | None = None,
) -> str:
    """Send one chat-completion request and return the first choice's text.

    Rate limits, server errors and transport errors are retried up to
    ``cfg.retries`` times (so at most ``retries + 1`` attempts); auth
    failures are not retried.  If ``telemetry`` is given it is filled with
    attempt count, retries, latency and token usage.
    """
    body = {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": cfg.system_prompt},
            {"role": "user", "content": prompt},
        ],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }
    headers = {"Authorization": f"Bearer {cfg.api_key()}", "Content-Type": "application/json"}
    own_client = client is None
    client = client or httpx.Client(timeout=cfg.timeout)
    started = time.monotonic()
    last_error = ""
    attempts = 0
    try:
        for attempt in range(cfg.retries + 1):
            attempts = attempt + 1
            if attempt:
                sleep(cfg.delay(attempt - 1))
            try:
                resp = client.post(cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning("attempt %d/%d failed: %s", attempts, cfg.retries + 1, last_error)
                continue
            if resp.status_code in (401, 403):
                raise GeneratorAuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code in _RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                logger.warning("attempt %d/%d failed: %s", attempts, cfg.retries + 1, last_error)
                continue
            if resp.status_code >= 400:
                raise GeneratorError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise GeneratorError(f"malformed completion response: {exc}") from exc
            if telemetry is not None:
                telemetry.update(
                    attempts=attempts,
                    retries=attempt,
                    latency_s=round(time.monotonic() - started, 3),
                    usage=data.get("usage"),
                    model=data.get("model", cfg.model),
                )
            return text if text is not None else ""
    finally:
        if own_client:
            client.close()
    if telemetry is not None:
        telemetry.update(attempts=attempts, retries=attempts - 1, error=last_error)
    raise GeneratorUnavailable(f"no reply after {attempts} attempts: {last_error}")


class LlmGenerator:
    """Chat-completion endpoint as a :class:`PlanGenerator`."""

    def __init__(self, cfg: LlmConfig, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.cfg = cfg
        self._client = client
        self._sleep = sleep
        self._local = threading.local()
        self.description = f"llm:{cfg.model}"

    @property
    def last_telemetry(self) -> dict:
        return getattr(self._local, "telemetry", {})

    def generate(self, prompt: str) -> str:
        telemetry: dict = {}
        self._local.telemetry = telemetry
        return llm_generate(self.cfg, prompt, self._client, self._sleep, telemetry)


# --- scripted test double ------------------------------------------------------------


class ScriptedGenerator:
    """Replays canned replies in order; the last reply repeats once the script runs out."""

    def __init__(self, replies: Sequence[str], description: str = "scripted"):
        if not replies:
            raise ValueError("script needs at least one reply")
        self.replies = list(replies)
        self.prompts: list[str] = []
        self.description = description
        self._lock = threading.Lock()

    def generate(self, prompt: str) -> str:
        with self._lock:
            reply = self.replies[min(len(self.prompts), len(self.replies) - 1)]
            self.prompts.append(prompt)
            return reply


# --- greedy symbolic planner ----------------------------------------------------------


def _stay_cities(q: Query, sb: Sandbox) -> list[str]:
    if q.visiting_city_number == 1:
        return [q.dest]
    org = normalize_city(q.org)
    pool = sorted(
        {normalize_city(h.city): h.city for h in sb.accommodations if normalize_city(h.city) != org}.values(),
        key=lambda c: (normalize_city(c) != normalize_city(q.dest), c),
    )
    return pool[: q.visiting_city_number]


def _night_cities(days: int, cities: list[str]) -> list[str]:
    nights = days - 1
    cities = cities[: max(nights, 1)]
    base, extra = divmod(nights, len(cities)) if cities else (0, 0)
    out: list[str] = []
    for i, city in enumerate(cities):
        out += [city] * (base + (1 if i < extra else 0))
    return out


def _leg_options(q: Query, sb: Sandbox, origin: str, dest: str, day: int, modes: set[str]):
    """Yield (cost, mode rank, tiebreak, Leg) for every way to make this leg."""
    people = q.people_number
    when = q.date_range[day - 1]
    if "flight" in modes:
        for f in find_flights(sb, origin, dest, when):
            cost = get_cost_of_transport(sb, origin, dest, "flight", people, f.flight_number)
            yield cost, 0, f.flight_number, Leg("flight", origin, dest, f.flight_number, f.dep_time, f.arr_time)
    rec = find_distance(sb, origin, dest)
    if rec is not None:
        for rank, mode in ((1, "self-driving"), (2, "taxi")):
            if mode in modes and mode in rec.available_modes:
                cost = get_cost_of_transport(sb, origin, dest, mode, people)
                yield cost, rank, "", Leg(mode, origin, dest)


def _choose_legs(q, sb, legs, cfg: CriticConfig) -> dict[int, Leg]:
    forbidden = None
    rule = (q.constraints.transportation or "").strip().lower()
    if rule.startswith("no "):
        forbidden = rule[3:].rstrip("s")
    allowed = {"flight", "self-driving", "taxi"} - {forbidden}
    policies = [allowed]
    if cfg.forbid_mode_conflict:
        policies = [allowed - {"self-driving"}, allowed - {"flight"}]
    best = None
    for policy in policies:
        chosen, total = {}, Decimal(0)
        for day, origin, dest in legs:
            options = sorted(_leg_options(q, sb, origin, dest, day, policy), key=lambda o: o[:3])
            if options:
                chosen[day] = options[0][3]
                total += options[0][0]
        key = (-len(chosen), total)
        if best is None or key < best[0]:
            best = (key, chosen)
    return best[1] if best else {}


def greedy_plan(q: Query, sb: Sandbox, cfg: CriticConfig = DEFAULT_CONFIG) -> Itinerary:
    """Cheapest-first constructive plan for ``q``.

    Legs take the cheapest allowed flight or ground option, each stay the
    cheapest accommodation meeting the room constraints and minimum-night
    rule, each required meal the cheapest unused restaurant (after first
    covering any requested cuisines), and each day one unused attraction.
    Ties break by price then name.  Slots that cannot be filled get ``"-"``.
    """
    n = q.days
    people = q.people_number
    nights = _night_cities(n, _stay_cities(q, sb))
    spans = []
    for d in range(1, n + 1):
        start = q.org if d == 1 else nights[d - 2] if d - 2 < len(nights) else q.org
        end = nights[d - 1] if d - 1 < len(nights) else q.org
        spans.append((start, end))

    travel = [(d, s, e) for d, (s, e) in enumerate(spans, start=1) if normalize_city(s) != normalize_city(e)]
    legs = _choose_legs(q, sb, travel, cfg)

    # accommodation: one booking per block of consecutive nights in a city
    lc = q.constraints
    hotels: dict[int, str] = {}
    d = 1
    while d <= len(nights):
        city = nights[d - 1]
        length = 1
        while d + length <= len(nights) and nights[d + length - 1] == city:
            length += 1
        fits = [
            h for h in find_accommodations(sb, city)
            if h.minimum_nights <= length
            and (not lc.room_type or room_type_ok(lc.room_type, h.room_type))
            and (not lc.house_rule or house_rule_ok(lc.house_rule, h.house_rules))
        ]
        if fits:
            h = min(fits, key=lambda h: (h.price * math.ceil(people / h.maximum_occupancy), h.name))
            for night in range(d, d + length):
                hotels[night] = f"{h.name}, {h.city}"
        d += length

    def cities_of(day: int) -> list[str]:
        s, e = spans[day - 1]
        return [s] if normalize_city(s) == normalize_city(e) else [s, e]

    # meals
    optional = {day: set() for day in range(1, n + 1)}
    optional[1] |= set(cfg.optional_meals.get("first", ()))
    optional[n] |= set(cfg.optional_meals.get("last", ()))
    required_slots = [(day, meal) for day in range(1, n + 1) for meal in MEALS if meal not in optional.get(day, ())]
    optional_slots = [(day, meal) for day in range(1, n + 1) for meal in MEALS if meal in optional.get(day, ())]
    meals: dict[tuple[int, str], str] = {}
    used: set[tuple[str, str]] = set()

    def take(slot, rest):
        meals[slot] = f"{rest.name}, {rest.city}"
        used.add((normalize_city(rest.city), rest.name))

    for cuisine in sorted(lc.cuisine or ()):
        covered = any(
            cuisine.casefold() in {c.casefold() for c in r.cuisines}
            for day in range(1, n + 1) for c in cities_of(day) for r in find_restaurants(sb, c)
            if (normalize_city(r.city), r.name) in used
        )
        if covered:
            continue
        for slots in (required_slots, optional_slots):
            picks = [
                (r.average_cost, r.name, slot, r)
                for slot in slots if slot not in meals
                for c in cities_of(slot[0]) for r in find_restaurants(sb, c)
                if (normalize_city(r.city), r.name) not in used
                and cuisine.casefold() in {x.casefold() for x in r.cuisines}
            ]
            if picks:
                cost, name, _, rest = min(picks, key=lambda p: (p[0], p[1]))
                slot = next(p[2] for p in picks if p[3] is rest)
                take(slot, rest)
                break

    for slot in required_slots:
        if slot in meals:
            continue
        options = [
            r for c in cities_of(slot[0]) for r in find_restaurants(sb, c)
            if (normalize_city(r.city), r.name) not in used
        ]
        if options:
            take(slot, min(options, key=lambda r: (r.average_cost, r.name)))

    # attractions
    seen: set[tuple[str, str]] = set()
    sights: dict[int, str] = {}
    for day in range(1, n + 1):
        options = [
            a for c in cities_of(day) for a in find_attractions(sb, c)
            if (normalize_city(a.city), a.name) not in seen
        ]
        if options:
            a = min(options, key=lambda a: a.name)
            seen.add((normalize_city(a.city), a.name))
            sights[day] = f"{a.name}, {a.city}"

    out = []
    for day, (s, e) in enumerate(spans, start=1):
        moving = normalize_city(s) != normalize_city(e)
        out.append(DayPlan(
            day=day,
            people_number=people,
            current_city=f"from {s} to {e}" if moving else s,
            transportation=format_leg(legs[day]) if day in legs else EMPTY,
            breakfast=meals.get((day, "breakfast"), EMPTY),
            attraction=sights.get(day, EMPTY),
            lunch=meals.get((day, "lunch"), EMPTY),
            dinner=meals.get((day, "dinner"), EMPTY),
            accommodation=hotels.get(day, EMPTY),
        ))
    return Itinerary(tuple(out))


def greedy_generate(q: Query, sb: Sandbox, cfg: CriticConfig = DEFAULT_CONFIG) -> str:
    return serialize_plan(greedy_plan(q, sb, cfg))


@dataclass
class GreedyGenerator:
    """Symbolic baseline behind the generator contract; the prompt is ignored."""

    query: Query
    sandbox: Sandbox
    config: CriticConfig = DEFAULT_CONFIG
    description: str = field(default="greedy")

    def generate(self, prompt: str) -> str:
        return greedy_generate(self.query, self.sandbox, self.config)
