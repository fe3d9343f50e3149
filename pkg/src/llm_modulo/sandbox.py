"""Reference datasets that ground every critic.

A sandbox is five CSV files (flights, accommodations, restaurants,
attractions, inter-city distances) loaded once and indexed by city and
city pair.  Column headers follow the benchmark files verbatim, including
the upper-case ``NAME`` column of the accommodations table, so real data
loads without edits.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date, time, timedelta
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

logger = logging.getLogger(__name__)

CENT = Decimal("0.01")
TRANSPORT_MODES = ("flight", "self-driving", "taxi")

FLIGHT_COLUMNS = (
    "Flight Number", "Price", "DepTime", "ArrTime", "ActualElapsedTime",
    "FlightDate", "OriginCityName", "DestCityName", "Distance",
)
ACCOMMODATION_COLUMNS = (
    "NAME", "price", "room type", "house_rules", "minimum nights",
    "maximum occupancy", "city",
)
RESTAURANT_COLUMNS = ("Name", "Average Cost", "Cuisines", "Aggregate Rating", "City")
ATTRACTION_COLUMNS = (
    "Name", "Latitude", "Longitude", "Address", "Phone", "Website", "City",
)
DISTANCE_COLUMNS = ("origin", "destination", "distance", "duration", "modes")

DATASET_FILES = {
    "flights": "flights.csv",
    "accommodations": "accommodations.csv",
    "restaurants": "restaurants.csv",
    "attractions": "attractions.csv",
    "distances": "distances.csv",
}


class SandboxLoadError(Exception):
    """A dataset file is missing, unreadable, or has no usable rows."""


class LookupFailure(LookupError):
    """A cost lookup referenced a flight or route the sandbox does not hold."""


def money(value) -> Decimal:
    """Coerce ``value`` to a two-decimal fixed-point amount."""
    if isinstance(value, float):
        value = repr(value)
    try:
        amount = Decimal(str(value).strip().replace(",", "").lstrip("$"))
    except InvalidOperation as exc:
        raise ValueError(f"not a monetary amount: {value!r}") from exc
    if not amount.is_finite():
        raise ValueError(f"not a monetary amount: {value!r}")
    return amount.quantize(CENT, rounding=ROUND_HALF_UP)


def normalize_city(name: str) -> str:
    """Canonical lookup key for a city: trimmed, inner whitespace collapsed, case-folded."""
    return " ".join(str(name).split()).casefold()


def normalize_name(name: str) -> str:
    return " ".join(str(name).split()).casefold()


_DURATION_PART = re.compile(r"(\d+(?:\.\d+)?)\s*(day|hour|hr|h|minute|min|m)s?\b", re.I)


def parse_duration(text: str) -> timedelta:
    """Parse ``"2 hours 10 minutes"``, ``"1 day 3 hours"``, ``"2:10"`` or bare minutes."""
    text = str(text).strip()
    if not text:
        raise ValueError("empty duration")
    if re.fullmatch(r"\d+(\.\d+)?", text):
        return timedelta(minutes=float(text))
    m = re.fullmatch(r"(\d+):(\d{2})", text)
    if m:
        return timedelta(hours=int(m.group(1)), minutes=int(m.group(2)))
    total = timedelta()
    matched = False
    for qty, unit in _DURATION_PART.findall(text):
        matched = True
        qty = float(qty)
        unit = unit.lower()
        if unit == "day":
            total += timedelta(days=qty)
        elif unit in ("hour", "hr", "h"):
            total += timedelta(hours=qty)
        else:
            total += timedelta(minutes=qty)
    if not matched:
        raise ValueError(f"unrecognized duration: {text!r}")
    return total


def parse_clock(text: str) -> time:
    m = re.fullmatch(r"\s*(\d{1,2}):(\d{2})(?::\d{2})?\s*", str(text))
    if not m:
        raise ValueError(f"unrecognized time of day: {text!r}")
    return time(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class FlightRecord:
    flight_number: str
    price: Decimal
    dep_time: time
    arr_time: time
    elapsed: timedelta
    flight_date: date
    origin_city: str
    dest_city: str
    distance: float

    def __post_init__(self):
        if self.price < 0:
            raise ValueError(f"negative price {self.price}")
        if self.distance < 0:
            raise ValueError(f"negative distance {self.distance}")
        if normalize_city(self.origin_city) == normalize_city(self.dest_city):
            raise ValueError("origin and destination are the same city")


@dataclass(frozen=True)
class AccommodationRecord:
    name: str
    price: Decimal
    room_type: str
    house_rules: str
    minimum_nights: int
    maximum_occupancy: int
    city: str
    review_rate: float | None = None

    def __post_init__(self):
        if self.price < 0:
            raise ValueError(f"negative price {self.price}")
        if self.minimum_nights < 1:
            raise ValueError(f"minimum nights must be >= 1, got {self.minimum_nights}")
        if self.maximum_occupancy < 1:
            raise ValueError(f"maximum occupancy must be >= 1, got {self.maximum_occupancy}")


@dataclass(frozen=True)
class RestaurantRecord:
    name: str
    average_cost: Decimal
    cuisines: frozenset[str]
    rating: float
    city: str

    def __post_init__(self):
        if self.average_cost < 0:
            raise ValueError(f"negative average cost {self.average_cost}")


@dataclass(frozen=True)
class AttractionRecord:
    name: str
    latitude: float
    longitude: float
    address: str
    phone: str
    website: str
    city: str

    def __post_init__(self):
        if not -90 <= self.latitude <= 90:
            raise ValueError(f"latitude {self.latitude} out of range")
        if not -180 <= self.longitude <= 180:
            raise ValueError(f"longitude {self.longitude} out of range")


@dataclass(frozen=True)
class DistanceRecord:
    origin_city: str
    dest_city: str
    distance: float
    duration: timedelta
    available_modes: frozenset[str]

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError(f"negative distance {self.distance}")
        unknown = self.available_modes - {"self-driving", "taxi"}
        if unknown:
            raise ValueError(f"unknown ground modes {sorted(unknown)}")


@dataclass(frozen=True)
class TransportConfig:
    """Ground-transport pricing.

    The benchmark treats transport cost as a given tool without publishing
    the formula, so these defaults are explicit stand-ins.
    """

    taxi_rate: Decimal = Decimal("1.00")
    drive_rate: Decimal = Decimal("0.05")
    taxi_capacity: int = 4
    car_capacity: int = 5

    def __post_init__(self):
        if self.taxi_capacity < 1 or self.car_capacity < 1:
            raise ValueError("vehicle capacities must be >= 1")
        if self.taxi_rate < 0 or self.drive_rate < 0:
            raise ValueError("rates must be >= 0")

    @classmethod
    def from_file(cls, path: str | Path) -> "TransportConfig":
        """Read a ``[transport]`` section of simple ``key = value`` lines."""
        parser = configparser.ConfigParser()
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        if not parser.has_section("transport"):
            return cls()
        sec = parser["transport"]
        known = {"taxi_rate", "drive_rate", "taxi_capacity", "car_capacity"}
        unknown = set(sec) - known
        if unknown:
            raise ValueError(f"unknown transport keys: {sorted(unknown)}")
        kwargs = {}
        for key in ("taxi_rate", "drive_rate"):
            if key in sec:
                kwargs[key] = Decimal(sec[key].strip().strip('"'))
        for key in ("taxi_capacity", "car_capacity"):
            if key in sec:
                kwargs[key] = int(sec[key].strip().strip('"'))
        return cls(**kwargs)


@dataclass(frozen=True)
class LoadDiagnostic:
    file: str
    row: int
    message: str

    def __str__(self):
        return f"{self.file}:{self.row}: {self.message}"


def _group(records: Iterable, key: Callable) -> Mapping:
    out: dict = {}
    for rec in records:
        out.setdefault(key(rec), []).append(rec)
    return MappingProxyType({k: tuple(v) for k, v in out.items()})


@dataclass(frozen=True, eq=False)
class Sandbox:
    """Immutable, indexed view over the five datasets.

    All ``find_*`` lookups are total: unknown keys give an empty tuple.
    Records keep their file order so repeated lookups are identically ordered.
    """

    flights: tuple[FlightRecord, ...] = ()
    accommodations: tuple[AccommodationRecord, ...] = ()
    restaurants: tuple[RestaurantRecord, ...] = ()
    attractions: tuple[AttractionRecord, ...] = ()
    distances: tuple[DistanceRecord, ...] = ()
    transport: TransportConfig = field(default_factory=TransportConfig)
    diagnostics: tuple[LoadDiagnostic, ...] = ()

    def __post_init__(self):
        idx = object.__setattr__
        idx(self, "_flights_by_leg", _group(
            self.flights,
            lambda f: (normalize_city(f.origin_city), normalize_city(f.dest_city), f.flight_date),
        ))
        idx(self, "_flights_by_route", _group(
            self.flights, lambda f: (normalize_city(f.origin_city), normalize_city(f.dest_city)),
        ))
        idx(self, "_hotels", _group(self.accommodations, lambda r: normalize_city(r.city)))
        idx(self, "_restaurants", _group(self.restaurants, lambda r: normalize_city(r.city)))
        idx(self, "_attractions", _group(self.attractions, lambda r: normalize_city(r.city)))
        idx(self, "_distances", _group(
            self.distances, lambda d: (normalize_city(d.origin_city), normalize_city(d.dest_city)),
        ))

    def counts(self) -> dict[str, int]:
        return {
            "flights": len(self.flights),
            "accommodations": len(self.accommodations),
            "restaurants": len(self.restaurants),
            "attractions": len(self.attractions),
            "distances": len(self.distances),
        }

    def cities(self) -> tuple[str, ...]:
        """Every city named by any record, in first-seen order (original spelling)."""
        seen: dict[str, str] = {}
        for rec in self.accommodations + self.restaurants + self.attractions:
            seen.setdefault(normalize_city(rec.city), rec.city)
        for rec in self.flights + self.distances:
            seen.setdefault(normalize_city(rec.origin_city), rec.origin_city)
            seen.setdefault(normalize_city(rec.dest_city), rec.dest_city)
        return tuple(seen.values())

    def has_city(self, city: str) -> bool:
        key = normalize_city(city)
        return any(normalize_city(c) == key for c in self.cities())


def find_flights(sb: Sandbox, origin: str, dest: str, when: date) -> tuple[FlightRecord, ...]:
    return sb._flights_by_leg.get((normalize_city(origin), normalize_city(dest), when), ())


def find_route_flights(sb: Sandbox, origin: str, dest: str) -> tuple[FlightRecord, ...]:
    """All flights between two cities on any date."""
    return sb._flights_by_route.get((normalize_city(origin), normalize_city(dest)), ())


def find_accommodations(sb: Sandbox, city: str) -> tuple[AccommodationRecord, ...]:
    return sb._hotels.get(normalize_city(city), ())


def find_restaurants(sb: Sandbox, city: str) -> tuple[RestaurantRecord, ...]:
    return sb._restaurants.get(normalize_city(city), ())


def find_attractions(sb: Sandbox, city: str) -> tuple[AttractionRecord, ...]:
    return sb._attractions.get(normalize_city(city), ())


def find_distance(sb: Sandbox, origin: str, dest: str) -> DistanceRecord | None:
    hits = sb._distances.get((normalize_city(origin), normalize_city(dest)), ())
    return hits[0] if hits else None


def find_flight_by_number(
    sb: Sandbox, origin: str, dest: str, flight_number: str, when: date | None = None,
) -> FlightRecord | None:
    wanted = normalize_name(flight_number)
    for f in find_route_flights(sb, origin, dest):
        if normalize_name(f.flight_number) == wanted and (when is None or f.flight_date == when):
            return f
    return None


def get_cost_of_transport(
    sb: Sandbox,
    origin: str,
    dest: str,
    mode: str,
    people: int,
    flight_number: str | None = None,
) -> Decimal:
    """Cost for ``people`` travellers on one leg.

    Flights are priced per seat; taxis and cars per vehicle, with the
    vehicle count rounded up from the party size.
    """
    if mode not in TRANSPORT_MODES:
        raise ValueError(f"unknown transport mode {mode!r}; expected one of {TRANSPORT_MODES}")
    if people < 1:
        raise ValueError(f"people must be >= 1, got {people}")
    cfg = sb.transport
    if mode == "flight":
        if flight_number is None:
            raise LookupFailure("flight cost requires a flight number")
        rec = find_flight_by_number(sb, origin, dest, flight_number)
        if rec is None:
            raise LookupFailure(f"no flight {flight_number} from {origin} to {dest}")
        return (rec.price * people).quantize(CENT)
    rec = find_distance(sb, origin, dest)
    if rec is None:
        raise LookupFailure(f"no distance record from {origin} to {dest}")
    if mode == "taxi":
        rate, vehicles = cfg.taxi_rate, math.ceil(people / cfg.taxi_capacity)
    else:
        rate, vehicles = cfg.drive_rate, math.ceil(people / cfg.car_capacity)
    per_vehicle = money(Decimal(repr(rec.distance)) * rate)
    return (per_vehicle * vehicles).quantize(CENT)


# --- loading -------------------------------------------------------------


def _split_tags(text: str) -> frozenset[str]:
    return frozenset(t.strip() for t in re.split(r"[,;]", text or "") if t.strip())


def _req(row: dict, key: str) -> str:
    value = row.get(key)
    if value is None or not str(value).strip():
        raise ValueError(f"empty value for {key!r}")
    return str(value).strip()


def _flight(row: dict) -> FlightRecord:
    return FlightRecord(
        flight_number=_req(row, "Flight Number"),
        price=money(_req(row, "Price")),
        dep_time=parse_clock(_req(row, "DepTime")),
        arr_time=parse_clock(_req(row, "ArrTime")),
        elapsed=parse_duration(_req(row, "ActualElapsedTime")),
        flight_date=date.fromisoformat(_req(row, "FlightDate")),
        origin_city=_req(row, "OriginCityName"),
        dest_city=_req(row, "DestCityName"),
        distance=float(_req(row, "Distance")),
    )


def _accommodation(row: dict) -> AccommodationRecord:
    review = (row.get("review rate number") or "").strip()
    return AccommodationRecord(
        name=_req(row, "NAME"),
        price=money(_req(row, "price")),
        room_type=_req(row, "room type"),
        house_rules=(row.get("house_rules") or "").strip(),
        minimum_nights=int(float(_req(row, "minimum nights"))),
        maximum_occupancy=int(float(_req(row, "maximum occupancy"))),
        city=_req(row, "city"),
        review_rate=float(review) if review else None,
    )


def _restaurant(row: dict) -> RestaurantRecord:
    rating = (row.get("Aggregate Rating") or "").strip()
    return RestaurantRecord(
        name=_req(row, "Name"),
        average_cost=money(_req(row, "Average Cost")),
        cuisines=_split_tags(row.get("Cuisines", "")),
        rating=float(rating) if rating else 0.0,
        city=_req(row, "City"),
    )


def _attraction(row: dict) -> AttractionRecord:
    return AttractionRecord(
        name=_req(row, "Name"),
        latitude=float(_req(row, "Latitude")),
        longitude=float(_req(row, "Longitude")),
        address=(row.get("Address") or "").strip(),
        phone=(row.get("Phone") or "").strip(),
        website=(row.get("Website") or "").strip(),
        city=_req(row, "City"),
    )


def _distance(row: dict) -> DistanceRecord:
    modes = frozenset(m.lower() for m in _split_tags(_req(row, "modes")))
    return DistanceRecord(
        origin_city=_req(row, "origin"),
        dest_city=_req(row, "destination"),
        distance=float(_req(row, "distance")),
        duration=parse_duration(_req(row, "duration")),
        available_modes=modes,
    )


_PARSERS = {
    "flights": (FLIGHT_COLUMNS, _flight),
    "accommodations": (ACCOMMODATION_COLUMNS, _accommodation),
    "restaurants": (RESTAURANT_COLUMNS, _restaurant),
    "attractions": (ATTRACTION_COLUMNS, _attraction),
    "distances": (DISTANCE_COLUMNS, _distance),
}


def _read_table(path: Path, kind: str, diagnostics: list[LoadDiagnostic]) -> tuple:
    columns, parse = _PARSERS[kind]
    if not path.is_file():
        raise SandboxLoadError(f"missing dataset file: {path}")
    records = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise SandboxLoadError(f"{path.name}: missing columns {missing}")
        # row 1 is the header
        for rownum, row in enumerate(reader, start=2):
            try:
                records.append(parse(row))
            except (ValueError, TypeError) as exc:
                diagnostics.append(LoadDiagnostic(path.name, rownum, str(exc)))
    if not records:
        raise SandboxLoadError(f"{path.name}: no valid rows")
    return tuple(records)


def load_sandbox(root: str | Path, transport: TransportConfig | None = None) -> Sandbox:
    """Load the five dataset files under ``root``.

    Malformed rows are skipped and reported in ``Sandbox.diagnostics``.
    A ``sandbox.toml`` next to the data overrides the transport defaults
    unless ``transport`` is given explicitly.
    """
    root = Path(root)
    if not root.is_dir():
        raise SandboxLoadError(f"sandbox directory not found: {root}")
    diagnostics: list[LoadDiagnostic] = []
    tables = {
        kind: _read_table(root / filename, kind, diagnostics)
        for kind, filename in DATASET_FILES.items()
    }
    if transport is None:
        cfg_path = root / "sandbox.toml"
        transport = TransportConfig.from_file(cfg_path) if cfg_path.is_file() else TransportConfig()
    sb = Sandbox(**tables, transport=transport, diagnostics=tuple(diagnostics))
    logger.info("loaded sandbox %s: %s", root, sb.counts())
    for diag in diagnostics:
        logger.warning("skipped row %s", diag)
    return sb


def mini_sandbox_path() -> Path:
    """Directory of the small three-city fixture shipped with the package."""
    return Path(__file__).parent / "data" / "mini_sandbox"
