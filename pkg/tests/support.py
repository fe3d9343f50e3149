"""Hand-built fixtures shared by the test modules."""

from datetime import date
from decimal import Decimal

from llm_modulo.plan import DayPlan, Itinerary
from llm_modulo.query import LocalConstraint, Query
from llm_modulo.sandbox import mini_sandbox_path

MINI = mini_sandbox_path()


def flight_leg(num, a, b, dep, arr):
    return f"Flight, from {a} to {b}, Flight Number: {num}, Departure Time: {dep}, Arrival Time: {arr}"


def two_day_plan(people: int = 1) -> Itinerary:
    """Hand-built round trip CityA -> CityB on 2022-03-13/14 that satisfies every critic."""
    return Itinerary((
        DayPlan(1, people, "from CityA to CityB", flight_leg("F0001", "CityA", "CityB", "07:00", "09:10"),
                "-", "Lighthouse Point, CityB", "Taco Terrace, CityB", "Pasta Pier, CityB", "Bay Loft, CityB"),
        DayPlan(2, people, "from CityB to CityA", flight_leg("F0004", "CityB", "CityA", "17:00", "19:05"),
                "Dragon Bowl, CityB", "Maritime Museum, CityB", "Curry Cove, CityB", "-", "-"),
    ))


# flight 120 + 110, meals 15 + 20 + 12 + 18, one night at Bay Loft 100
TWO_DAY_COST = Decimal("395.00")


def two_day_query(budget="1000", people=1, lc: LocalConstraint | None = None, days=2) -> Query:
    dates = tuple(date(2022, 3, 13 + i) for i in range(days))
    return Query("CityA", "CityB", days, 1, people, Decimal(budget), dates, lc, query_id="mini-2d")

