import shutil
from datetime import date
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from llm_modulo.sandbox import (
    DATASET_FILES,
    LookupFailure,
    Sandbox,
    SandboxLoadError,
    TransportConfig,
    find_accommodations,
    find_attractions,
    find_distance,
    find_flights,
    find_restaurants,
    get_cost_of_transport,
    load_sandbox,
    money,
    parse_duration,
)
from support import MINI

ONE_ROW = {
    "flights.csv": "Flight Number,Price,DepTime,ArrTime,ActualElapsedTime,FlightDate,OriginCityName,DestCityName,Distance\n"
                   "F1,99,08:00,09:00,1 hours 0 minutes,2022-03-01,X,Y,300\n",
    "accommodations.csv": "NAME,price,room type,house_rules,minimum nights,maximum occupancy,city\n"
                          "Inn,50,Private room,,1,2,Y\n",
    "restaurants.csv": "Name,Average Cost,Cuisines,Aggregate Rating,City\nCafe,12,American,4.0,Y\n",
    "attractions.csv": "Name,Latitude,Longitude,Address,Phone,Website,City\nPark,10,20,1 Way,555,http://x,Y\n",
    "distances.csv": "origin,destination,distance,duration,modes\nX,Y,40,1 hour,self-driving;taxi\n",
}


def write_dir(tmp_path, files):
    for name, text in files.items():
        (tmp_path / name).write_text(text, encoding="utf-8")
    return tmp_path


def test_one_row_each(tmp_path):
    sb = load_sandbox(write_dir(tmp_path, ONE_ROW))
    assert sb.counts() == {k: 1 for k in DATASET_FILES}
    assert sb.diagnostics == ()


def test_negative_price_row_is_reported_and_skipped(tmp_path):
    files = dict(ONE_ROW)
    files["flights.csv"] += "F2,-5,08:00,09:00,1 hours,2022-03-01,X,Y,300\n"
    sb = load_sandbox(write_dir(tmp_path, files))
    assert len(sb.flights) == 1
    [diag] = sb.diagnostics
    assert diag.file == "flights.csv" and diag.row == 3 and "price" in diag.message.lower()


def test_mini_sandbox_counts(mini):
    assert mini.counts() == {"flights": 6, "accommodations": 4, "restaurants": 6, "attractions": 5, "distances": 6}


def test_missing_file_is_fatal(tmp_path):
    files = dict(ONE_ROW)
    del files["restaurants.csv"]
    with pytest.raises(SandboxLoadError, match="restaurants.csv"):
        load_sandbox(write_dir(tmp_path, files))


def test_zero_valid_rows_is_fatal(tmp_path):
    files = dict(ONE_ROW)
    files["attractions.csv"] = "Name,Latitude,Longitude,Address,Phone,Website,City\nBad,95,0,a,b,c,Y\n"
    with pytest.raises(SandboxLoadError, match="no valid rows"):
        load_sandbox(write_dir(tmp_path, files))


def test_missing_column_is_fatal(tmp_path):
    files = dict(ONE_ROW)
    files["restaurants.csv"] = "Name,Cost,Cuisines,Aggregate Rating,City\nCafe,12,American,4.0,Y\n"
    with pytest.raises(SandboxLoadError, match="Average Cost"):
        load_sandbox(write_dir(tmp_path, files))


def test_missing_directory():
    with pytest.raises(SandboxLoadError):
        load_sandbox("/no/such/dir")


def test_find_flights(mini):
    assert find_flights(Sandbox(), "CityA", "CityB", date(2022, 3, 13)) == ()
    hits = find_flights(mini, "CityA", "CityB", date(2022, 3, 13))
    assert [f.flight_number for f in hits] == ["F0001", "F0002"]
    assert find_flights(mini, "  citya ", "CITYB", date(2022, 3, 13)) == hits


def test_city_lookups(mini):
    assert find_accommodations(mini, "Nowhere") == ()
    assert [h.name for h in find_accommodations(mini, "CityB")] == ["Harbor Room", "Bay Loft"]
    assert find_accommodations(mini, "cItYb") == find_accommodations(mini, "CityB")
    assert len(find_restaurants(mini, "CityB")) == 4
    assert len(find_attractions(mini, "cityb ")) == 3


def test_transport_costs(mini):
    assert get_cost_of_transport(mini, "CityA", "CityB", "flight", 1, "F0001") == Decimal("120.00")
    assert get_cost_of_transport(mini, "CityA", "CityB", "flight", 3, "F0001") == Decimal("360.00")
    assert get_cost_of_transport(mini, "CityA", "CityB", "taxi", 5) == Decimal("200.00")
    assert get_cost_of_transport(mini, "CityA", "CityB", "self-driving", 6) == Decimal("10.00")
    with pytest.raises(LookupFailure):
        get_cost_of_transport(mini, "CityA", "CityB", "flight", 1, "F0004")
    with pytest.raises(LookupFailure):
        get_cost_of_transport(Sandbox(), "CityA", "CityB", "taxi", 1)
    with pytest.raises(ValueError):
        get_cost_of_transport(mini, "CityA", "CityB", "boat", 1)


@given(st.sampled_from(["flight", "taxi", "self-driving"]), st.integers(1, 40))
def test_cost_monotone_in_party_size(mode, people):
    sb = load_sandbox(MINI)
    number = "F0001" if mode == "flight" else None
    lo = get_cost_of_transport(sb, "CityA", "CityB", mode, people, number)
    hi = get_cost_of_transport(sb, "CityA", "CityB", mode, people + 1, number)
    assert hi >= lo
    if mode == "flight":
        assert lo == Decimal("120.00") * people


def test_transport_config_file(tmp_path):
    shutil.copytree(MINI, tmp_path / "sb")
    (tmp_path / "sb" / "sandbox.toml").write_text("[transport]\ntaxi_rate = 2.5\ntaxi_capacity = 2\n")
    sb = load_sandbox(tmp_path / "sb")
    assert sb.transport == TransportConfig(taxi_rate=Decimal("2.50"), taxi_capacity=2)
    assert get_cost_of_transport(sb, "CityA", "CityB", "taxi", 3) == Decimal("500.00")
    (tmp_path / "sb" / "sandbox.toml").write_text("[transport]\nboat_rate = 1\n")
    with pytest.raises(ValueError, match="boat_rate"):
        load_sandbox(tmp_path / "sb")


def test_lookups_are_deterministic_and_sandbox_immutable(mini):
    first = find_restaurants(mini, "CityB")
    assert find_restaurants(mini, "CityB") == first
    with pytest.raises(Exception):
        mini.flights = ()
    assert find_distance(mini, "CityA", "CityB").distance == 100


def test_helpers():
    assert money("1,400") == Decimal("1400.00")
    assert money(0.1 + 0.2) == Decimal("0.30")
    assert parse_duration("2 hours 10 minutes").total_seconds() == 7800
    with pytest.raises(ValueError):
        money("abc")
