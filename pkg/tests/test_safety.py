import itertools

import pytest

from vca.errors import UnknownAggregate
from vca.hierarchy import FD, register_hierarchy
from vca.relalg import Cmp
from vca.safety import (
    SAFE,
    UNSAFE,
    UNSAFE_OVERRIDABLE,
    MeasureType,
    match_schemas,
    measure_type,
    measures_compatible,
    single_value_dims,
)
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view


def test_measure_type_registry():
    assert measure_type("avg", "delay") == MeasureType("sameas", "delay", "avg")
    assert measure_type("count", "delay") == MeasureType("param", "delay", "count")
    assert measure_type("sum", "delay").kind == "sameas"
    assert measure_type("std", "delay").kind == "sameas"
    with pytest.raises(UnknownAggregate):
        measure_type("median", "delay")


def test_measure_compatibility_rules():
    base = MeasureType("base", "delay")
    avg = measure_type("avg", "delay")
    mn = measure_type("min", "delay")
    price = measure_type("avg", "price")
    cnt = measure_type("count", "delay")
    assert measures_compatible(avg, base)
    assert measures_compatible(avg, mn)
    assert not measures_compatible(avg, price)
    assert not measures_compatible(avg, cnt)


def test_measures_compatible_is_equivalence_relation():
    pool = [
        MeasureType("base", "delay"),
        measure_type("avg", "delay"),
        measure_type("min", "delay"),
        measure_type("count", "delay"),
        measure_type("count", "price"),
        measure_type("sum", "price"),
    ]
    for m in pool:
        assert measures_compatible(m, m)
    for a, b in itertools.product(pool, pool):
        assert measures_compatible(a, b) == measures_compatible(b, a)
    for a, b, c in itertools.product(pool, pool, pool):
        if measures_compatible(a, b) and measures_compatible(b, c):
            assert measures_compatible(a, c)


@pytest.fixture
def market_db(flights_db):
    flights_db.register(make_table(
        "sales",
        [Attribute("market", "dimension", "string"),
         Attribute("price", "measure", "float"),
         ],
        [("west", 5.0), ("east", 7.0)],
    ))
    flights_db.register(make_table(
        "books",
        [Attribute("date", "dimension", "int"),
         Attribute("profits", "measure", "float"),
         Attribute("losses", "measure", "float"),
         ],
        [],
    ))
    return flights_db


def test_exact_match_same_dims_same_measure(flights_db, sfo, oak):
    verdict = match_schemas(sfo, oak, "exact", db=flights_db)
    assert verdict.status == SAFE
    assert verdict.matching == {"date": "date"}


def test_disjoint_dimensions_unsafe(market_db):
    by_date = canonical_view(market_db, "flights", ["date"], "avg", "delay", label="d")
    by_market = canonical_view(market_db, "sales", ["market"], "avg", "price", label="m")
    verdict = match_schemas(by_date, by_market, "exact", db=market_db)
    assert verdict.status == UNSAFE


def test_numeric_measure_mismatch_is_overridable(market_db):
    delay = canonical_view(market_db, "flights", ["date"], "avg", "delay", label="delay")
    price_by_date = canonical_view(market_db, "flights", ["date"], "avg", "delay", label="p")
    price_by_date.measure_override = measure_type("avg", "price")
    verdict = match_schemas(delay, price_by_date, "exact", db=market_db)
    assert verdict.status == UNSAFE_OVERRIDABLE


def test_count_vs_avg_is_overridable(flights_db):
    a = canonical_view(flights_db, "flights", ["date"], "avg", "delay", label="a")
    c = canonical_view(flights_db, "flights", ["date"], "count", "delay", label="c")
    verdict = match_schemas(a, c, "exact", db=flights_db)
    assert verdict.status == UNSAFE_OVERRIDABLE


def test_exact_match_status_is_symmetric(flights_db, sfo, oak, by_date_src):
    pairs = [(sfo, oak), (sfo, by_date_src), (by_date_src, oak), (sfo, sfo)]
    for v1, v2 in pairs:
        s12 = match_schemas(v1, v2, "exact", db=flights_db).status
        s21 = match_schemas(v2, v1, "exact", db=flights_db).status
        assert s12 == s21


def test_superset_mode(flights_db, sfo, by_date_src):
    verdict = match_schemas(by_date_src, sfo, "superset", db=flights_db)
    assert verdict.status == SAFE
    assert verdict.matching == {"date": "date"}
    # reversed: right has dims the left lacks
    assert match_schemas(sfo, by_date_src, "superset", db=flights_db).status == UNSAFE


def test_hierarchy_assisted_match(calendar_db, calendar_h):
    daily = canonical_view(calendar_db, "profits", ["day"], "sum", "profit", label="daily")
    monthly = canonical_view(calendar_db, "profits", ["month"], "avg", "profit", label="monthly")
    verdict = match_schemas(daily, monthly, "exact", h=calendar_h, db=calendar_db)
    assert verdict.status == SAFE
    assert verdict.diff_pair == ("day", "month", "fineToCoarse")
    back = match_schemas(monthly, daily, "exact", h=calendar_h, db=calendar_db)
    assert back.diff_pair == ("month", "day", "coarseToFine")


def test_hierarchy_equal_attrs_prefer_identity(calendar_db, calendar_h):
    a = canonical_view(calendar_db, "profits", ["day", "month"], "sum", "profit", label="a")
    b = canonical_view(calendar_db, "profits", ["day", "month"], "sum", "profit", label="b")
    verdict = match_schemas(a, b, "exact", h=calendar_h, db=calendar_db)
    assert verdict.status == SAFE
    assert verdict.diff_pair is None


def test_without_hierarchy_matching_is_plain_exact(calendar_db, calendar_h):
    daily = canonical_view(calendar_db, "profits", ["day"], "sum", "profit", label="daily")
    monthly = canonical_view(calendar_db, "profits", ["month"], "avg", "profit", label="monthly")
    empty_h = register_hierarchy(set(), calendar_db)
    assert match_schemas(daily, monthly, "exact", db=calendar_db).status == UNSAFE
    assert match_schemas(daily, monthly, "exact", h=empty_h, db=calendar_db).status == UNSAFE


def test_single_value_dims(flights_db, by_date_src):
    sfo2 = canonical_view(flights_db, "flights", ["date", "src"], "avg", "delay",
                          pred=Cmp("=", "src", "SFO"), label="SFO2")
    assert single_value_dims(sfo2, flights_db) == {"src"}
    assert single_value_dims(by_date_src, flights_db) == set()
    one_row = canonical_view(flights_db, "flights", ["date"], "avg", "delay",
                             pred=Cmp("=", "date", 2), label="one")
    assert single_value_dims(one_row, flights_db) == {"date"}


def test_verdict_serializes(flights_db, sfo, oak):
    verdict = match_schemas(sfo, oak, "exact", db=flights_db)
    body = verdict.to_json()
    assert body["v"] == 1
    assert body["status"] == "Safe"
    assert body["matching"] == {"date": "date"}
