import pytest

from vca.hierarchy import FD, register_hierarchy
from vca.relalg import Cmp
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view


def dim(name, dtype="int"):
    return Attribute(name, "dimension", dtype)


def mea(name, dtype="float"):
    return Attribute(name, "measure", dtype)


FLIGHT_ROWS = [
    (1, "SFO", 10.0),
    (2, "SFO", 20.0),
    (3, "SFO", 30.0),
    (1, "OAK", 4.0),
    (2, "OAK", 25.0),
    (3, "OAK", 18.0),
]


@pytest.fixture
def flights_db():
    db = Database()
    db.register(make_table(
        "flights",
        [dim("date"), dim("src", "string"), mea("delay")],
        FLIGHT_ROWS,
    ))
    return db


@pytest.fixture
def sfo(flights_db):
    return canonical_view(flights_db, "flights", ["date"], "avg", "delay",
                          pred=Cmp("=", "src", "SFO"), label="SFO")


@pytest.fixture
def oak(flights_db):
    return canonical_view(flights_db, "flights", ["date"], "avg", "delay",
                          pred=Cmp("=", "src", "OAK"), label="OAK")


@pytest.fixture
def by_date_src(flights_db):
    return canonical_view(flights_db, "flights", ["date", "src"], "avg", "delay",
                          label="ALL")


CALENDAR_ROWS = [
    ("d1", "M1", 10.0),
    ("d2", "M1", 20.0),
    ("d3", "M2", 30.0),
    ("d4", "M2", 40.0),
]


@pytest.fixture
def calendar_db():
    db = Database()
    db.register(make_table(
        "profits",
        [dim("day", "string"), dim("month", "string"), mea("profit")],
        CALENDAR_ROWS,
    ))
    return db


@pytest.fixture
def calendar_h(calendar_db):
    return register_hierarchy({FD("day", "month")}, calendar_db)


def data_rows(view, db):
    """Evaluated view data as a sorted list of tuples."""
    table = view.data(db)
    return sorted(table.rows, key=repr)


def col_names(view, db):
    return [a.name for a in view.schema(db)]
