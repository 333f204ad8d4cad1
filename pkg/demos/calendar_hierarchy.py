"""Comparing views at different granularities through a day->month hierarchy.

Run:  python demos/calendar_hierarchy.py
"""

from vca.compose import hier_stat_compose, hier_union_compose
from vca.hierarchy import FD, register_hierarchy
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view


def show(title, view, db):
    table = view.data(db)
    print(f"\n== {title}")
    print("   " + " | ".join(table.attr_names))
    for row in sorted(table.rows, key=repr):
        print("   " + " | ".join(str(v) for v in row))


def main():
    db = Database()
    db.register(make_table(
        "profits",
        [Attribute("day", "dimension", "string"),
         Attribute("month", "dimension", "string"),
         Attribute("profit", "measure", "float")],
        [("d1", "M1", 10.0), ("d2", "M1", 20.0),
         ("d3", "M2", 30.0), ("d4", "M2", 40.0)],
    ))

    # day functionally determines month; registration scans the data and
    # would fail loudly if any day appeared in two months.
    h = register_hierarchy({FD("day", "month")}, db)

    daily = canonical_view(db, "profits", ["day"], "sum", "profit", label="daily")
    monthly = canonical_view(db, "profits", ["month"], "avg", "profit", label="monthly")

    # Finer minus coarser: each day is matched to its month through the
    # translation map; no reaggregation happens.
    show("each day vs its month's average",
         hier_stat_compose(db, h, daily, monthly, "-"), db)

    # Coarser minus finer: the finer side is re-aggregated from base rows at
    # month granularity first (default: its own aggregate; here max).
    show("month totals minus the month's best day",
         hier_stat_compose(db, h, monthly, daily, "-", reagg="max"), db)

    # Union, coarser on the right: month values are duplicated per day so
    # both series render on the same axis.
    show("daily series with the month average alongside",
         hier_union_compose(db, h, daily, monthly), db)

    # Union, finer on the right: daily values are re-aggregated to months.
    show("monthly series with re-aggregated daily data",
         hier_union_compose(db, h, monthly, daily), db)


if __name__ == "__main__":
    main()
