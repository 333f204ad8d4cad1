"""Every composed view compiles to one self-contained ANSI SQL statement.

Run:  python demos/sql_emission.py
"""

from vca.compose import hier_stat_compose, stat_compose, union_compose
from vca.hierarchy import FD, register_hierarchy
from vca.relalg import Cmp
from vca.sqlgen import emit_sql
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view


def main():
    db = Database()
    db.register(make_table(
        "flights",
        [Attribute("date", "dimension", "int"),
         Attribute("src", "dimension", "string"),
         Attribute("delay", "measure", "float")],
        [(1, "SFO", 10.0), (2, "SFO", 20.0), (1, "OAK", 4.0), (2, "OAK", 25.0)],
    ))
    sfo = canonical_view(db, "flights", ["date"], "avg", "delay",
                         pred=Cmp("=", "src", "SFO"), label="SFO")
    oak = canonical_view(db, "flights", ["date"], "avg", "delay",
                         pred=Cmp("=", "src", "OAK"), label="OAK")

    print("-- a view is a plain group-by aggregation:")
    print(emit_sql(sfo.query, db).text)

    print("\n-- statistical composition: full outer join, coalesced keys:")
    print(emit_sql(stat_compose(db, sfo, oak, "-").query, db).text)

    print("\n-- union composition: tagged UNION ALL:")
    print(emit_sql(union_compose(db, sfo, oak).query, db).text)

    db.register(make_table(
        "profits",
        [Attribute("day", "dimension", "string"),
         Attribute("month", "dimension", "string"),
         Attribute("profit", "measure", "float")],
        [("d1", "M1", 10.0), ("d2", "M1", 20.0)],
    ))
    h = register_hierarchy({FD("day", "month")}, db)
    daily = canonical_view(db, "profits", ["day"], "sum", "profit", label="daily")
    monthly = canonical_view(db, "profits", ["month"], "avg", "profit", label="monthly")

    print("\n-- hierarchy join: the translation map rides along as VALUES:")
    print(emit_sql(hier_stat_compose(db, h, daily, monthly, "-").query, db).text)


if __name__ == "__main__":
    main()
