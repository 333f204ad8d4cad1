"""Walk through the core composition operators on a toy flight-delay table.

Run:  python demos/flight_comparisons.py
"""

from vca.compose import (
    constant_view,
    explode,
    extract,
    stat_compose,
    union_compose,
    viewset_stat,
    viewset_union,
)
from vca.relalg import Cmp
from vca.tables import Attribute, Database, make_table
from vca.views import build_chartspec, canonical_view


def show(title, view, db):
    table = view.data(db)
    print(f"\n== {title}  ({view.label})")
    print("   " + " | ".join(table.attr_names))
    for row in sorted(table.rows, key=repr):
        print("   " + " | ".join(str(v) for v in row))


def main():
    db = Database()
    db.register(make_table(
        "flights",
        [Attribute("date", "dimension", "int"),
         Attribute("src", "dimension", "string"),
         Attribute("delay", "measure", "float")],
        [(1, "SFO", 10.0), (2, "SFO", 20.0), (3, "SFO", 30.0),
         (1, "OAK", 4.0), (2, "OAK", 25.0), (3, "OAK", 18.0)],
    ))

    # A view is a group-by aggregation plus a visual mapping.
    sfo = canonical_view(db, "flights", ["date"], "avg", "delay",
                         pred=Cmp("=", "src", "SFO"), label="SFO")
    oak = canonical_view(db, "flights", ["date"], "avg", "delay",
                         pred=Cmp("=", "src", "OAK"), label="OAK")
    both = canonical_view(db, "flights", ["date", "src"], "avg", "delay", label="ALL")

    # Statistical composition joins on shared grouping attributes and
    # computes a new measure from the two operands'.
    show("difference per day", stat_compose(db, sfo, oak, "-"), db)

    # Union composition juxtaposes the marks, tagged by source view.
    union = union_compose(db, sfo, oak)
    show("union with qid column", union, db)
    print("   layout:", build_chartspec(union, db).layout_mode)

    # A 0-dimensional constant broadcasts over the finer view.
    show("each day minus 12", stat_compose(db, sfo, constant_view(db, 12), "-"), db)

    # A single mark composes like a constant: its only grouping value is
    # dropped, so the day-2 OAK delay is subtracted from every SFO bar.
    mark = extract(db, oak, Cmp("=", "date", 2))
    show("SFO minus OAK's day-2 mark", stat_compose(db, sfo, mark, "-"), db)

    # Decomposition: one standalone view per src value, then reassembled.
    vs = explode(db, both, ["src"])
    print("\nexploded views:", [v.label for v in vs])
    show("reassembled by union", viewset_union(db, vs), db)

    # N-ary statistics recompute from base rows: the average over both
    # airports is not the average of the two per-airport averages.
    show("daily average over both airports", viewset_stat(db, vs, "avg"), db)


if __name__ == "__main__":
    main()
