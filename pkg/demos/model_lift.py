"""Lifting a view into per-group linear models to compare non-overlapping data.

Prices recorded on even days cannot be joined against odd days: every mark
would be unmatched.  Lifting fits a trend to the even days and predicts at
the odd days, so the comparison becomes meaningful.

Run:  python demos/model_lift.py
"""

from vca.dsl import Env, evaluate_text
from vca.modelview import compose_view_model, lift, render_model
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view


def show(title, view, db, limit=10):
    table = view.data(db)
    print(f"\n== {title}")
    print("   " + " | ".join(table.attr_names))
    for row in sorted(table.rows, key=repr)[:limit]:
        print("   " + " | ".join(f"{v:.3f}" if isinstance(v, float) else str(v)
                                 for v in row))


def main():
    db = Database()
    db.register(make_table(
        "even", [Attribute("date", "dimension", "int"),
                 Attribute("price", "measure", "float")],
        [(d, 3.0 * d + 2.0) for d in (2, 4, 6, 8)],
    ))
    db.register(make_table(
        "odd", [Attribute("date", "dimension", "int"),
                Attribute("price", "measure", "float")],
        [(d, 3.0 * d + 5.0) for d in (1, 3, 5, 7)],
    ))
    even = canonical_view(db, "even", ["date"], "avg", "price", label="even")
    odd = canonical_view(db, "odd", ["date"], "avg", "price", label="odd")

    # The raw difference is all nulls: no date appears in both views.
    raw = evaluate_text("odd - even", Env(db=db, views={"odd": odd, "even": even}))
    print("raw difference (no matching dates):")
    for row in sorted(raw.data(db).rows):
        print("  ", row)

    # Lift the even days; its model predicts prices at the odd days.
    mv = lift(db, even, "linear", ad=["date"], ac=[])
    slope, intercept = mv.models[()].coefficients
    print(f"\nfitted even-day trend: price = {slope:.3f} * date + {intercept:.3f}")

    show("odd days minus the interpolated even trend",
         compose_view_model(db, odd, mv, "-"), db)

    show("the model rendered as an ordinary line view",
         render_model(db, mv, {"date": (1, 8)}), db, limit=5)


if __name__ == "__main__":
    main()
