import math
import random

import numpy as np
import pytest

from vca.errors import (
    EmptyDomain,
    InsufficientRows,
    NoFittedGroups,
    NonQuantitativeFeature,
    UnsafeComposition,
)
from vca.modelview import (
    compose_model_model,
    compose_view_model,
    lift,
    render_model,
    sample_domain,
    samples_per_attr,
)
from vca.tables import Attribute, Database, make_table
from vca.views import canonical_view

from conftest import data_rows


def linear_db(rows, extra_dim=False):
    db = Database()
    schema = [Attribute("date", "dimension", "int")]
    if extra_dim:
        schema.append(Attribute("ampm", "dimension", "string"))
    schema.append(Attribute("y", "measure", "float"))
    db.register(make_table("t", schema, rows))
    return db


def test_exact_fit_recovers_slope_and_intercept():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    (slope, intercept) = mv.models[()].coefficients
    assert abs(slope - 2.0) < 1e-9
    assert abs(intercept - 1.0) < 1e-9
    assert mv.models[()].train_count == 3


def test_constant_target_gives_zero_slope():
    db = linear_db([(1, 4.0), (5, 4.0), (9, 4.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    slope, intercept = mv.models[()].coefficients
    assert abs(slope) < 1e-9
    assert abs(intercept - 4.0) < 1e-9


def test_conditioned_groups_fit_independently():
    rows = [(d, "AM", 2.0 * d + 1.0) for d in range(1, 5)]
    rows += [(d, "PM", -1.0 * d + 10.0) for d in range(1, 5)]
    db = linear_db(rows, extra_dim=True)
    v = canonical_view(db, "t", ["date", "ampm"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=["ampm"])
    assert set(mv.models) == {("AM",), ("PM",)}
    am = mv.models[("AM",)].coefficients
    pm = mv.models[("PM",)].coefficients
    assert abs(am[0] - 2.0) < 1e-9 and abs(am[1] - 1.0) < 1e-9
    assert abs(pm[0] + 1.0) < 1e-9 and abs(pm[1] - 10.0) < 1e-9


def test_insufficient_rows():
    db = linear_db([(1, 3.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    with pytest.raises(InsufficientRows):
        lift(db, v, "linear", ad=["date"], ac=[])


def test_non_quantitative_feature():
    rows = [(d, "AM", 1.0) for d in range(3)]
    db = linear_db(rows, extra_dim=True)
    v = canonical_view(db, "t", ["date", "ampm"], "avg", "y", label="v")
    with pytest.raises(NonQuantitativeFeature):
        lift(db, v, "linear", ad=["ampm"], ac=[])


def test_singular_fit_gets_ridge_and_warning():
    # two exactly collinear features leave the normal equations rank-deficient
    db = Database()
    db.register(make_table(
        "t",
        [Attribute("date", "dimension", "int"),
         Attribute("date2", "dimension", "int"),
         Attribute("y", "measure", "float")],
        [(d, 2 * d, 3.0 * d) for d in range(1, 6)],
    ))
    v = canonical_view(db, "t", ["date", "date2"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date", "date2"], ac=[])
    assert any("singular" in w.lower() for w in mv.warnings)
    assert () in mv.models
    # the ridge-stabilized fit still predicts the collinear data
    for d in range(1, 6):
        assert abs(mv.predict((), [d, 2 * d]) - 3.0 * d) < 1e-3


def test_normal_equation_residuals_on_random_data():
    rng = random.Random(0)
    for trial in range(20):
        n = rng.randint(4, 12)
        rows = [(i, rng.random()) for i in range(n)]
        db = linear_db(rows)
        v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
        mv = lift(db, v, "linear", ad=["date"], ac=[])
        beta = np.array(mv.models[()].coefficients)
        design = np.array([[r[0], 1.0] for r in rows], dtype=float)
        ys = np.array([r[1] for r in rows])
        resid = design.T @ (design @ beta - ys)
        assert np.all(np.abs(resid) <= 1e-8)


def test_sample_counts_respect_cap():
    assert samples_per_attr(1) == 20
    assert samples_per_attr(2) == 20
    assert samples_per_attr(3) == 10
    assert 20 ** 1 <= 1000 and 20 ** 2 <= 1000 and 10 ** 3 <= 1000


def test_sample_domain_equidistant_and_degenerate():
    db = linear_db([(0, 1.0), (19, 2.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    grid = sample_domain(mv, {"date": (0, 19)})
    assert [g[0] for g in grid] == [float(i) for i in range(20)]
    assert sample_domain(mv, {"date": (5, 5)}) == [(5.0,)]
    with pytest.raises(EmptyDomain):
        sample_domain(mv, {"date": (7, 3)})


def test_render_model_evaluates_line():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    rendered = render_model(db, mv, {"date": (1, 3)})
    rows = data_rows(rendered, db)
    assert len(rows) == 20
    assert rendered.mapping.mark == "line"
    xs = sorted(x for x, _ in rows)
    assert xs[0] == 1.0 and xs[-1] == 3.0  # endpoints included
    for x, y in rows:
        assert abs(y - (2 * x + 1)) < 1e-9


def test_render_cardinality_with_groups():
    rows = [(d, "AM", 2.0 * d) for d in range(1, 5)]
    rows += [(d, "PM", 3.0 * d) for d in range(1, 5)]
    db = linear_db(rows, extra_dim=True)
    v = canonical_view(db, "t", ["date", "ampm"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=["ampm"])
    rendered = render_model(db, mv)
    assert len(rendered.data(db).rows) == 40


def test_render_then_lift_recovers_coefficients():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    rendered = render_model(db, mv, {"date": (1, 3)})
    again = lift(db, rendered, "linear", ad=["date"], ac=[])
    b0 = mv.models[()].coefficients
    b1 = again.models[()].coefficients
    assert abs(b0[0] - b1[0]) < 1e-9 and abs(b0[1] - b1[1]) < 1e-9


def test_residual_composition_is_zero_on_linear_data():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0), (4, 9.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    out = compose_view_model(db, v, mv, "-", side="left")
    for row in out.data(db).rows:
        assert abs(row[-1]) <= 1e-9


def test_even_odd_interpolation():
    rows = [(d, 2.0 * d) for d in (2, 4, 6)]
    db = linear_db(rows)
    even = canonical_view(db, "t", ["date"], "avg", "y", label="even")
    db.register(make_table("odd", [Attribute("date", "dimension", "int"),
                                   Attribute("y", "measure", "float")],
                           [(d, 2.0 * d) for d in (1, 3, 5)]))
    odd = canonical_view(db, "odd", ["date"], "avg", "y", label="odd")
    mv = lift(db, even, "linear", ad=["date"], ac=[])
    out = compose_view_model(db, odd, mv, "-", side="left")
    rows = out.data(db).rows
    assert len(rows) == 3
    for row in rows:
        assert abs(row[-1]) <= 1e-9  # model interpolates exactly on linear data


def test_unmatched_condition_rows_warn():
    rows = [(d, "AM", 2.0 * d) for d in range(1, 5)]
    db = linear_db(rows, extra_dim=True)
    v_am = canonical_view(db, "t", ["date", "ampm"], "avg", "y", label="am")
    mv = lift(db, v_am, "linear", ad=["date"], ac=["ampm"])
    db.register(make_table(
        "t2",
        [Attribute("date", "dimension", "int"),
         Attribute("ampm", "dimension", "string"),
         Attribute("y", "measure", "float")],
        [(1, "AM", 5.0), (1, "PM", 5.0), (2, "PM", 6.0)],
    ))
    v2 = canonical_view(db, "t2", ["date", "ampm"], "avg", "y", label="v2")
    out = compose_view_model(db, v2, mv, "-", side="left")
    assert any("no fitted model" in w for w in out.warnings)
    assert len(out.data(db).rows) == 3  # left join keeps unmatched left rows


def test_compose_two_identical_models_is_zero():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv1 = lift(db, v, "linear", ad=["date"], ac=[])
    mv2 = lift(db, v, "linear", ad=["date"], ac=[])
    out = compose_model_model(db, mv1, mv2, "-")
    for row in out.data(db).rows:
        assert abs(row[-1]) <= 1e-9


def test_compose_models_difference_of_lines():
    db = linear_db([(0, 0.0), (1, 2.0), (2, 4.0)])
    v1 = canonical_view(db, "t", ["date"], "avg", "y", label="s2")
    db.register(make_table("u", [Attribute("date", "dimension", "int"),
                                 Attribute("y", "measure", "float")],
                           [(0, 0.0), (1, 1.0), (2, 2.0)]))
    v2 = canonical_view(db, "u", ["date"], "avg", "y", label="s1")
    mv1 = lift(db, v1, "linear", ad=["date"], ac=[])
    mv2 = lift(db, v2, "linear", ad=["date"], ac=[])
    out = compose_model_model(db, mv1, mv2, "-", domains={"date": (0, 2)})
    rows = out.data(db).rows
    assert len(rows) == 20
    for x, y in rows:
        assert abs(y - x) < 1e-9  # (2x) - (1x) = x at every grid point


def test_model_view_json():
    db = linear_db([(1, 3.0), (2, 5.0), (3, 7.0)])
    v = canonical_view(db, "t", ["date"], "avg", "y", label="v")
    mv = lift(db, v, "linear", ad=["date"], ac=[])
    body = mv.to_json()
    assert body["v"] == 1
    assert body["featureAttrs"] == ["date"]
    assert len(body["models"]) == 1
    assert len(body["models"][0]["coefficients"]) == 2
