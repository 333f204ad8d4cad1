"""Lifting views into per-group linear models and composing with them.

Lifting fits one ordinary-least-squares model per condition group, using the
chosen quantitative grouping attributes as features.  A model view can be
rendered back into an ordinary view by sampling its feature domain, or used
directly as a composition operand: its models predict the measure for each
row of the other operand, which makes comparisons possible even when the two
views share no attribute values.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDomain,
    InsufficientRows,
    NoFittedGroups,
    NonQuantitativeFeature,
    UnknownAttribute,
)
from .relalg import Base, CanonicalQuery, GroupBy, TruePred
from .safety import MeasureType, match_schemas
from .tables import DIMENSION, MEASURE, Attribute, Database, make_table
from .views import View, VisualMapping, make_view

RIDGE_SCALE = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Linear model: one weight per feature attribute, intercept last."""

    kind: str
    coefficients: tuple
    train_count: int

    def predict(self, features) -> float:
        w = self.coefficients
        return float(sum(x * wi for x, wi in zip(features, w[:-1])) + w[-1])


@dataclass
class ModelView:
    label: str
    condition_attrs: tuple  # Ac: one model per combination of these values
    feature_attrs: tuple  # Ad: quantitative model inputs
    models: dict  # Ac-value tuple -> ModelParams
    source_mapping: VisualMapping
    dim_schema: list  # Attributes for Ac followed by Ad (lineage preserved)
    measure_schema: Attribute
    measure_lineage: MeasureType | None
    untyped: bool = False
    train_ranges: dict = field(default_factory=dict)  # Ad attr -> (lo, hi) numeric
    date_epochs: dict = field(default_factory=dict)  # Ad attr -> epoch date
    warnings: list = field(default_factory=list)

    # Duck-typed view surface so the ordinary safety rules apply to the
    # schema Ac + Ad + measure.
    def schema(self, db: Database):
        return list(self.dim_schema) + [self.measure_schema]

    def dim_attrs(self, db: Database):
        return list(self.dim_schema)

    def dim_names(self, db: Database):
        return [a.name for a in self.dim_schema]

    def measure_attr(self, db: Database) -> Attribute:
        return self.measure_schema

    def measure_type(self, db: Database) -> MeasureType | None:
        return None if self.untyped else self.measure_lineage

    def to_numeric(self, attr: str, value) -> float:
        if isinstance(value, datetime.date):
            return float((value - self.date_epochs[attr]).days)
        return float(value)

    def from_numeric(self, attr: str, value: float):
        if attr in self.date_epochs:
            return self.date_epochs[attr] + datetime.timedelta(days=int(round(value)))
        return value

    def predict(self, key: tuple, features) -> float:
        return self.models[key].predict(features)

    def to_json(self) -> dict:
        return {
            "v": 1,
            "label": self.label,
            "conditionAttrs": list(self.condition_attrs),
            "featureAttrs": list(self.feature_attrs),
            "models": [
                {
                    "key": [None if k is None else k for k in key],
                    "kind": m.kind,
                    "coefficients": list(m.coefficients),
                    "trainCount": m.train_count,
                }
                for key, m in sorted(self.models.items(), key=lambda kv: repr(kv[0]))
            ],
            "warnings": list(self.warnings),
        }


def _solve_ols(xs: np.ndarray, ys: np.ndarray, group, warnings: list) -> tuple:
    """Normal equations with intercept; tiny ridge fallback on exact singularity."""
    design = np.hstack([xs, np.ones((len(xs), 1))])
    gram = design.T @ design
    rhs = design.T @ ys
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        lam = RIDGE_SCALE * float(np.trace(gram))
        beta = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), rhs)
        warnings.append(
            f"singular fit for group {group!r}: rank-deficient features, "
            f"ridge-stabilized (lambda={lam:.3e})"
        )
    return tuple(float(b) for b in beta)


def lift(db: Database, v: View, kind: str = "linear", ad=(), ac=()) -> ModelView:
    """Fit one linear model per Ac group predicting the measure from Ad."""
    if kind != "linear":
        raise NonQuantitativeFeature(f"unknown model kind {kind!r}")
    ad, ac = list(ad), list(ac)
    schema = {a.name: a for a in v.schema(db)}
    dims = set(v.dim_names(db))
    for a in ad + ac:
        if a not in schema:
            raise UnknownAttribute(f"unknown attribute {a!r}")
        if a not in dims:
            raise NonQuantitativeFeature(f"{a!r} is not a grouping attribute of the view")
    if set(ad) & set(ac):
        raise NonQuantitativeFeature(f"feature and condition attributes overlap: {set(ad) & set(ac)}")
    for a in ad:
        if schema[a].datatype not in ("int", "float", "date"):
            raise NonQuantitativeFeature(f"feature {a!r} has non-quantitative type {schema[a].datatype}")

    table = v.data(db)
    names = table.attr_names
    ydx = names.index(v.measure_attr(db).name)
    addx = [names.index(a) for a in ad]
    acdx = [names.index(a) for a in ac]

    date_epochs = {}
    for a in ad:
        if schema[a].datatype == "date":
            vals = [x for x in table.column(a) if x is not None]
            if vals:
                date_epochs[a] = min(vals)

    def numeric(attr, value):
        if isinstance(value, datetime.date):
            return float((value - date_epochs[attr]).days)
        return float(value)

    groups: dict[tuple, list] = {}
    for row in table.rows:
        if row[ydx] is None or any(row[i] is None for i in addx):
            continue
        key = tuple(row[i] for i in acdx)
        groups.setdefault(key, []).append(
            ([numeric(a, row[i]) for a, i in zip(ad, addx)], float(row[ydx]))
        )

    warnings: list[str] = []
    models = {}
    ranges: dict[str, tuple] = {}
    for key in sorted(groups, key=repr):
        rows = groups[key]
        if len(rows) < len(ad) + 1:
            raise InsufficientRows(key if len(key) > 1 else (key[0] if key else "all"))
        xs = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), len(ad))
        ys = np.array([r[1] for r in rows], dtype=float)
        models[key] = ModelParams("linear", _solve_ols(xs, ys, key, warnings), len(rows))
        for j, a in enumerate(ad):
            col = xs[:, j]
            lo, hi = float(col.min()), float(col.max())
            if a in ranges:
                ranges[a] = (min(ranges[a][0], lo), max(ranges[a][1], hi))
            else:
                ranges[a] = (lo, hi)
    if not models:
        raise NoFittedGroups(f"view {v.label!r} has no trainable rows")

    dim_schema = [schema[a] for a in ac] + [schema[a] for a in ad]
    return ModelView(
        label=f"lift({v.label})",
        condition_attrs=tuple(ac),
        feature_attrs=tuple(ad),
        models=models,
        source_mapping=v.mapping.restricted_to(set(ad) | set(ac)),
        dim_schema=dim_schema,
        measure_schema=v.measure_attr(db),
        measure_lineage=v.measure_type(db),
        untyped=v.untyped_measure,
        train_ranges=ranges,
        date_epochs=date_epochs,
        warnings=warnings,
    )


def samples_per_attr(n_features: int, cap_total: int = 1000, cap_each: int = 20) -> int:
    """Per-attribute sample count: 20 equi-distant values, scaled down so the
    cross product never exceeds the total cap (integer floor of the n-th root,
    computed exactly)."""
    if n_features <= 0:
        return 1
    k = 1
    while (k + 1) ** n_features <= cap_total:
        k += 1
    return min(cap_each, k)


def sample_domain(mv: ModelView, domains: dict | None = None) -> list[tuple]:
    """Cross product of equi-distant samples over each feature's domain.

    Domains default to the numeric range observed at training time; callers
    may widen them to extrapolate.  Returns numeric-space tuples aligned with
    mv.feature_attrs.
    """
    ad = list(mv.feature_attrs)
    if not ad:
        return [()]
    doms = {}
    for a in ad:
        if domains and a in domains:
            lo, hi = domains[a]
            lo, hi = mv.to_numeric(a, lo), mv.to_numeric(a, hi)
        elif a in mv.train_ranges:
            lo, hi = mv.train_ranges[a]
        else:
            raise EmptyDomain(f"no domain known for feature {a!r}")
        if lo > hi:
            raise EmptyDomain(f"empty domain for {a!r}: [{lo}, {hi}]")
        doms[a] = (float(lo), float(hi))

    k = samples_per_attr(len(ad))
    per_attr = []
    for a in ad:
        lo, hi = doms[a]
        if lo == hi:
            values = [lo]
        else:
            step = (hi - lo) / (k - 1)
            values = [lo + i * step for i in range(k)]
        if a in mv.date_epochs:
            values = [float(round(x)) for x in values]
        per_attr.append(values)

    grid = [()]
    for values in per_attr:
        grid = [g + (x,) for g in grid for x in values]
    return grid


def _materialize_view(db: Database, label: str, dim_schema, rows,
                      mapping: VisualMapping, lineage, untyped,
                      warnings=()) -> View:
    """Register prediction rows as a derived table wrapped in a canonical view."""
    measure = Attribute("y", MEASURE, "float", "y")
    schema = list(dim_schema) + [measure]
    name = f"_model_{len(db.names())}"
    k = 1
    while name in db:
        k += 1
        name = f"_model_{len(db.names())}_{k}"
    db.register(make_table(name, schema, rows))
    gb = tuple(a.name for a in dim_schema)
    cq = CanonicalQuery(gb, "avg", "y", name, Base(name), TruePred())
    return make_view(
        cq.query, mapping, label, db,
        canonical=cq,
        measure_override=lineage,
        untyped_measure=untyped,
        warnings=list(warnings),
    )


def _sample_attr(a: Attribute) -> Attribute:
    dtype = a.datatype if a.datatype == "date" else "float"
    return Attribute(a.name, DIMENSION, dtype, a.lineage)


def render_model(db: Database, mv: ModelView, domains: dict | None = None) -> View:
    """Materialize per-group predictions over the sampled feature domain as an
    ordinary line view, usable as a composition operand."""
    if not mv.models:
        raise NoFittedGroups(f"model view {mv.label!r} has no fitted groups")
    grid = sample_domain(mv, domains)
    rows = []
    for key in sorted(mv.models, key=repr):
        for point in grid:
            display = tuple(mv.from_numeric(a, x) for a, x in zip(mv.feature_attrs, point))
            rows.append(key + display + (mv.predict(key, point),))

    dim_schema = [a for a in mv.dim_schema if a.name in mv.condition_attrs]
    dim_schema += [_sample_attr(a) for a in mv.dim_schema if a.name in mv.feature_attrs]
    mapping = VisualMapping("line", dict(mv.source_mapping.encodings))
    if "y" not in mapping.encodings.values():
        mapping.encodings["y"] = "y"
    return _materialize_view(db, f"model({mv.label})", dim_schema, rows, mapping,
                             mv.measure_lineage, mv.untyped, mv.warnings)


def compose_view_model(db: Database, v1: View, mv: ModelView, op: str = "-",
                       side: str = "left", how: str = "stat",
                       override: bool = False) -> View:
    """Predict the measure for each row of the view, then compose normally.

    Rows whose condition values have no fitted model are dropped from the
    prediction side and counted in a warning.
    """
    from .compose import compose_pair

    first = (v1, mv) if side == "left" else (mv, v1)
    verdict = match_schemas(first[0], first[1], "exact", db=db)
    from .compose import _require_safe

    _require_safe(verdict, override)

    table = v1.data(db)
    names = table.attr_names
    acdx = [names.index(a) for a in mv.condition_attrs]
    addx = [names.index(a) for a in mv.feature_attrs]
    dim_names = v1.dim_names(db)
    dimdx = [names.index(n) for n in dim_names]

    rows = []
    dropped = 0
    for row in table.rows:
        key = tuple(row[i] for i in acdx)
        if key not in mv.models or any(row[i] is None for i in addx):
            dropped += 1
            continue
        feats = [mv.to_numeric(a, row[i]) for a, i in zip(mv.feature_attrs, addx)]
        rows.append(tuple(row[i] for i in dimdx) + (mv.predict(key, feats),))
    if not rows:
        raise NoFittedGroups(
            f"no row of {v1.label!r} matches a fitted group of {mv.label!r}"
        )
    warnings = []
    if dropped:
        warnings.append(f"{dropped} row(s) had no fitted model for their condition values")

    dim_schema = [a for a in v1.schema(db) if a.name in dim_names]
    predicted = _materialize_view(db, f"model({mv.label})", dim_schema, rows,
                                  v1.mapping.copy(), mv.measure_lineage, mv.untyped,
                                  warnings)
    left, right = (v1, predicted) if side == "left" else (predicted, v1)
    out = compose_pair(db, left, right, op=op, how=how, override=override)
    out.warnings.extend(warnings)
    return out


def compose_model_model(db: Database, mv1: ModelView, mv2: ModelView,
                        op: str = "-", how: str = "stat",
                        domains: dict | None = None,
                        override: bool = False) -> View:
    """Sample a shared feature grid, predict from both model views, and apply
    the ordinary binary composition to the two prediction tables."""
    from .compose import _require_safe, compose_pair

    verdict = match_schemas(mv1, mv2, "exact", db=db)
    _require_safe(verdict, override)
    if tuple(mv1.feature_attrs) != tuple(mv2.feature_attrs):
        raise EmptyDomain(
            f"model views sample different features: "
            f"{mv1.feature_attrs} vs {mv2.feature_attrs}"
        )

    # Both sides must be rendered over the same grid: every feature gets an
    # explicit domain (caller's, else the union of both training ranges) in
    # display space.
    merged: dict = {}
    for a in mv1.feature_attrs:
        if domains and a in domains:
            merged[a] = domains[a]
            continue
        bounds = []
        for mv in (mv1, mv2):
            if a in mv.train_ranges:
                lo, hi = mv.train_ranges[a]
                bounds.append(mv.from_numeric(a, lo))
                bounds.append(mv.from_numeric(a, hi))
        if not bounds:
            raise EmptyDomain(f"no domain known for feature {a!r}")
        merged[a] = (min(bounds), max(bounds))

    rendered1 = render_model(db, mv1, merged)
    rendered2 = render_model(db, mv2, merged)
    return compose_pair(db, rendered1, rendered2, op=op, how=how, override=override)
