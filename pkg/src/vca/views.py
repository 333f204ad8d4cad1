"""Views: a query plus a visual mapping, sets of views, and chart specs.

A view is any data-backed component of a visualization — a whole chart, a
single mark, a legend entry or a constant — modeled uniformly as a visual
mapping over a query result.  The ChartSpec is the renderer-neutral JSON
contract consumed by clients.
"""

from __future__ import annotations

import datetime
import itertools
from dataclasses import dataclass, field

from .errors import NonCanonical, NonCanonicalView, SchemaMismatch, UnsafeComposition
from .relalg import (
    CanonicalQuery,
    QueryExpr,
    canonicalize,
    evaluate,
    infer_schema,
    query_from_json,
    query_to_json,
)
from .safety import MeasureType, match_schemas, measure_type
from .tables import MEASURE, Attribute, Database, Table, make_table

MARK_TYPES = ("bar", "line", "point", "area", "rect", "text")
VISUAL_CHANNELS = ("x", "y", "color", "shape", "size", "detail", "row", "column")
# Perceptual-effectiveness order for assigning the source-id channel in unions.
FREE_CHANNEL_ORDER = ("color", "shape", "size", "detail")

# Marks that fill the area between the measure value and zero get juxtaposed
# when unioned; line and point marks superimpose.
FILLED_MARKS = ("bar", "area")


@dataclass
class VisualMapping:
    mark: str
    encodings: dict[str, str]  # query attr -> visual channel

    def __post_init__(self):
        if self.mark not in MARK_TYPES:
            raise SchemaMismatch(f"unknown mark type {self.mark!r}")
        channels = list(self.encodings.values())
        if len(set(channels)) != len(channels):
            raise SchemaMismatch(f"visual channel used twice in {self.encodings}")
        for ch in channels:
            if ch not in VISUAL_CHANNELS:
                raise SchemaMismatch(f"unknown visual channel {ch!r}")

    def validate(self, schema: list[Attribute]) -> None:
        names = {a.name for a in schema}
        missing = [a for a in self.encodings if a not in names]
        if missing:
            raise SchemaMismatch(f"encoded attributes {missing} not in query output {sorted(names)}")

    def copy(self) -> "VisualMapping":
        return VisualMapping(self.mark, dict(self.encodings))

    def without(self, attrs) -> "VisualMapping":
        return VisualMapping(self.mark, {a: c for a, c in self.encodings.items() if a not in attrs})

    def restricted_to(self, attrs) -> "VisualMapping":
        return VisualMapping(self.mark, {a: c for a, c in self.encodings.items() if a in attrs})

    def free_channel(self) -> str | None:
        used = set(self.encodings.values())
        for ch in FREE_CHANNEL_ORDER:
            if ch not in used:
                return ch
        return None

    def to_json(self) -> dict:
        return {"mark": self.mark, "encodings": dict(self.encodings)}

    @classmethod
    def from_json(cls, d: dict) -> "VisualMapping":
        return cls(d["mark"], dict(d.get("encodings", {})))


@dataclass
class View:
    """A visual mapping applied to a query result."""

    query: QueryExpr
    mapping: VisualMapping
    label: str
    canonical: CanonicalQuery | None = None
    measure_override: MeasureType | None = None
    untyped_measure: bool = False  # user-entered constants carry no lineage
    union_output: bool = False
    warnings: list[str] = field(default_factory=list)

    def schema(self, db: Database) -> list[Attribute]:
        return infer_schema(self.query, db)

    def dim_attrs(self, db: Database) -> list[Attribute]:
        return [a for a in self.schema(db) if a.role == "dimension"]

    def dim_names(self, db: Database) -> list[str]:
        return [a.name for a in self.dim_attrs(db)]

    def measure_attr(self, db: Database) -> Attribute:
        ms = [a for a in self.schema(db) if a.role == MEASURE]
        if len(ms) != 1:
            raise SchemaMismatch(
                f"view {self.label!r} must expose exactly one measure, found "
                f"{[a.name for a in ms]}"
            )
        return ms[0]

    def measure_type(self, db: Database) -> MeasureType | None:
        if self.untyped_measure:
            return None
        if self.measure_override is not None:
            return self.measure_override
        m = self.measure_attr(db)
        if m.agg is None:
            return MeasureType("base", m.lineage)
        return measure_type(m.agg, m.lineage)

    def data(self, db: Database) -> Table:
        return evaluate(self.query, db, name=self.label)

    def validate(self, db: Database) -> None:
        schema = self.schema(db)
        self.mapping.validate(schema)
        self.measure_attr(db)

    def require_canonical(self) -> CanonicalQuery:
        if self.canonical is None:
            raise NonCanonicalView(
                f"view {self.label!r} is not in canonical group-by form"
            )
        return self.canonical

    def to_json(self) -> dict:
        return {
            "v": 1,
            "label": self.label,
            "query": query_to_json(self.query),
            "mapping": self.mapping.to_json(),
            "untypedMeasure": self.untyped_measure,
            "unionOutput": self.union_output,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, d: dict) -> "View":
        query = query_from_json(d["query"])
        try:
            canonical = canonicalize(query)
        except NonCanonical:
            canonical = None
        return cls(
            query=query,
            mapping=VisualMapping.from_json(d["mapping"]),
            label=d["label"],
            canonical=canonical,
            untyped_measure=d.get("untypedMeasure", False),
            union_output=d.get("unionOutput", False),
            warnings=list(d.get("warnings", [])),
        )


def make_view(query: QueryExpr, mapping: VisualMapping, label: str, db: Database,
              **kwargs) -> View:
    """Build and validate a view, deriving its canonical decomposition when possible."""
    if "canonical" not in kwargs:
        try:
            kwargs["canonical"] = canonicalize(query)
        except NonCanonical:
            kwargs["canonical"] = None
    view = View(query=query, mapping=mapping, label=label, **kwargs)
    view.validate(db)
    return view


def default_mapping(mark: str, gb, measure_out: str = "y") -> VisualMapping:
    """x for the first grouping attr, y for the measure, then color/detail."""
    enc = {}
    channels = iter(("x", "color", "detail", "row", "column"))
    for attr in gb:
        try:
            enc[attr] = next(channels)
        except StopIteration:
            break
    enc[measure_out] = "y"
    return VisualMapping(mark, enc)


def canonical_view(db: Database, source: str, gb, agg: str, measure: str,
                   pred=None, mapping: VisualMapping | None = None,
                   label: str = "", mark: str = "bar") -> View:
    """Define a view directly from its canonical query parts."""
    from .relalg import canonical_query

    cq = canonical_query(source, gb, agg, measure, pred)
    mapping = mapping or default_mapping(mark, cq.gb, cq.out)
    return make_view(cq.query, mapping, label or f"{agg}({measure})", db, canonical=cq)


@dataclass
class ViewSet:
    """Ordered set of schema-compatible views."""

    views: list[View]

    def __post_init__(self):
        self.views = list(self.views)

    def __len__(self):
        return len(self.views)

    def __iter__(self):
        return iter(self.views)

    def __getitem__(self, i):
        return self.views[i]


def make_viewset(views, db: Database) -> ViewSet:
    """Check pairwise exact compatibility at construction, per the safety rules."""
    views = list(views)
    for v1, v2 in itertools.combinations(views, 2):
        verdict = match_schemas(v1, v2, "exact", db=db)
        if not verdict.safe:
            raise UnsafeComposition(verdict, f"viewset members {v1.label!r} and {v2.label!r}: "
                                             + "; ".join(verdict.reasons))
    return ViewSet(views)


# --- chart specs --------------------------------------------------------------------


def _json_value(v):
    if isinstance(v, datetime.date):
        return v.isoformat()
    return v


@dataclass
class ChartSpec:
    mark: str
    encodings: dict[str, str]
    layout_mode: str  # "superimpose" | "juxtapose"
    data: list[dict]
    warnings: list[str]

    def to_json(self) -> dict:
        return {
            "v": 1,
            "mark": self.mark,
            "encodings": dict(self.encodings),
            "layoutMode": self.layout_mode,
            "data": self.data,
            "warnings": list(self.warnings),
        }


def data_warnings(view: View, db: Database, table: Table | None = None) -> list[str]:
    """View warnings plus a count of null-measure marks in the evaluated data."""
    table = table if table is not None else view.data(db)
    warnings = list(view.warnings)
    midx = table.attr_names.index(view.measure_attr(db).name)
    missing = sum(1 for row in table.rows if row[midx] is None)
    if missing:
        warnings.append(
            f"{missing} mark(s) have no measure value (no matching rows in the other operand)"
        )
    return warnings


def build_chartspec(view: View, db: Database) -> ChartSpec:
    table = view.data(db)
    names = table.attr_names
    data = [dict(zip(names, map(_json_value, row))) for row in table.rows]
    warnings = data_warnings(view, db, table)

    layout = "superimpose"
    if view.union_output and view.mapping.mark in FILLED_MARKS:
        layout = "juxtapose"
    return ChartSpec(
        mark=view.mapping.mark,
        encodings=dict(view.mapping.encodings),
        layout_mode=layout,
        data=data,
        warnings=warnings,
    )
