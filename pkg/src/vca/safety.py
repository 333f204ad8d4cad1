"""Measure type system and schema matching.

Two views compose safely when their dimension sets admit a unique bijection
(by lineage, optionally assisted by a single hierarchy edge) and their
measure types are compatible.  Incompatible measures over matching dimensions
are overridable when both are numeric; everything else is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownAggregate
from .relalg import evaluate
from .tables import Attribute, Database

SAFE = "Safe"
UNSAFE_OVERRIDABLE = "UnsafeOverridable"
UNSAFE = "Unsafe"

FINE_TO_COARSE = "fineToCoarse"
COARSE_TO_FINE = "coarseToFine"


@dataclass(frozen=True)
class MeasureType:
    """Type of a measure column.

    kind "base" is a raw attribute, "sameas" an aggregate whose output type
    equals its input attribute, "param" a parameterized type such as the one
    count produces.  Raw attributes and same-as aggregates over them are
    interchangeable.
    """

    kind: str  # "base" | "sameas" | "param"
    attr: str
    fn: str | None = None

    def _canon(self) -> tuple:
        kind = "sameas" if self.kind == "base" else self.kind
        return (kind, self.attr, self.fn if self.kind == "param" else None)

    def describe(self) -> str:
        if self.kind == "base":
            return self.attr
        if self.kind == "sameas":
            return f"{self.fn or 'f'}({self.attr}) : {self.attr}"
        return f"{self.fn}<{self.attr}>"


# Output-type registry: which aggregates preserve their input attribute's
# type and which produce a parameterized type of their own.
_SAME_AS = ("avg", "std", "min", "max", "sum")
_PARAM = ("count",)


def measure_type(fn_name: str, attr: str) -> MeasureType:
    if fn_name in _SAME_AS:
        return MeasureType("sameas", attr, fn_name)
    if fn_name in _PARAM:
        return MeasureType("param", attr, fn_name)
    raise UnknownAggregate(f"no measure-type signature for {fn_name!r}")


def measures_compatible(m1: MeasureType, m2: MeasureType) -> bool:
    return m1._canon() == m2._canon()


@dataclass
class SafetyVerdict:
    status: str
    matching: dict[str, str] | None = None
    diff_pair: tuple[str, str, str] | None = None
    reasons: list[str] = field(default_factory=list)

    @property
    def safe(self) -> bool:
        return self.status == SAFE

    def to_json(self) -> dict:
        return {
            "v": 1,
            "status": self.status,
            "matching": self.matching,
            "diffPair": list(self.diff_pair) if self.diff_pair else None,
            "reasons": list(self.reasons),
        }


def _dims(view, db: Database) -> list[Attribute]:
    return [a for a in view.schema(db) if a.role == "dimension"]


def _unsafe(reasons) -> SafetyVerdict:
    return SafetyVerdict(UNSAFE, reasons=list(reasons))


def _match_measures(view1, view2, db, matching, diff_pair, reasons) -> SafetyVerdict:
    m1 = view1.measure_type(db)
    m2 = view2.measure_type(db)
    a1 = view1.measure_attr(db)
    a2 = view2.measure_attr(db)

    # Untyped constants (user-entered values) compose with any numeric measure.
    if m1 is None or m2 is None:
        other = a1 if m2 is None else a2
        if other.numeric:
            reasons.append("untyped constant measure matched to a numeric measure")
            return SafetyVerdict(SAFE, matching, diff_pair, reasons)
        reasons.append("untyped constant cannot match a non-numeric measure")
        return _unsafe(reasons)

    if measures_compatible(m1, m2):
        return SafetyVerdict(SAFE, matching, diff_pair, reasons)

    reasons.append(
        f"incompatible measure types: {m1.describe()} vs {m2.describe()}"
    )
    if a1.numeric and a2.numeric:
        reasons.append("both measures are numeric; composition may be overridden")
        return SafetyVerdict(UNSAFE_OVERRIDABLE, matching, diff_pair, reasons)
    return _unsafe(reasons)


def match_schemas(view1, view2, mode: str = "exact", h=None, db: Database | None = None) -> SafetyVerdict:
    """Match two views' schemas; mode is "exact", "superset" or "nary".

    Exact requires a unique dimension bijection; with a hierarchy, a single
    leftover pair may be matched along an FD path (recorded as diff_pair).
    Superset admits dims(view2) strictly contained in dims(view1).  Nary is
    pairwise exact (callers iterate over the set).
    """
    if db is None:
        raise ValueError("match_schemas needs the table registry")
    mode = mode.lower()
    if mode == "nary":
        mode = "exact"

    dims1, dims2 = _dims(view1, db), _dims(view2, db)
    lin1 = [a.lineage for a in dims1]
    lin2 = [a.lineage for a in dims2]
    reasons: list[str] = []

    for side, lins in (("left", lin1), ("right", lin2)):
        dupes = {x for x in lins if lins.count(x) > 1}
        if dupes:
            reasons.append(f"ambiguous match: duplicate {side} dimension lineage {sorted(dupes)}")
            return _unsafe(reasons)

    map1 = {a.lineage: a for a in dims1}
    map2 = {a.lineage: a for a in dims2}
    common = [l for l in lin1 if l in map2]
    matching = {map1[l].name: map2[l].name for l in common}
    left1 = [map1[l] for l in lin1 if l not in map2]
    left2 = [map2[l] for l in lin2 if l not in map1]

    if mode == "superset":
        if left2:
            reasons.append(
                f"right dimensions {[a.lineage for a in left2]} missing from the left view"
            )
            return _unsafe(reasons)
        return _match_measures(view1, view2, db, matching, None, reasons)

    if not left1 and not left2:
        return _match_measures(view1, view2, db, matching, None, reasons)

    if h is not None and len(left1) == 1 and len(left2) == 1:
        a1, a2 = left1[0], left2[0]
        if h.ancestor(a1.lineage, a2.lineage):
            matching[a1.name] = a2.name
            reasons.append(f"{a1.lineage} maps to {a2.lineage} along the hierarchy")
            return _match_measures(view1, view2, db, matching,
                                   (a1.name, a2.name, FINE_TO_COARSE), reasons)
        if h.ancestor(a2.lineage, a1.lineage):
            matching[a1.name] = a2.name
            reasons.append(f"{a2.lineage} maps to {a1.lineage} along the hierarchy")
            return _match_measures(view1, view2, db, matching,
                                   (a1.name, a2.name, COARSE_TO_FINE), reasons)

    if h is not None and len(left1) == len(left2) and len(left1) > 1:
        relatable = all(
            any(h.related(x.lineage, y.lineage) for y in left2) for x in left1
        )
        if relatable:
            reasons.append(
                "multiple hierarchy-mapped pairs would be needed "
                f"({[a.lineage for a in left1]} vs {[a.lineage for a in left2]}); "
                "only one pair may differ"
            )
            return _unsafe(reasons)

    reasons.append(
        f"dimension sets do not match: {sorted(lin1)} vs {sorted(lin2)}"
    )
    return _unsafe(reasons)


def single_value_dims(view, db: Database) -> set[str]:
    """Grouping attributes whose evaluated result holds exactly one distinct value."""
    table = evaluate(view.query, db)
    out = set()
    for a in _dims(view, db):
        if len(set(table.column(a.name))) == 1:
            out.add(a.name)
    return out
