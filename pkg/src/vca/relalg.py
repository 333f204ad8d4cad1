"""Relational-algebra AST and native evaluator.

Operators: base-table scan, filter, generalized projection, group-by
aggregation, inner/left/full joins and multiset union.  Aggregation follows
SQL semantics exactly (nulls skipped, ``count`` of an all-null column is 0,
a global aggregate over zero rows yields one row) so results stay comparable
with the emitted SQL running on a reference engine.

The distinguished *canonical form* is a group-by aggregation over an
aggregation-free input rooted at a single base table; ``canonicalize``
decomposes a query into that shape or raises ``NonCanonical``.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field

from .errors import (
    NonCanonical,
    QueryTypeError,
    SchemaMismatch,
    UnknownAggregate,
    UnknownAttribute,
)
from .tables import DIMENSION, MEASURE, Attribute, Database, Table, make_table, parse_date

AGGREGATES = ("avg", "min", "max", "sum", "count", "std")
ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


# --- scalar expressions -------------------------------------------------------

@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class Arith:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise QueryTypeError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Coalesce:
    args: tuple


Expr = Ref | Lit | Arith | Coalesce


# --- predicates ---------------------------------------------------------------

@dataclass(frozen=True)
class TruePred:
    pass


@dataclass(frozen=True)
class Cmp:
    op: str
    attr: str
    value: object

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise QueryTypeError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class InSet:
    attr: str
    values: tuple


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Not:
    part: "Predicate"


Predicate = TruePred | Cmp | InSet | And | Or | Not


# --- query nodes ----------------------------------------------------------------

@dataclass(frozen=True)
class Base:
    table: str


@dataclass(frozen=True)
class Select:
    pred: Predicate
    input: "QueryExpr"


@dataclass(frozen=True)
class Project:
    """Compute expressions and rename; ``star`` first copies every input column."""

    cols: tuple  # of (Expr, name)
    input: "QueryExpr"
    star: bool = False
    distinct: bool = False


@dataclass(frozen=True)
class GroupBy:
    gb: tuple
    agg: str
    measure: str
    input: "QueryExpr"
    out: str = "y"

    def __post_init__(self):
        if self.agg not in AGGREGATES:
            raise UnknownAggregate(f"unknown aggregate {self.agg!r}")


@dataclass(frozen=True)
class EqCond:
    left: str
    right: str


@dataclass(frozen=True)
class TranslateCond:
    """Hierarchy join atom: the fine side's value, pushed through the
    translation map, must equal the coarse side's value."""

    left: str
    right: str
    fine_side: str  # "left" | "right"
    pairs: tuple

    def mapping(self) -> dict:
        return {f: c for f, c in self.pairs}


@dataclass(frozen=True)
class Join:
    kind: str  # "inner" | "left" | "full"
    conds: tuple
    left: "QueryExpr"
    right: "QueryExpr"

    def __post_init__(self):
        if self.kind not in ("inner", "left", "full"):
            raise QueryTypeError(f"unknown join kind {self.kind!r}")


@dataclass(frozen=True)
class Union:
    inputs: tuple


@dataclass(frozen=True)
class MapRel:
    """Inline two-column relation holding translation-map pairs, so hierarchy
    joins stay self-contained in both the native evaluator and emitted SQL."""

    fine: str
    coarse: str
    pairs: tuple


QueryExpr = Base | Select | Project | GroupBy | Join | Union | MapRel


# --- schema inference -----------------------------------------------------------

def _value_dtype(value) -> str:
    if isinstance(value, bool):
        raise QueryTypeError("boolean literals are not supported")
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, datetime.date):
        return "date"
    if isinstance(value, str):
        return "string"
    raise QueryTypeError(f"unsupported literal {value!r}")


def _comparable(dt1: str, dt2: str) -> bool:
    numeric = {"int", "float"}
    return dt1 == dt2 or (dt1 in numeric and dt2 in numeric)


def _pair_types(pairs) -> tuple[str, str]:
    if not pairs:
        return "string", "string"
    fine, coarse = pairs[0]
    return _value_dtype(fine), _value_dtype(coarse)


def _lookup(schema: list[Attribute], name: str) -> Attribute:
    for a in schema:
        if a.name == name:
            return a
    raise UnknownAttribute(f"no attribute {name!r} in {[a.name for a in schema]}")


def _expr_attr(expr: Expr, schema: list[Attribute], out_name: str) -> Attribute:
    if isinstance(expr, Ref):
        src = _lookup(schema, expr.name)
        return Attribute(out_name, src.role, src.datatype, src.lineage, src.agg)
    if isinstance(expr, Lit):
        dt = _value_dtype(expr.value)
        role = MEASURE if dt in ("int", "float") else DIMENSION
        return Attribute(out_name, role, dt, out_name)
    if isinstance(expr, Coalesce):
        parts = [_expr_attr(a, schema, out_name) for a in expr.args]
        dt = parts[0].datatype
        if not all(_comparable(dt, p.datatype) for p in parts):
            raise QueryTypeError(f"coalesce over mixed datatypes in {out_name!r}")
        return parts[0]
    if isinstance(expr, Arith):
        lt = _expr_attr(expr.left, schema, out_name)
        rt = _expr_attr(expr.right, schema, out_name)
        for side in (lt, rt):
            if side.datatype not in ("int", "float"):
                raise QueryTypeError(f"arithmetic over non-numeric {side.datatype} column")
        if expr.op == "/":
            dt = "float"
        else:
            dt = "int" if (lt.datatype == rt.datatype == "int") else "float"
        # Composed measures keep the left operand's lineage.
        return Attribute(out_name, MEASURE, dt, lt.lineage, lt.agg)
    raise QueryTypeError(f"unknown expression {expr!r}")


def _validate_pred(pred: Predicate, schema: list[Attribute]) -> None:
    if isinstance(pred, TruePred):
        return
    if isinstance(pred, Cmp):
        attr = _lookup(schema, pred.attr)
        if not _comparable(attr.datatype, _value_dtype(_norm_literal(pred.value, attr.datatype))):
            raise QueryTypeError(
                f"predicate compares {attr.datatype} column {pred.attr!r} with {pred.value!r}"
            )
        return
    if isinstance(pred, InSet):
        attr = _lookup(schema, pred.attr)
        for v in pred.values:
            if not _comparable(attr.datatype, _value_dtype(_norm_literal(v, attr.datatype))):
                raise QueryTypeError(f"IN list value {v!r} does not match {attr.datatype}")
        return
    if isinstance(pred, (And, Or)):
        for p in pred.parts:
            _validate_pred(p, schema)
        return
    if isinstance(pred, Not):
        _validate_pred(pred.part, schema)
        return
    raise QueryTypeError(f"unknown predicate {pred!r}")


def infer_schema(q: QueryExpr, db: Database) -> list[Attribute]:
    """Output schema of ``q``, validating attribute references and types."""
    if isinstance(q, Base):
        return list(db.get(q.table).schema)
    if isinstance(q, Select):
        schema = infer_schema(q.input, db)
        _validate_pred(q.pred, schema)
        return schema
    if isinstance(q, Project):
        schema = infer_schema(q.input, db)
        out: list[Attribute] = []
        if q.star:
            out.extend(schema)
        for expr, name in q.cols:
            out.append(_expr_attr(expr, schema, name))
        names = [a.name for a in out]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate projected names {names}")
        return out
    if isinstance(q, GroupBy):
        schema = infer_schema(q.input, db)
        out = [_lookup(schema, g) for g in q.gb]
        m = _lookup(schema, q.measure)
        if q.agg != "count" and m.datatype not in ("int", "float"):
            raise QueryTypeError(f"{q.agg} over non-numeric column {q.measure!r}")
        if q.agg == "count":
            dt = "int"
        elif q.agg in ("avg", "std"):
            dt = "float"
        else:
            dt = m.datatype
        out.append(Attribute(q.out, MEASURE, dt, m.lineage, q.agg))
        if q.out in q.gb:
            raise SchemaMismatch(f"aggregate output {q.out!r} collides with a grouping attr")
        return out
    if isinstance(q, Join):
        ls = infer_schema(q.left, db)
        rs = infer_schema(q.right, db)
        for cond in q.conds:
            la, ra = _lookup(ls, cond.left), _lookup(rs, cond.right)
            if isinstance(cond, EqCond) and not _comparable(la.datatype, ra.datatype):
                raise QueryTypeError(
                    f"join compares {la.datatype} {cond.left!r} with {ra.datatype} {cond.right!r}"
                )
        return (
            [Attribute(f"l.{a.name}", a.role, a.datatype, a.lineage, a.agg) for a in ls]
            + [Attribute(f"r.{a.name}", a.role, a.datatype, a.lineage, a.agg) for a in rs]
        )
    if isinstance(q, MapRel):
        fine_dt, coarse_dt = _pair_types(q.pairs)
        return [
            Attribute(q.fine, DIMENSION, fine_dt, q.fine),
            Attribute(q.coarse, DIMENSION, coarse_dt, q.coarse),
        ]
    if isinstance(q, Union):
        schemas = [infer_schema(i, db) for i in q.inputs]
        first = schemas[0]
        for s in schemas[1:]:
            if [(a.name, a.datatype) for a in s] != [(a.name, a.datatype) for a in first]:
                raise SchemaMismatch(
                    f"union inputs differ: {[a.name for a in first]} vs {[a.name for a in s]}"
                )
        return first
    raise QueryTypeError(f"unknown query node {q!r}")


# --- evaluation ------------------------------------------------------------------

def _norm_literal(value, datatype: str):
    if datatype == "date" and isinstance(value, str):
        return parse_date(value)
    return value


def _eval_pred(pred: Predicate, row: tuple, idx: dict[str, int], schema: list[Attribute]):
    """Three-valued logic: returns True, False or None (unknown)."""
    if isinstance(pred, TruePred):
        return True
    if isinstance(pred, Cmp):
        v = row[idx[pred.attr]]
        if v is None:
            return None
        lit = _norm_literal(pred.value, schema[idx[pred.attr]].datatype)
        if pred.op == "=":
            return v == lit
        if pred.op == "!=":
            return v != lit
        if pred.op == "<":
            return v < lit
        if pred.op == "<=":
            return v <= lit
        if pred.op == ">":
            return v > lit
        return v >= lit
    if isinstance(pred, InSet):
        v = row[idx[pred.attr]]
        if v is None:
            return None
        dt = schema[idx[pred.attr]].datatype
        return any(v == _norm_literal(x, dt) for x in pred.values)
    if isinstance(pred, And):
        result = True
        for p in pred.parts:
            r = _eval_pred(p, row, idx, schema)
            if r is False:
                return False
            if r is None:
                result = None
        return result
    if isinstance(pred, Or):
        result = False
        for p in pred.parts:
            r = _eval_pred(p, row, idx, schema)
            if r is True:
                return True
            if r is None:
                result = None
        return result
    if isinstance(pred, Not):
        r = _eval_pred(pred.part, row, idx, schema)
        return None if r is None else (not r)
    raise QueryTypeError(f"unknown predicate {pred!r}")


def _eval_expr(expr: Expr, row: tuple, idx: dict[str, int]):
    if isinstance(expr, Ref):
        return row[idx[expr.name]]
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Coalesce):
        for a in expr.args:
            v = _eval_expr(a, row, idx)
            if v is not None:
                return v
        return None
    if isinstance(expr, Arith):
        lv = _eval_expr(expr.left, row, idx)
        rv = _eval_expr(expr.right, row, idx)
        if lv is None or rv is None:
            return None
        if expr.op == "+":
            return lv + rv
        if expr.op == "-":
            return lv - rv
        if expr.op == "*":
            return lv * rv
        try:
            return float(lv) / float(rv)
        except ZeroDivisionError:
            return None
    raise QueryTypeError(f"unknown expression {expr!r}")


def _aggregate(agg: str, values: list):
    vals = [v for v in values if v is not None]
    if agg == "count":
        return len(vals)
    if not vals:
        return None
    if agg == "sum":
        return sum(vals)
    if agg == "avg":
        return float(sum(vals)) / len(vals)
    if agg == "min":
        return min(vals)
    if agg == "max":
        return max(vals)
    if agg == "std":
        mean = float(sum(vals)) / len(vals)
        return math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
    raise UnknownAggregate(agg)


def _cond_holds(cond, lrow, rrow, lidx, ridx) -> bool:
    lv, rv = lrow[lidx[cond.left]], rrow[ridx[cond.right]]
    if lv is None or rv is None:
        return False
    if isinstance(cond, EqCond):
        return lv == rv
    mapping = cond.mapping()
    if cond.fine_side == "left":
        return mapping.get(lv, _MISSING) == rv
    return mapping.get(rv, _MISSING) == lv


class _Missing:
    def __eq__(self, other):
        return False


_MISSING = _Missing()


def evaluate(q: QueryExpr, db: Database, name: str = "result") -> Table:
    """Evaluate ``q`` against the registry, returning a materialized table."""
    schema = infer_schema(q, db)  # validates the whole tree up front
    rows = _eval(q, db)
    return make_table(name, schema, rows)


def _eval(q: QueryExpr, db: Database) -> list[tuple]:
    if isinstance(q, Base):
        return list(db.get(q.table).rows)

    if isinstance(q, MapRel):
        return [tuple(p) for p in q.pairs]

    if isinstance(q, Select):
        schema = infer_schema(q.input, db)
        idx = {a.name: i for i, a in enumerate(schema)}
        rows = _eval(q.input, db)
        return [r for r in rows if _eval_pred(q.pred, r, idx, schema) is True]

    if isinstance(q, Project):
        schema = infer_schema(q.input, db)
        idx = {a.name: i for i, a in enumerate(schema)}
        rows = _eval(q.input, db)
        out = []
        for r in rows:
            head = list(r) if q.star else []
            head.extend(_eval_expr(e, r, idx) for e, _ in q.cols)
            out.append(tuple(head))
        if q.distinct:
            seen = set()
            deduped = []
            for r in out:
                if r not in seen:
                    seen.add(r)
                    deduped.append(r)
            return deduped
        return out

    if isinstance(q, GroupBy):
        schema = infer_schema(q.input, db)
        idx = {a.name: i for i, a in enumerate(schema)}
        rows = _eval(q.input, db)
        groups: dict[tuple, list] = {}
        if not q.gb:
            # Global aggregate: exactly one output row even over empty input,
            # matching SQL's aggregate-without-GROUP-BY.
            groups[()] = []
        mi = idx[q.measure]
        for r in rows:
            key = tuple(r[idx[g]] for g in q.gb)
            groups.setdefault(key, []).append(r[mi])
        return [key + (_aggregate(q.agg, vals),) for key, vals in groups.items()]

    if isinstance(q, Join):
        ls, rs = infer_schema(q.left, db), infer_schema(q.right, db)
        lidx = {a.name: i for i, a in enumerate(ls)}
        ridx = {a.name: i for i, a in enumerate(rs)}
        lrows, rrows = _eval(q.left, db), _eval(q.right, db)
        eq = [c for c in q.conds if isinstance(c, EqCond)]
        residual = [c for c in q.conds if isinstance(c, TranslateCond)]

        # Hash join on the equality conditions; translation atoms filter after.
        index: dict[tuple, list[int]] = {}
        for j, rr in enumerate(rrows):
            key = tuple(rr[ridx[c.right]] for c in eq)
            if any(k is None for k in key):
                continue
            index.setdefault(key, []).append(j)

        lpad = (None,) * len(ls)
        rpad = (None,) * len(rs)
        out = []
        rmatched = [False] * len(rrows)
        for lr in lrows:
            key = tuple(lr[lidx[c.left]] for c in eq)
            matched = False
            if not any(k is None for k in key):
                for j in index.get(key, ()):
                    rr = rrows[j]
                    if all(_cond_holds(c, lr, rr, lidx, ridx) for c in residual):
                        out.append(lr + rr)
                        matched = True
                        rmatched[j] = True
            if not matched and q.kind in ("left", "full"):
                out.append(lr + rpad)
        if q.kind == "full":
            for j, rr in enumerate(rrows):
                if not rmatched[j]:
                    out.append(lpad + rr)
        return out

    if isinstance(q, Union):
        infer_schema(q, db)  # enforce schema compatibility
        out = []
        for i in q.inputs:
            out.extend(_eval(i, db))
        return out

    raise QueryTypeError(f"unknown query node {q!r}")


# --- canonical form ---------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalQuery:
    """Decomposition of gamma_{gb, agg(measure) -> out}(preagg).

    ``preagg`` is aggregation-free and rooted at the single base table
    ``source``; ``pred`` is the filter when the pre-aggregation input is a
    plain (optionally filtered) base-table scan, else None.
    """

    gb: tuple
    agg: str
    measure: str
    source: str
    preagg: QueryExpr
    pred: Predicate | None = None
    out: str = "y"

    @property
    def query(self) -> GroupBy:
        return GroupBy(tuple(self.gb), self.agg, self.measure, self.preagg, self.out)


def contains_aggregation(q: QueryExpr) -> bool:
    if isinstance(q, GroupBy):
        return True
    if isinstance(q, (Base, MapRel)):
        return False
    if isinstance(q, (Select, Project)):
        return contains_aggregation(q.input)
    if isinstance(q, Join):
        return contains_aggregation(q.left) or contains_aggregation(q.right)
    if isinstance(q, Union):
        return any(contains_aggregation(i) for i in q.inputs)
    return False


def base_tables(q: QueryExpr) -> set[str]:
    if isinstance(q, Base):
        return {q.table}
    if isinstance(q, (Select, Project)):
        return base_tables(q.input)
    if isinstance(q, GroupBy):
        return base_tables(q.input)
    if isinstance(q, Join):
        return base_tables(q.left) | base_tables(q.right)
    if isinstance(q, Union):
        out = set()
        for i in q.inputs:
            out |= base_tables(i)
        return out
    return set()


def canonicalize(q: QueryExpr) -> CanonicalQuery:
    """Decompose ``q`` into canonical group-by-aggregation form.

    Raises NonCanonical for anything else (notably the project-over-outer-join
    shape produced by binary statistical composition, where aggregation happens
    before the join and cannot be pushed above it).
    """
    if isinstance(q, GroupBy):
        if contains_aggregation(q.input):
            raise NonCanonical("pre-aggregation input contains aggregation")
        sources = base_tables(q.input)
        if len(sources) != 1:
            raise NonCanonical(f"expected one base table, found {sorted(sources)}")
        pred: Predicate | None = None
        if isinstance(q.input, Base):
            pred = TruePred()
        elif isinstance(q.input, Select) and isinstance(q.input.input, Base):
            pred = q.input.pred
        return CanonicalQuery(
            gb=tuple(q.gb), agg=q.agg, measure=q.measure,
            source=next(iter(sources)), preagg=q.input, pred=pred, out=q.out,
        )
    if isinstance(q, Union):
        return _canonical_tagged_union(q)
    raise NonCanonical(f"query root is {type(q).__name__}, not a group-by aggregation")


def _canonical_tagged_union(q: Union) -> CanonicalQuery:
    subs: list[tuple[CanonicalQuery, Lit, str]] = []
    for part in q.inputs:
        if not (isinstance(part, Project) and part.star and len(part.cols) == 1
                and not part.distinct):
            raise NonCanonical("union branch is not a tagged projection")
        expr, name = part.cols[0]
        if not isinstance(expr, Lit):
            raise NonCanonical("union tag is not a literal")
        subs.append((canonicalize(part.input), expr, name))

    first, _, tag_name = subs[0]
    tags = []
    for cq, tag, name in subs:
        if name != tag_name:
            raise NonCanonical("union branches disagree on the tag column")
        if (cq.agg, cq.measure, cq.source, cq.out, tuple(cq.gb)) != (
            first.agg, first.measure, first.source, first.out, tuple(first.gb)
        ):
            raise NonCanonical("union branches aggregate differently")
        tags.append(tag.value)
    if len(set(tags)) != len(tags):
        raise NonCanonical("union tags are not distinct")

    preagg = Union(tuple(
        Project(((tag, tag_name),), cq.preagg, star=True) for cq, tag, _ in subs
    ))
    return CanonicalQuery(
        gb=tuple(first.gb) + (tag_name,),
        agg=first.agg,
        measure=first.measure,
        source=first.source,
        preagg=preagg,
        pred=None,
        out=first.out,
    )


def canonical_query(source: str, gb, agg: str, measure: str,
                    pred: Predicate | None = None, out: str = "y") -> CanonicalQuery:
    """Build a canonical query directly from its parts."""
    pred = pred or TruePred()
    preagg: QueryExpr = Base(source)
    if not isinstance(pred, TruePred):
        preagg = Select(pred, preagg)
    return CanonicalQuery(tuple(gb), agg, measure, source, preagg, pred, out)


# --- predicate utilities ------------------------------------------------------------

def pred_attrs(p: Predicate) -> set[str]:
    if isinstance(p, TruePred):
        return set()
    if isinstance(p, (Cmp, InSet)):
        return {p.attr}
    if isinstance(p, (And, Or)):
        out = set()
        for part in p.parts:
            out |= pred_attrs(part)
        return out
    if isinstance(p, Not):
        return pred_attrs(p.part)
    raise QueryTypeError(f"unknown predicate {p!r}")


def _lit_text(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, str):
        return "'" + v.replace("'", "\\'") + "'"
    if isinstance(v, datetime.date):
        return f"'{v.isoformat()}'"
    return repr(v)


def pred_text(p: Predicate) -> str:
    """Render a predicate in the surface syntax the DSL parses."""
    if isinstance(p, TruePred):
        return "true"
    if isinstance(p, Cmp):
        return f"{p.attr} {p.op} {_lit_text(p.value)}"
    if isinstance(p, InSet):
        return f"{p.attr} in ({', '.join(_lit_text(v) for v in p.values)})"
    if isinstance(p, And):
        return " and ".join(_paren(x) for x in p.parts)
    if isinstance(p, Or):
        return " or ".join(_paren(x) for x in p.parts)
    if isinstance(p, Not):
        return f"not {_paren(p.part)}"
    raise QueryTypeError(f"unknown predicate {p!r}")


def _paren(p: Predicate) -> str:
    text = pred_text(p)
    return f"({text})" if isinstance(p, (And, Or, Not)) else text


def and_preds(*parts: Predicate) -> Predicate:
    kept = [p for p in parts if not isinstance(p, TruePred)]
    if not kept:
        return TruePred()
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept))


# --- JSON (de)serialization -------------------------------------------------------

def value_to_json(v):
    if isinstance(v, datetime.date):
        return {"$date": v.isoformat()}
    return v


def value_from_json(v):
    if isinstance(v, dict) and "$date" in v:
        return parse_date(v["$date"])
    return v


def expr_to_json(e: Expr):
    if isinstance(e, Ref):
        return {"ref": e.name}
    if isinstance(e, Lit):
        return {"lit": value_to_json(e.value)}
    if isinstance(e, Arith):
        return {"arith": e.op, "left": expr_to_json(e.left), "right": expr_to_json(e.right)}
    if isinstance(e, Coalesce):
        return {"coalesce": [expr_to_json(a) for a in e.args]}
    raise QueryTypeError(f"unknown expression {e!r}")


def expr_from_json(d) -> Expr:
    if "ref" in d:
        return Ref(d["ref"])
    if "lit" in d:
        return Lit(value_from_json(d["lit"]))
    if "arith" in d:
        return Arith(d["arith"], expr_from_json(d["left"]), expr_from_json(d["right"]))
    if "coalesce" in d:
        return Coalesce(tuple(expr_from_json(a) for a in d["coalesce"]))
    raise QueryTypeError(f"bad expression JSON {d!r}")


def pred_to_json(p: Predicate):
    if isinstance(p, TruePred):
        return {"op": "true"}
    if isinstance(p, Cmp):
        return {"op": p.op, "attr": p.attr, "value": value_to_json(p.value)}
    if isinstance(p, InSet):
        return {"op": "in", "attr": p.attr, "values": [value_to_json(v) for v in p.values]}
    if isinstance(p, And):
        return {"op": "and", "parts": [pred_to_json(x) for x in p.parts]}
    if isinstance(p, Or):
        return {"op": "or", "parts": [pred_to_json(x) for x in p.parts]}
    if isinstance(p, Not):
        return {"op": "not", "part": pred_to_json(p.part)}
    raise QueryTypeError(f"unknown predicate {p!r}")


def pred_from_json(d) -> Predicate:
    op = d["op"]
    if op == "true":
        return TruePred()
    if op == "in":
        return InSet(d["attr"], tuple(value_from_json(v) for v in d["values"]))
    if op == "and":
        return And(tuple(pred_from_json(x) for x in d["parts"]))
    if op == "or":
        return Or(tuple(pred_from_json(x) for x in d["parts"]))
    if op == "not":
        return Not(pred_from_json(d["part"]))
    return Cmp(op, d["attr"], value_from_json(d["value"]))


def query_to_json(q: QueryExpr):
    if isinstance(q, Base):
        return {"op": "base", "table": q.table}
    if isinstance(q, Select):
        return {"op": "select", "pred": pred_to_json(q.pred), "input": query_to_json(q.input)}
    if isinstance(q, Project):
        return {
            "op": "project",
            "cols": [{"expr": expr_to_json(e), "as": n} for e, n in q.cols],
            "star": q.star,
            "distinct": q.distinct,
            "input": query_to_json(q.input),
        }
    if isinstance(q, GroupBy):
        return {
            "op": "groupby", "gb": list(q.gb), "agg": q.agg,
            "measure": q.measure, "as": q.out, "input": query_to_json(q.input),
        }
    if isinstance(q, Join):
        conds = []
        for c in q.conds:
            if isinstance(c, EqCond):
                conds.append({"left": c.left, "right": c.right})
            else:
                conds.append({
                    "left": c.left, "right": c.right, "fineSide": c.fine_side,
                    "pairs": [[value_to_json(f), value_to_json(co)] for f, co in c.pairs],
                })
        return {
            "op": "join", "kind": q.kind, "on": conds,
            "left": query_to_json(q.left), "right": query_to_json(q.right),
        }
    if isinstance(q, Union):
        return {"op": "union", "inputs": [query_to_json(i) for i in q.inputs]}
    if isinstance(q, MapRel):
        return {
            "op": "maprel", "fine": q.fine, "coarse": q.coarse,
            "pairs": [[value_to_json(f), value_to_json(c)] for f, c in q.pairs],
        }
    raise QueryTypeError(f"unknown query node {q!r}")


def query_from_json(d) -> QueryExpr:
    op = d["op"]
    if op == "base":
        return Base(d["table"])
    if op == "select":
        return Select(pred_from_json(d["pred"]), query_from_json(d["input"]))
    if op == "project":
        return Project(
            tuple((expr_from_json(c["expr"]), c["as"]) for c in d["cols"]),
            query_from_json(d["input"]),
            star=d.get("star", False),
            distinct=d.get("distinct", False),
        )
    if op == "groupby":
        return GroupBy(tuple(d["gb"]), d["agg"], d["measure"],
                       query_from_json(d["input"]), d.get("as", "y"))
    if op == "join":
        conds = []
        for c in d["on"]:
            if "pairs" in c:
                conds.append(TranslateCond(
                    c["left"], c["right"], c["fineSide"],
                    tuple((value_from_json(f), value_from_json(co)) for f, co in c["pairs"]),
                ))
            else:
                conds.append(EqCond(c["left"], c["right"]))
        return Join(d["kind"], tuple(conds), query_from_json(d["left"]), query_from_json(d["right"]))
    if op == "union":
        return Union(tuple(query_from_json(i) for i in d["inputs"]))
    if op == "maprel":
        return MapRel(d["fine"], d["coarse"],
                      tuple((value_from_json(f), value_from_json(c)) for f, c in d["pairs"]))
    raise QueryTypeError(f"bad query JSON {d!r}")
