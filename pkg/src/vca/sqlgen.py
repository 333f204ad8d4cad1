"""Emit standard SQL text for any query AST.

The emitted text uses ANSI constructs only: quoted identifiers, INNER/LEFT/
FULL OUTER JOIN, UNION ALL (multiset semantics), COALESCE, NULLIF-guarded
division (division by zero yields NULL, matching the native evaluator) and
stddev_pop for the population standard deviation.  Translation-map join atoms
compile to joins against inline VALUES relations so the statement stays
self-contained.  Dates are represented as ISO-8601 strings.  Subquery aliases
are allocated uniquely in emission order, so the text is deterministic for a
given AST.
"""

from __future__ import annotations

import datetime
import itertools
from dataclasses import dataclass

from .errors import UnsupportedConstruct
from .relalg import (
    And,
    Arith,
    Base,
    Cmp,
    Coalesce,
    EqCond,
    GroupBy,
    InSet,
    Join,
    Lit,
    MapRel,
    Not,
    Or,
    Predicate,
    Project,
    QueryExpr,
    Ref,
    Select,
    TranslateCond,
    TruePred,
    Union,
    infer_schema,
)
from .tables import Database

_AGG_SQL = {
    "avg": "avg",
    "min": "min",
    "max": "max",
    "sum": "sum",
    "count": "count",
    "std": "stddev_pop",
}


@dataclass(frozen=True)
class SqlText:
    text: str
    dialect: str = "ansi"

    def __str__(self):
        return self.text


def ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def literal(v) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        raise UnsupportedConstruct("boolean literals are not part of the dialect")
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    if isinstance(v, datetime.date):
        return f"'{v.isoformat()}'"
    if isinstance(v, (int, float)):
        return repr(v)
    raise UnsupportedConstruct(f"cannot emit literal {v!r}")


def _expr(e, qualifier: str | None = None) -> str:
    q = f"{ident(qualifier)}." if qualifier else ""
    if isinstance(e, Ref):
        return f"{q}{ident(e.name)}"
    if isinstance(e, Lit):
        return literal(e.value)
    if isinstance(e, Coalesce):
        return "COALESCE(" + ", ".join(_expr(a, qualifier) for a in e.args) + ")"
    if isinstance(e, Arith):
        left, right = _expr(e.left, qualifier), _expr(e.right, qualifier)
        if e.op == "/":
            # Promote to float and null out zero denominators.
            return f"({left} * 1.0 / NULLIF({right}, 0))"
        return f"({left} {e.op} {right})"
    raise UnsupportedConstruct(f"cannot emit expression {e!r}")


def _pred(p: Predicate, qualifier: str | None = None) -> str:
    q = f"{ident(qualifier)}." if qualifier else ""
    if isinstance(p, TruePred):
        return "1 = 1"
    if isinstance(p, Cmp):
        op = "<>" if p.op == "!=" else p.op
        return f"{q}{ident(p.attr)} {op} {literal(p.value)}"
    if isinstance(p, InSet):
        vals = ", ".join(literal(v) for v in p.values)
        return f"{q}{ident(p.attr)} IN ({vals})"
    if isinstance(p, And):
        return " AND ".join(f"({_pred(x, qualifier)})" for x in p.parts)
    if isinstance(p, Or):
        return " OR ".join(f"({_pred(x, qualifier)})" for x in p.parts)
    if isinstance(p, Not):
        return f"NOT ({_pred(p.part, qualifier)})"
    raise UnsupportedConstruct(f"cannot emit predicate {p!r}")


def _values_from_item(pairs, alias: str, fine_col: str, coarse_col: str) -> str:
    """Aliased FROM item over an inline pair list.

    Standard SQL has no empty VALUES list; an empty map becomes a single
    all-NULL row, which no equality join condition can ever match.
    """
    rows = ", ".join(f"({literal(f)}, {literal(c)})" for f, c in pairs) or "(NULL, NULL)"
    return f"(VALUES {rows}) AS {ident(alias)} ({ident(fine_col)}, {ident(coarse_col)})"


class _Emitter:
    """Stateful walk allocating unique, deterministic subquery aliases."""

    def __init__(self, db: Database):
        self.db = db
        self._seq = itertools.count(1)

    def alias(self, stem: str) -> str:
        # leading underscore keeps generated aliases out of the table namespace
        return f"_{stem}{next(self._seq)}"

    # ------------------------------------------------------------------

    def from_item(self, q: QueryExpr, alias: str) -> str:
        if isinstance(q, Base):
            return f"{ident(q.table)} AS {ident(alias)}"
        return f"({self.emit(q)}) AS {ident(alias)}"

    def _filtered_source(self, q: QueryExpr, alias: str) -> tuple[str, str | None]:
        """FROM body plus optional WHERE, fusing filters over base scans."""
        if isinstance(q, Base):
            return f"FROM {ident(q.table)} AS {ident(alias)}", None
        if isinstance(q, Select) and isinstance(q.input, Base):
            return (
                f"FROM {ident(q.input.table)} AS {ident(alias)}",
                _pred(q.pred, alias),
            )
        return f"FROM ({self.emit(q)}) AS {ident(alias)}", None

    def emit(self, q: QueryExpr) -> str:
        if isinstance(q, Base):
            return f"SELECT * FROM {ident(q.table)}"

        if isinstance(q, MapRel):
            t = self.alias("m")
            sql = f"SELECT * FROM {_values_from_item(q.pairs, t, q.fine, q.coarse)}"
            if not q.pairs:
                sql += " WHERE 1 = 0"
            return sql

        if isinstance(q, Select):
            if isinstance(q.input, Base):
                return f"SELECT * FROM {ident(q.input.table)} WHERE {_pred(q.pred)}"
            t = self.alias("t")
            return (
                f"SELECT * FROM ({self.emit(q.input)}) AS {ident(t)} "
                f"WHERE {_pred(q.pred, t)}"
            )

        if isinstance(q, Project):
            t = self.alias("t")
            parts = []
            if q.star:
                parts.append(f"{ident(t)}.*")
            for e, name in q.cols:
                parts.append(f"{_expr(e, t)} AS {ident(name)}")
            head = "SELECT DISTINCT" if q.distinct else "SELECT"
            body, where = self._filtered_source(q.input, t)
            sql = f"{head} {', '.join(parts)} {body}"
            if where:
                sql += f" WHERE {where}"
            return sql

        if isinstance(q, GroupBy):
            t = self.alias("t")
            agg = _AGG_SQL[q.agg]
            cols = [f"{ident(t)}.{ident(g)}" for g in q.gb]
            cols.append(f"{agg}({ident(t)}.{ident(q.measure)}) AS {ident(q.out)}")
            body, where = self._filtered_source(q.input, t)
            sql = f"SELECT {', '.join(cols)} {body}"
            if where:
                sql += f" WHERE {where}"
            if q.gb:
                sql += " GROUP BY " + ", ".join(f"{ident(t)}.{ident(g)}" for g in q.gb)
            return sql

        if isinstance(q, Join):
            return self._emit_join(q)

        if isinstance(q, Union):
            return "\nUNION ALL\n".join(f"({self.emit(i)})" for i in q.inputs)

        raise UnsupportedConstruct(f"cannot emit {type(q).__name__}")

    def _emit_join(self, q: Join) -> str:
        ls = infer_schema(q.left, self.db)
        rs = infer_schema(q.right, self.db)
        la, ra = self.alias("l"), self.alias("r")

        left_sql = self.from_item(q.left, la)
        right_sql = self.from_item(q.right, ra)

        # Translation atoms become equality joins against an added lookup
        # column, spliced onto the fine side through an inline VALUES relation.
        atoms = []
        translates = [c for c in q.conds if isinstance(c, TranslateCond)]
        per_side = [c.fine_side for c in translates]
        if per_side.count("left") > 1 or per_side.count("right") > 1:
            raise UnsupportedConstruct("at most one translation atom per join side")
        for c in translates:
            xl = self.alias("__xlat")
            tm = self.alias("tm")
            fs = self.alias("fs")
            values = _values_from_item(c.pairs, tm, "f", "c")
            if c.fine_side == "left":
                inner = self.from_item(q.left, fs)
                left_sql = (
                    f"(SELECT {ident(fs)}.*, {ident(tm)}.{ident('c')} AS {ident(xl)} "
                    f"FROM {inner} LEFT OUTER JOIN {values} "
                    f"ON {ident(fs)}.{ident(c.left)} = {ident(tm)}.{ident('f')}) AS {ident(la)}"
                )
                atoms.append(f"{ident(la)}.{ident(xl)} = {ident(ra)}.{ident(c.right)}")
            else:
                inner = self.from_item(q.right, fs)
                right_sql = (
                    f"(SELECT {ident(fs)}.*, {ident(tm)}.{ident('c')} AS {ident(xl)} "
                    f"FROM {inner} LEFT OUTER JOIN {values} "
                    f"ON {ident(fs)}.{ident(c.right)} = {ident(tm)}.{ident('f')}) AS {ident(ra)}"
                )
                atoms.append(f"{ident(la)}.{ident(c.left)} = {ident(ra)}.{ident(xl)}")

        ltypes = {a.name: a.datatype for a in ls}
        rtypes = {a.name: a.datatype for a in rs}
        for c in q.conds:
            if isinstance(c, EqCond):
                lref = f"{ident(la)}.{ident(c.left)}"
                rref = f"{ident(ra)}.{ident(c.right)}"
                if ltypes[c.left] != rtypes[c.right]:
                    # int/float keys compare by value; align the engine types
                    lref = f"CAST({lref} AS DOUBLE PRECISION)"
                    rref = f"CAST({rref} AS DOUBLE PRECISION)"
                atoms.append(f"{lref} = {rref}")

        cols = [f"{ident(la)}.{ident(a.name)} AS {ident('l.' + a.name)}" for a in ls]
        cols += [f"{ident(ra)}.{ident(a.name)} AS {ident('r.' + a.name)}" for a in rs]

        kind = {"inner": "INNER JOIN", "left": "LEFT OUTER JOIN",
                "full": "FULL OUTER JOIN"}[q.kind]
        on = " AND ".join(atoms) if atoms else "1 = 1"
        return f"SELECT {', '.join(cols)} FROM {left_sql} {kind} {right_sql} ON {on}"


def emit(q: QueryExpr, db: Database) -> str:
    return _Emitter(db).emit(q)


def emit_sql(q: QueryExpr, db: Database) -> SqlText:
    """Compile a query AST to a single ANSI SQL statement."""
    infer_schema(q, db)  # validate before emitting
    return SqlText(emit(q, db))
