"""Run emitted SQL on a reference engine for differential testing.

The reference engine is polars' SQL context.  Its stddev is sample-based, so
the adapter mechanically rescales stddev_pop(x) through the identity
pop = samp * sqrt((n-1)/n); everything else runs verbatim.  Dates are loaded
as ISO text, matching the dialect convention.
"""

from __future__ import annotations

import datetime
import math
import re

from .tables import Database, Table

_STDDEV_POP = re.compile(r"stddev_pop\(([^()]*)\)", re.IGNORECASE)
_SUM = re.compile(r"(?<![a-z_])sum\(([^()]*)\)", re.IGNORECASE)


def _engine_shims(sql: str) -> str:
    """Adapt two polars deviations from ANSI aggregate semantics.

    stddev_pop is unsupported (rescaled from the engine's sample stddev) and
    sum over an empty or all-null group returns 0 instead of NULL.
    """

    def stddev_repl(m: re.Match) -> str:
        arg = m.group(1)
        return (
            f"CASE WHEN count({arg}) = 0 THEN NULL "
            f"WHEN count({arg}) = 1 THEN 0.0 "
            f"ELSE stddev({arg}) * sqrt((count({arg}) - 1.0) / count({arg})) END"
        )

    def sum_repl(m: re.Match) -> str:
        arg = m.group(1)
        return f"CASE WHEN count({arg}) = 0 THEN NULL ELSE sum({arg}) END"

    return _SUM.sub(sum_repl, _STDDEV_POP.sub(stddev_repl, sql))


_POLARS_DTYPE = {"int": "Int64", "float": "Float64", "string": "String", "date": "String"}


def _frame(table: Table):
    import polars as pl

    data = {}
    schema = {}
    for i, attr in enumerate(table.schema):
        col = [row[i] for row in table.rows]
        if attr.datatype == "date":
            col = [v.isoformat() if v is not None else None for v in col]
        data[attr.name] = col
        schema[attr.name] = getattr(pl, _POLARS_DTYPE[attr.datatype])
    return pl.DataFrame(data, schema=schema)


def run_reference(sql: str, db: Database, columns: list[str]) -> list[tuple]:
    """Execute ``sql`` over the registry on the reference engine; rows come
    back in the requested column order."""
    import polars as pl

    ctx = pl.SQLContext(**{name: _frame(db.get(name)) for name in db.names()})
    out = ctx.execute(_engine_shims(sql), eager=True)
    order = [out.columns.index(c) for c in columns]
    return [tuple(row[i] for i in order) for row in out.rows()]


def normalize_rows(table: Table) -> list[tuple]:
    """Native rows with dates rendered as ISO text, for engine comparison."""
    out = []
    for row in table.rows:
        out.append(tuple(
            v.isoformat() if isinstance(v, datetime.date) else v for v in row
        ))
    return out


def _sort_key(row: tuple):
    key = []
    for v in row:
        if v is None:
            key.append((0, ""))
        elif isinstance(v, bool):
            key.append((1, repr(v)))
        elif isinstance(v, (int, float)):
            key.append((2, round(float(v), 9)))
        else:
            key.append((3, str(v)))
    return key


def same_multiset(native: list[tuple], reference: list[tuple],
                  float_tol: float = 1e-9) -> tuple[bool, str]:
    """Compare row multisets: exact on everything but floats, which match
    within ``float_tol`` (absolute or relative)."""
    if len(native) != len(reference):
        return False, f"row counts differ: native {len(native)} vs reference {len(reference)}"
    a = sorted(native, key=_sort_key)
    b = sorted(reference, key=_sort_key)
    for i, (ra, rb) in enumerate(zip(a, b)):
        if len(ra) != len(rb):
            return False, f"arity differs in row {i}: {ra} vs {rb}"
        for va, vb in zip(ra, rb):
            if va is None and vb is None:
                continue
            if isinstance(va, float) or isinstance(vb, float):
                if va is None or vb is None:
                    return False, f"row {i}: {ra} vs {rb}"
                if math.isclose(float(va), float(vb), rel_tol=float_tol, abs_tol=float_tol):
                    continue
                return False, f"row {i}: {va!r} != {vb!r}"
            if va != vb:
                return False, f"row {i}: {ra} vs {rb}"
    return True, ""
