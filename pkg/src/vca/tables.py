"""In-memory tables: schemas, attribute roles, type inference and CSV ingestion.

A table holds an ordered schema of attributes tagged ``dimension`` or
``measure`` plus a list of row tuples.  Base tables carry exactly one measure;
derived tables produced by the query evaluator may relax that (e.g. join
outputs carry two measure columns before projection).

Tables are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import csv
import datetime
import json
import threading
from dataclasses import dataclass, field

from .errors import AmbiguousMeasure, MalformedCsv, NullValue, UnknownTable

DIMENSION = "dimension"
MEASURE = "measure"

DATATYPES = ("int", "float", "string", "date")
NUMERIC_TYPES = ("int", "float")


@dataclass(frozen=True)
class Attribute:
    """A named column with a role and datatype.

    ``lineage`` names the base-table attribute this column descends from;
    for base tables it is the attribute's own name.  ``agg`` records the
    aggregate that produced a derived measure column.  Schema matching uses
    lineage rather than display names.
    """

    name: str
    role: str
    datatype: str
    lineage: str = ""
    agg: str | None = None

    def __post_init__(self):
        if self.role not in (DIMENSION, MEASURE):
            raise ValueError(f"bad role {self.role!r}")
        if self.datatype not in DATATYPES:
            raise ValueError(f"bad datatype {self.datatype!r}")
        if not self.lineage:
            object.__setattr__(self, "lineage", self.name)

    @property
    def numeric(self) -> bool:
        return self.datatype in NUMERIC_TYPES


@dataclass(frozen=True)
class Table:
    name: str
    schema: tuple[Attribute, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise MalformedCsv(f"duplicate attribute names in {self.name!r}: {names}")
        arity = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != arity:
                raise MalformedCsv(
                    f"row {i} of {self.name!r} has {len(row)} cells, schema has {arity}"
                )

    @property
    def attr_names(self) -> list[str]:
        return [a.name for a in self.schema]

    def attr(self, name: str) -> Attribute:
        for a in self.schema:
            if a.name == name:
                return a
        raise UnknownTable(f"no attribute {name!r} in table {self.name!r}")

    def column(self, name: str) -> list:
        idx = self.attr_names.index(name)
        return [row[idx] for row in self.rows]

    @property
    def measure(self) -> Attribute:
        ms = [a for a in self.schema if a.role == MEASURE]
        if len(ms) != 1:
            raise AmbiguousMeasure(f"table {self.name!r} has {len(ms)} measures")
        return ms[0]

    @property
    def dimensions(self) -> list[Attribute]:
        return [a for a in self.schema if a.role == DIMENSION]


def make_table(name: str, schema, rows) -> Table:
    return Table(name, tuple(schema), tuple(tuple(r) for r in rows))


class Database:
    """Registry of named tables; concurrent reads, exclusive writes."""

    def __init__(self, tables: dict[str, Table] | None = None):
        self._lock = threading.Lock()
        self._tables: dict[str, Table] = dict(tables or {})

    def register(self, table: Table) -> None:
        with self._lock:
            self._tables[table.name] = table

    def get(self, name: str) -> Table:
        try:
            return self._tables[name]
        except KeyError:
            raise UnknownTable(f"unknown table {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._tables

    def names(self) -> list[str]:
        return sorted(self._tables)


# --- value parsing -----------------------------------------------------------

def parse_date(text: str) -> datetime.date:
    return datetime.datetime.strptime(text, "%Y-%m-%d").date()


def _try_types(text: str):
    """Return (datatype, parsed value) using the narrowest type that fits."""
    try:
        return "int", int(text)
    except ValueError:
        pass
    try:
        return "float", float(text)
    except ValueError:
        pass
    try:
        return "date", parse_date(text)
    except ValueError:
        pass
    return "string", text


def infer_column_type(values: list[str]) -> str:
    """Narrowest datatype that fits every non-empty cell of a column."""
    seen = set()
    for v in values:
        if v == "":
            continue
        seen.add(_try_types(v)[0])
    if not seen:
        return "string"
    if seen <= {"int"}:
        return "int"
    if seen <= {"int", "float"}:
        return "float"
    if seen == {"date"}:
        return "date"
    return "string"


def coerce(text: str, datatype: str):
    if text == "":
        return None
    if datatype == "int":
        return int(text)
    if datatype == "float":
        return float(text)
    if datatype == "date":
        return parse_date(text)
    return text


def _pick_measure(header: list[str], types: dict[str, str], hints: dict[str, str]) -> str:
    hinted = [h for h, role in hints.items() if role == MEASURE]
    if len(hinted) > 1:
        raise AmbiguousMeasure(f"multiple measure hints: {hinted}")
    if hinted:
        return hinted[0]
    numeric = [h for h in header if types[h] in NUMERIC_TYPES and hints.get(h) != DIMENSION]
    if len(numeric) == 1:
        return numeric[0]
    # Several numeric columns: integer columns often encode dates/ids and make
    # fine dimensions, so a lone float column still identifies the measure.
    floats = [h for h in numeric if types[h] == "float"]
    if len(floats) == 1:
        return floats[0]
    raise AmbiguousMeasure(
        f"cannot infer the measure among numeric columns {numeric}; pass a role hint"
    )


def load_csv(path, role_hints: dict[str, str] | None = None, name: str | None = None) -> Table:
    """Load an RFC-4180 CSV file (header row mandatory) into a Table.

    Roles: hints win; otherwise the single numeric column, or the single
    float column among several numerics, is the measure and everything else
    is a dimension.  Null dimension or measure cells are rejected.
    """
    with open(path, newline="", encoding="utf-8") as f:
        return _parse_csv(csv.reader(f), str(path), role_hints, name or _stem(path))


def load_csv_text(text: str, name: str, role_hints: dict[str, str] | None = None) -> Table:
    """Same as load_csv but over in-memory CSV text (service uploads)."""
    import io

    return _parse_csv(csv.reader(io.StringIO(text)), name, role_hints, name)


def _parse_csv(reader, origin: str, role_hints, table_name: str) -> Table:
    hints = dict(role_hints or {})
    path = origin
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv(f"{path}: empty file, header row required") from None
    raw_rows = list(reader)

    if len(set(header)) != len(header):
        raise MalformedCsv(f"{path}: duplicate column names {header}")
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise MalformedCsv(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")

    columns = {h: [r[j] for r in raw_rows] for j, h in enumerate(header)}
    types = {h: infer_column_type(columns[h]) for h in header}

    if raw_rows:
        measure_name = _pick_measure(header, types, hints)
    else:
        # Degenerate empty file: nothing to infer from, keep the last column
        # as a float measure so the table is still well-formed.
        hinted = [h for h, role in hints.items() if role == MEASURE]
        measure_name = hinted[0] if hinted else header[-1]
        types[measure_name] = "float" if types[measure_name] == "string" else types[measure_name]

    schema = []
    for h in header:
        role = MEASURE if h == measure_name else DIMENSION
        dt = types[h]
        if role == MEASURE and dt not in NUMERIC_TYPES:
            if raw_rows:
                raise AmbiguousMeasure(f"{path}: hinted measure {h!r} is not numeric")
            dt = "float"
        schema.append(Attribute(h, role, dt))

    rows = []
    for i, raw in enumerate(raw_rows):
        row = []
        for j, h in enumerate(header):
            value = coerce(raw[j], types[h])
            if value is None:
                raise NullValue(f"{path}: null {h!r} cell in data row {i + 1}")
            row.append(value)
        rows.append(tuple(row))

    return make_table(table_name, schema, rows)


def load_role_hints(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as f:
        hints = json.load(f)
    for attr, role in hints.items():
        if role not in (DIMENSION, MEASURE):
            raise MalformedCsv(f"bad role {role!r} for {attr!r} in {path}")
    return hints


def _stem(path) -> str:
    import os

    return os.path.splitext(os.path.basename(str(path)))[0]
