"""Dimension hierarchies as DAGs of functional dependencies.

An FD ``day -> month`` says every day value determines one month value.
Edges point from finer to coarser granularity.  Translation maps are the
materialized (fine value, coarse value) pairs obtained by scanning the table
hosting both attributes; scanning doubles as the functional-dependency check,
so contradictory data surfaces at registration time rather than mid-composition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CycleDetected, FdViolated, NoPath, UnknownAttribute
from .tables import DIMENSION, Database


@dataclass(frozen=True)
class FD:
    fine: str
    coarse: str

    def __post_init__(self):
        if self.fine == self.coarse:
            raise CycleDetected(f"self-dependency {self.fine} -> {self.coarse}")


@dataclass(frozen=True)
class TranslationMap:
    fine: str
    coarse: str
    pairs: tuple[tuple, ...]

    def as_dict(self) -> dict:
        return {f: c for f, c in self.pairs}

    def compose(self, other: "TranslationMap") -> "TranslationMap":
        """Pairs of self.fine -> other.coarse through the shared attribute."""
        step = other.as_dict()
        pairs = tuple(sorted(
            {(f, step[c]) for f, c in self.pairs if c in step},
            key=lambda p: (repr(type(p[0])), repr(p[0])),
        ))
        return TranslationMap(self.fine, other.coarse, pairs)


def _scan_pairs(db: Database, table: str, fine: str, coarse: str) -> TranslationMap:
    t = db.get(table)
    fi, ci = t.attr_names.index(fine), t.attr_names.index(coarse)
    mapping: dict = {}
    for row in t.rows:
        f, c = row[fi], row[ci]
        if f in mapping and mapping[f] != c:
            raise FdViolated(f, {mapping[f], c}, fine, coarse)
        mapping[f] = c
    pairs = tuple(sorted(mapping.items(), key=lambda p: (repr(type(p[0])), repr(p[0]))))
    return TranslationMap(fine, coarse, pairs)


class Hierarchy:
    """Validated DAG of FDs with materialized per-edge translation maps."""

    def __init__(self, fds: set[FD], attr_tables: dict[str, str],
                 edge_maps: dict[tuple[str, str], TranslationMap]):
        self.fds = frozenset(fds)
        self.attr_tables = dict(attr_tables)
        self._edge_maps = edge_maps
        self._succ: dict[str, set[str]] = {}
        for fd in self.fds:
            self._succ.setdefault(fd.fine, set()).add(fd.coarse)

    def attrs(self) -> set[str]:
        out = set()
        for fd in self.fds:
            out.add(fd.fine)
            out.add(fd.coarse)
        return out

    def _path(self, fine: str, coarse: str) -> list[str] | None:
        """Shortest FD path fine -> ... -> coarse, as a list of attrs."""
        if fine == coarse:
            return [fine]
        frontier = [[fine]]
        seen = {fine}
        while frontier:
            nxt = []
            for path in frontier:
                for succ in sorted(self._succ.get(path[-1], ())):
                    if succ == coarse:
                        return path + [succ]
                    if succ not in seen:
                        seen.add(succ)
                        nxt.append(path + [succ])
            frontier = nxt
        return None

    def ancestor(self, fine: str, coarse: str) -> bool:
        """True when a directed FD path leads from fine to coarse."""
        if fine == coarse:
            return False
        return self._path(fine, coarse) is not None

    def related(self, a: str, b: str) -> bool:
        return self.ancestor(a, b) or self.ancestor(b, a)

    def translation(self, fine: str, coarse: str, db: Database) -> TranslationMap:
        """Compose the per-edge maps along the FD path; identity for fine == coarse."""
        if fine == coarse:
            table = self.attr_tables.get(fine)
            if table is None:
                raise UnknownAttribute(f"{fine!r} is not a hierarchy attribute")
            values = sorted(set(db.get(table).column(fine)),
                            key=lambda v: (repr(type(v)), repr(v)))
            return TranslationMap(fine, fine, tuple((v, v) for v in values))
        path = self._path(fine, coarse)
        if path is None:
            raise NoPath(f"no FD path from {fine!r} to {coarse!r}")
        tm = self._edge_maps[(path[0], path[1])]
        for lo, hi in zip(path[1:], path[2:]):
            tm = tm.compose(self._edge_maps[(lo, hi)])
        return tm


def _host_table(db: Database, attr_tables: dict[str, str], fd: FD) -> str:
    """Table to scan for an edge: must contain both endpoint columns."""
    preferred = attr_tables.get(fd.fine)
    candidates = []
    for name in db.names():
        cols = db.get(name).attr_names
        if fd.fine in cols and fd.coarse in cols:
            candidates.append(name)
    if preferred in candidates:
        return preferred
    if candidates:
        return candidates[0]
    raise NoPath(f"no registered table contains both {fd.fine!r} and {fd.coarse!r}")


def register_hierarchy(fds, db: Database, attr_tables: dict[str, str] | None = None) -> Hierarchy:
    """Validate the FD set (endpoints resolve to dimensions, edges form a DAG)
    and eagerly materialize every edge's translation map.
    """
    fds = {fd if isinstance(fd, FD) else FD(*fd) for fd in fds}
    attr_tables = dict(attr_tables or {})

    for fd in fds:
        for attr in (fd.fine, fd.coarse):
            if attr in attr_tables:
                host = attr_tables[attr]
                if host not in db or attr not in db.get(host).attr_names:
                    raise UnknownAttribute(f"{attr!r} not found in declared table {host!r}")
                continue
            hosts = [n for n in db.names() if attr in db.get(n).attr_names]
            if not hosts:
                raise UnknownAttribute(f"hierarchy attribute {attr!r} not in any registered table")
            attr_tables[attr] = hosts[0]
        for attr, host in ((fd.fine, attr_tables[fd.fine]), (fd.coarse, attr_tables[fd.coarse])):
            if db.get(host).attr(attr).role != DIMENSION:
                raise UnknownAttribute(f"hierarchy attribute {attr!r} is not a dimension")

    # DAG check: depth-first search for a back edge.
    succ: dict[str, set[str]] = {}
    for fd in fds:
        succ.setdefault(fd.fine, set()).add(fd.coarse)
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]):
        state[node] = 1
        for nxt in sorted(succ.get(node, ())):
            if state.get(nxt) == 1:
                raise CycleDetected(" -> ".join(trail + [node, nxt]))
            if state.get(nxt, 0) == 0:
                visit(nxt, trail + [node])
        state[node] = 2

    for node in sorted(succ):
        if state.get(node, 0) == 0:
            visit(node, [])

    edge_maps = {
        (fd.fine, fd.coarse): _scan_pairs(db, _host_table(db, attr_tables, fd), fd.fine, fd.coarse)
        for fd in fds
    }
    return Hierarchy(fds, attr_tables, edge_maps)


def load_hierarchy_file(path, db: Database) -> Hierarchy:
    """Hierarchy file: JSON list of {"from": attr, "to": attr}."""
    with open(path, encoding="utf-8") as f:
        spec = json.load(f)
    fds = {FD(entry["from"], entry["to"]) for entry in spec}
    return register_hierarchy(fds, db)
