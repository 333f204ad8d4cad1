"""A session bundles named tables, named views and an optional hierarchy."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from . import dsl
from .errors import VcaError
from .hierarchy import FD, Hierarchy, register_hierarchy
from .relalg import Predicate, TruePred, pred_from_json
from .tables import Database, Table, load_csv, load_role_hints
from .views import View, VisualMapping, canonical_view


def parse_pred(text: str) -> Predicate:
    parser = dsl.Parser(text)
    pred = parser.pred()
    if parser.tok.kind != "eof":
        parser.error(f"trailing input {parser.tok.text!r}")
    return pred


def _pred_from_spec(spec) -> Predicate:
    if spec in (None, "", "true"):
        return TruePred()
    if isinstance(spec, str):
        return parse_pred(spec)
    return pred_from_json(spec)


@dataclass
class Session:
    db: Database = field(default_factory=Database)
    views: dict = field(default_factory=dict)
    hierarchy: Hierarchy | None = None

    def register_table(self, table: Table) -> None:
        if table.name in self.views:
            raise VcaError(f"name {table.name!r} already names a view")
        self.db.register(table)

    def define_view(self, spec: dict) -> View:
        """View definition: {name, source, pred?, groupby, agg, measure, mark?, encodings?}."""
        name = spec["name"]
        if name in self.views or name in self.db:
            raise VcaError(f"name {name!r} is already taken")
        mapping = None
        if "encodings" in spec:
            mapping = VisualMapping(spec.get("mark", "bar"), dict(spec["encodings"]))
        view = canonical_view(
            self.db,
            source=spec["source"],
            gb=list(spec.get("groupby", [])),
            agg=spec["agg"],
            measure=spec["measure"],
            pred=_pred_from_spec(spec.get("pred")),
            mapping=mapping,
            label=name,
            mark=spec.get("mark", "bar"),
        )
        self.views[name] = view
        return view

    def add_view(self, view: View, name: str | None = None) -> str:
        name = name or view.label
        base = name
        k = 1
        while name in self.views or name in self.db:
            k += 1
            name = f"{base}#{k}"
        self.views[name] = view
        return name

    def set_hierarchy(self, fds) -> None:
        self.hierarchy = register_hierarchy({FD(*f) if not isinstance(f, FD) else f
                                             for f in fds}, self.db)

    def env(self) -> dsl.Env:
        return dsl.Env(db=self.db, views=self.views, hierarchy=self.hierarchy)

    def eval(self, text: str, override: bool = False):
        ast = dsl.parse(text)
        if override:
            ast = _with_override(ast)
        return dsl.eval_expr(ast, self.env())

    def check(self, text: str):
        """Safety verdict for the top-level binary composition of the expression,
        applying the same operand preprocessing the operators use."""
        from .compose import pair_verdict

        ast = dsl.parse(text)
        if not isinstance(ast, (dsl.StatCompose, dsl.UnionCompose)):
            raise VcaError("check needs a binary composition expression")
        env = self.env()
        left = dsl.eval_expr(ast.left, env)
        right = dsl.eval_expr(ast.right, env)
        return pair_verdict(self.db, left, right, h=self.hierarchy)


def _with_override(ast):
    if isinstance(ast, (dsl.StatCompose, dsl.UnionCompose)):
        return dataclasses.replace(ast, override=True)
    return ast


def load_session(data_paths, views_path=None, hierarchy_path=None,
                 roles_path=None) -> Session:
    session = Session()
    hints = load_role_hints(roles_path) if roles_path else None
    for path in data_paths:
        session.register_table(load_csv(path, role_hints=hints))
    if hierarchy_path:
        with open(hierarchy_path, encoding="utf-8") as f:
            fds = [(e["from"], e["to"]) for e in json.load(f)]
        session.set_hierarchy(fds)
    if views_path:
        with open(views_path, encoding="utf-8") as f:
            specs = json.load(f)
        for spec in specs:
            session.define_view(spec)
    return session
