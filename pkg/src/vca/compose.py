"""Composition and decomposition operators over views.

Binary statistical composition joins two views' results on their shared
grouping attributes and combines the measures with an arithmetic operator;
union composition merges the rows of both views, distinguished by a synthetic
``qid`` dimension.  Viewset operators union the *pre-aggregated* inputs before
re-aggregating, so summary statistics are always computed over base data and
never over already-aggregated values.  Hierarchy-aware variants translate or
re-aggregate one operand when the views differ by a single pair of
FD-related attributes.
"""

from __future__ import annotations

import itertools

from .errors import (
    MemberError,
    NoFreeVisualAttr,
    NonCanonicalView,
    NotAGroupingAttr,
    PredicateTypeError,
    QueryTypeError,
    SchemaMismatch,
    UnknownAggregate,
    UnknownAttribute,
    UnknownOp,
    UnsafeComposition,
    VcaError,
)
from .hierarchy import Hierarchy
from .relalg import (
    AGGREGATES,
    And,
    Arith,
    Base,
    CanonicalQuery,
    Cmp,
    Coalesce,
    EqCond,
    GroupBy,
    Join,
    Lit,
    MapRel,
    NonCanonical,
    Predicate,
    Project,
    QueryExpr,
    Ref,
    Select,
    TranslateCond,
    TruePred,
    Union,
    and_preds,
    canonicalize,
    infer_schema,
    pred_attrs,
    pred_text,
)
from .safety import (
    COARSE_TO_FINE,
    FINE_TO_COARSE,
    UNSAFE_OVERRIDABLE,
    SafetyVerdict,
    match_schemas,
    single_value_dims,
)
from .tables import MEASURE, Attribute, Database, make_table
from .views import View, ViewSet, VisualMapping, make_view, make_viewset

BINARY_OPS = ("+", "-", "*", "/")


def _check_op(op: str) -> None:
    if op not in BINARY_OPS:
        raise UnknownOp(f"unknown binary operator {op!r}")


def _require_safe(verdict: SafetyVerdict, override: bool) -> None:
    if verdict.safe:
        return
    if verdict.status == UNSAFE_OVERRIDABLE and override:
        return
    raise UnsafeComposition(verdict)


def _provenance_warnings(db, v1, v2) -> list[str]:
    from .safety import measures_compatible

    m1, m2 = v1.measure_type(db), v2.measure_type(db)
    if m1 is not None and m2 is not None and not measures_compatible(m1, m2):
        return [f"composed measure keeps the left operand's lineage ({m1.describe()})"]
    return []


# --- single-unique-value handling ---------------------------------------------------

def drop_single_value_dims(db: Database, v: View) -> tuple[View, list[str]]:
    """Remove grouping attributes that hold one distinct value in v's result.

    Attributes that encode no variation must not affect composition semantics;
    dropping them may turn an exact composition into a superset one.
    """
    dropped = sorted(single_value_dims(v, db))
    if not dropped:
        return v, []
    if v.canonical is not None:
        cq = v.canonical
        reduced = CanonicalQuery(
            gb=tuple(g for g in cq.gb if g not in dropped),
            agg=cq.agg, measure=cq.measure, source=cq.source,
            preagg=cq.preagg, pred=cq.pred, out=cq.out,
        )
        query: QueryExpr = reduced.query
        canonical = reduced
    else:
        keep = [a.name for a in v.schema(db) if a.name not in dropped]
        query = Project(tuple((Ref(n), n) for n in keep), v.query)
        canonical = None
    slim = View(
        query=query,
        mapping=v.mapping.without(dropped),
        label=v.label,
        canonical=canonical,
        measure_override=v.measure_override,
        untyped_measure=v.untyped_measure,
    )
    return slim, dropped


# --- binary statistical composition ---------------------------------------------------

def stat_compose(db: Database, v1: View, v2: View, op: str = "-",
                 override: bool = False) -> View:
    """Full-outer-join both views on the shared grouping attributes and compute
    ``v1.y op v2.y`` as the new measure.  The right operand first loses any
    single-valued grouping attributes; if its dimensions then sit strictly
    inside the left's, composition continues with the nonexact (left-join) rule.
    """
    _check_op(op)
    v2s, _ = drop_single_value_dims(db, v2)

    lin1 = {a.lineage for a in v1.dim_attrs(db)}
    lin2 = {a.lineage for a in v2s.dim_attrs(db)}
    if lin2 < lin1:
        return _stat_nonexact(db, v1, v2s, op, override, label_right=v2.label)

    verdict = match_schemas(v1, v2s, "exact", db=db)
    _require_safe(verdict, override)

    y1 = v1.measure_attr(db).name
    y2 = v2s.measure_attr(db).name
    matching = verdict.matching or {}
    conds = tuple(EqCond(n1, n2) for n1, n2 in matching.items())
    join = Join("full", conds, v1.query, v2s.query)

    cols = [
        (Coalesce((Ref(f"l.{n1}"), Ref(f"r.{matching[n1]}"))), n1)
        for n1 in v1.dim_names(db)
    ]
    cols.append((Arith(op, Ref(f"l.{y1}"), Ref(f"r.{y2}")), "y"))
    query = Project(tuple(cols), join)

    return make_view(
        query, v1.mapping.copy(), f"({v1.label} {op} {v2.label})", db,
        canonical=None,
        measure_override=v1.measure_type(db),
        untyped_measure=v1.untyped_measure,
        warnings=_provenance_warnings(db, v1, v2s),
    )


def stat_compose_nonexact(db: Database, v1: View, v2: View, op: str = "-",
                          override: bool = False) -> View:
    """Statistical composition when v2's grouping attributes sit strictly inside
    v1's: a left outer join on v2's attributes preserves every v1 row and
    broadcasts v2's values over the finer groups.  Not symmetric."""
    _check_op(op)
    return _stat_nonexact(db, v1, v2, op, override, label_right=v2.label)


def _stat_nonexact(db, v1, v2, op, override, label_right):
    verdict = match_schemas(v1, v2, "superset", db=db)
    _require_safe(verdict, override)
    lin1 = {a.lineage for a in v1.dim_attrs(db)}
    lin2 = {a.lineage for a in v2.dim_attrs(db)}
    if not lin2 <= lin1:
        raise UnsafeComposition(verdict, "right dimensions are not a subset of the left's")

    y1 = v1.measure_attr(db).name
    y2 = v2.measure_attr(db).name
    matching = verdict.matching or {}
    conds = tuple(EqCond(n1, n2) for n1, n2 in matching.items())
    join = Join("left", conds, v1.query, v2.query)

    cols = [(Ref(f"l.{n}"), n) for n in v1.dim_names(db)]
    cols.append((Arith(op, Ref(f"l.{y1}"), Ref(f"r.{y2}")), "y"))
    query = Project(tuple(cols), join)

    return make_view(
        query, v1.mapping.copy(), f"({v1.label} {op} {label_right})", db,
        canonical=None,
        measure_override=v1.measure_type(db),
        untyped_measure=v1.untyped_measure,
        warnings=_provenance_warnings(db, v1, v2),
    )


# --- union composition ------------------------------------------------------------------

def _qid_column(schema_names) -> str:
    if "qid" not in schema_names:
        return "qid"
    k = 2
    while f"qid_{k}" in schema_names:
        k += 1
    return f"qid_{k}"


def _dedupe(labels) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for lab in labels:
        if lab in seen:
            seen[lab] += 1
            out.append(f"{lab}#{seen[lab]}")
        else:
            seen[lab] = 1
            out.append(lab)
    return out


def _tagged_branch(db, view: View, template: View, matching: dict[str, str],
                   qid_col: str, qid_value: str) -> QueryExpr:
    """Extend a view's query with a literal source-id column, renaming its
    columns to the template view's names when they differ."""
    tmpl_names = [a.name for a in template.schema(db)]
    names = [a.name for a in view.schema(db)]
    identity = names == tmpl_names and all(matching.get(n, n) == n for n in tmpl_names)
    if identity:
        return Project(((Lit(qid_value), qid_col),), view.query, star=True)
    y_src = view.measure_attr(db).name
    cols = []
    for a in template.schema(db):
        if a.role == MEASURE:
            cols.append((Ref(y_src), a.name))
        else:
            cols.append((Ref(matching.get(a.name, a.name)), a.name))
    cols.append((Lit(qid_value), qid_col))
    return Project(tuple(cols), view.query)


def _finish_union(db, branches, template: View, qid_col: str, label: str,
                  vis_attr: str | None, warnings=()) -> View:
    channel = vis_attr or template.mapping.free_channel()
    if channel is None:
        raise NoFreeVisualAttr(
            f"no unmapped visual attribute left for {qid_col!r} "
            f"(tried {', '.join(('color', 'shape', 'size', 'detail'))})"
        )
    mapping = template.mapping.copy()
    mapping.encodings[qid_col] = channel
    query = Union(tuple(branches))
    try:
        canonical = canonicalize(query)
    except NonCanonical:
        canonical = None
    return make_view(
        query, mapping, label, db,
        canonical=canonical,
        measure_override=template.measure_type(db),
        untyped_measure=template.untyped_measure,
        union_output=True,
        warnings=list(warnings),
    )


def union_compose(db: Database, v1: View, v2: View, qid_source=None,
                  vis_attr: str | None = None, override: bool = False) -> View:
    """Merge both views' rows into one view; a qid column records each row's
    source view and is mapped to the first free visual channel."""
    verdict = match_schemas(v1, v2, "exact", db=db)
    _require_safe(verdict, override)

    qids = _dedupe(list(qid_source) if qid_source else [v1.label, v2.label])
    qid_col = _qid_column([a.name for a in v1.schema(db)])
    matching = verdict.matching or {}

    b1 = Project(((Lit(qids[0]), qid_col),), v1.query, star=True)
    b2 = _tagged_branch(db, v2, v1, matching, qid_col, qids[1])
    return _finish_union(db, [b1, b2], v1, qid_col, f"union({v1.label}, {v2.label})", vis_attr)


# --- decomposition --------------------------------------------------------------------

def extract(db: Database, v: View, pred: Predicate | None = None) -> View:
    """Standalone view holding the subset of rows matching ``pred``; the
    default true predicate yields a copy."""
    pred = pred if pred is not None else TruePred()
    try:
        schema = v.schema(db)
        names = {a.name for a in schema}
        for attr in pred_attrs(pred):
            if attr not in names:
                raise UnknownAttribute(f"predicate references unknown attribute {attr!r}")
        Select(pred, v.query)  # constructs eagerly; full validation below
        infer_schema(Select(pred, v.query), db)
    except (QueryTypeError, UnknownAttribute) as e:
        raise PredicateTypeError(str(e)) from e

    label = f"extract({v.label})" if isinstance(pred, TruePred) \
        else f"{v.label}[{pred_text(pred)}]"

    canonical = None
    query: QueryExpr
    if v.canonical is not None and pred_attrs(pred) <= set(v.canonical.gb):
        cq = v.canonical
        preagg = Select(pred, cq.preagg) if not isinstance(pred, TruePred) else cq.preagg
        pushed = and_preds(cq.pred, pred) if cq.pred is not None else None
        canonical = CanonicalQuery(cq.gb, cq.agg, cq.measure, cq.source,
                                   preagg, pushed, cq.out)
        query = canonical.query
    else:
        query = Select(pred, v.query) if not isinstance(pred, TruePred) else v.query

    return make_view(
        query, v.mapping.copy(), label, db,
        canonical=canonical,
        measure_override=v.measure_override,
        untyped_measure=v.untyped_measure,
        union_output=v.union_output,
    )


def explode(db: Database, v: View, ae) -> ViewSet:
    """One view per distinct combination of the attributes ``ae``; each member
    filters to its group and drops the exploded attributes and their encodings."""
    ae = list(ae)
    schema = v.schema(db)
    names = {a.name: a for a in schema}
    for a in ae:
        if a not in names:
            raise UnknownAttribute(f"unknown attribute {a!r}")
        if names[a].role != "dimension":
            raise NotAGroupingAttr(f"{a!r} is not a grouping attribute")
    if not ae:
        return ViewSet([v])

    table = v.data(db)
    idx = [table.attr_names.index(a) for a in ae]
    combos = sorted({tuple(row[i] for i in idx) for row in table.rows},
                    key=lambda c: tuple((repr(type(x)), repr(x)) for x in c))

    members = []
    for vals in combos:
        if any(x is None for x in vals):
            continue  # null group keys (outer-join padding) have no predicate form
        pred = and_preds(*[Cmp("=", a, val) for a, val in zip(ae, vals)])
        tag = ",".join(f"{a}={val}" for a, val in zip(ae, vals))
        label = f"{v.label}[{tag}]"
        if v.canonical is not None:
            cq = v.canonical
            canonical = CanonicalQuery(
                gb=tuple(g for g in cq.gb if g not in ae),
                agg=cq.agg, measure=cq.measure, source=cq.source,
                preagg=Select(pred, cq.preagg),
                pred=and_preds(cq.pred, pred) if cq.pred is not None else None,
                out=cq.out,
            )
            query: QueryExpr = canonical.query
        else:
            canonical = None
            keep = [a.name for a in schema if a.name not in ae]
            query = Project(tuple((Ref(n), n) for n in keep), Select(pred, v.query))
        members.append(make_view(
            query, v.mapping.without(ae), label, db,
            canonical=canonical,
            measure_override=v.measure_override,
            untyped_measure=v.untyped_measure,
        ))
    return make_viewset(members, db)


# --- viewset composition ---------------------------------------------------------------

def _as_views(vs) -> list[View]:
    return list(vs.views) if isinstance(vs, ViewSet) else list(vs)


def _check_pairwise(db, views) -> None:
    for a, b in itertools.combinations(views, 2):
        verdict = match_schemas(a, b, "nary", db=db)
        if not verdict.safe:
            raise UnsafeComposition(verdict, f"viewset members {a.label!r} and {b.label!r}: "
                                             + "; ".join(verdict.reasons))


def viewset_stat(db: Database, vs, fstar: str) -> View:
    """N-ary statistical composition: union every member's pre-aggregated rows,
    then aggregate with ``fstar`` — statistics are recomputed from base data,
    never from the members' already-aggregated outputs."""
    if fstar not in AGGREGATES:
        raise UnknownAggregate(f"unknown aggregate {fstar!r}")
    views = _as_views(vs)
    if not views:
        raise VcaError("cannot statistically compose an empty viewset")
    if not isinstance(vs, ViewSet):
        _check_pairwise(db, views)

    canonicals = [v.require_canonical() for v in views]
    sources = {cq.source for cq in canonicals}
    if len(sources) != 1:
        raise NonCanonicalView(
            f"viewset members read different base tables {sorted(sources)}; "
            "pre-aggregation union is undefined"
        )
    measures = {cq.measure for cq in canonicals}
    if len(measures) != 1:
        raise NonCanonicalView(f"viewset members aggregate different attributes {sorted(measures)}")
    measure = measures.pop()

    gb0 = list(canonicals[0].gb)
    for cq in canonicals[1:]:
        if set(cq.gb) != set(gb0):
            raise NonCanonicalView("viewset members group by different attributes")

    # Drop attributes that are single-valued in every member's result.
    per_view = [single_value_dims(v, db) for v in views]
    dropped = [g for g in gb0 if all(g in sv for sv in per_view)]
    reduced = [g for g in gb0 if g not in dropped]

    needed = tuple(reduced) + (measure,)
    branches = [
        Project(tuple((Ref(n), n) for n in needed), cq.preagg)
        for cq in canonicals
    ]
    preagg: QueryExpr = branches[0] if len(branches) == 1 else Union(tuple(branches))

    out_name = views[0].measure_attr(db).name
    canonical = CanonicalQuery(tuple(reduced), fstar, measure,
                               canonicals[0].source, preagg, None, out_name)
    mapping = views[0].mapping.restricted_to(set(reduced) | {out_name})
    label = f"{fstar}({', '.join(v.label for v in views)})"
    return make_view(canonical.query, mapping, label, db, canonical=canonical)


def viewset_union(db: Database, vs, vis_attr: str | None = None) -> View:
    """Union every member's rows, tagging each with its source view's qid."""
    views = _as_views(vs)
    if not views:
        raise VcaError("cannot union an empty viewset")
    if not isinstance(vs, ViewSet):
        _check_pairwise(db, views)

    template = views[0]
    qid_col = _qid_column([a.name for a in template.schema(db)])
    qids = _dedupe([v.label for v in views])

    branches = []
    for view, qid in zip(views, qids):
        if view is template:
            branches.append(Project(((Lit(qid), qid_col),), view.query, star=True))
        else:
            verdict = match_schemas(template, view, "exact", db=db)
            branches.append(_tagged_branch(db, view, template, verdict.matching or {},
                                           qid_col, qid))
    label = f"union({', '.join(v.label for v in views)})"
    return _finish_union(db, branches, template, qid_col, label, vis_attr)


def viewset_view(db: Database, vs, v: View, op: str = "-", side: str = "left",
                 how: str = "stat", override: bool = False,
                 h: Hierarchy | None = None, reagg: str | None = None) -> ViewSet:
    """Elementwise composition of a viewset with a view; ``side`` says which
    operand the viewset members take in each pairwise composition."""
    out = []
    for i, member in enumerate(_as_views(vs)):
        left, right = (member, v) if side == "left" else (v, member)
        try:
            out.append(compose_pair(db, left, right, op=op, how=how,
                                    override=override, h=h, reagg=reagg))
        except VcaError as e:
            raise MemberError(i, e) from e
    return ViewSet(out)


def viewset_viewset(db: Database, vs1, vs2, op: str = "-", how: str = "stat",
                    override: bool = False, h: Hierarchy | None = None,
                    reagg: str | None = None) -> ViewSet:
    """Cross product of pairwise compositions."""
    out = []
    for i, a in enumerate(_as_views(vs1)):
        for j, b in enumerate(_as_views(vs2)):
            try:
                out.append(compose_pair(db, a, b, op=op, how=how,
                                        override=override, h=h, reagg=reagg))
            except VcaError as e:
                raise MemberError((i, j), e) from e
    return ViewSet(out)


# --- hierarchy-aware composition ----------------------------------------------------------

def _hier_verdict(db, h, v1, v2, override):
    verdict = match_schemas(v1, v2, "exact", h=h, db=db)
    _require_safe(verdict, override)
    return verdict


def _attr_by_name(view, db, name) -> Attribute:
    for a in view.schema(db):
        if a.name == name:
            return a
    raise UnknownAttribute(name)


def hier_stat_compose(db: Database, h: Hierarchy, v1: View, v2: View,
                      op: str = "-", reagg: str | None = None,
                      override: bool = False) -> View:
    """Statistical composition across granularities.

    When v1 is finer, rows are joined by translating v1's fine values up the
    hierarchy (no reaggregation).  When v2 is finer, v2's pre-aggregation
    input is re-aggregated at v1's granularity first; ``reagg`` defaults to
    v2's own aggregate.
    """
    _check_op(op)
    verdict = _hier_verdict(db, h, v1, v2, override)
    if verdict.diff_pair is None:
        return stat_compose(db, v1, v2, op, override)

    a1name, a2name, direction = verdict.diff_pair
    matching = dict(verdict.matching or {})
    matching.pop(a1name, None)
    y1 = v1.measure_attr(db).name
    y2 = v2.measure_attr(db).name
    warnings = _provenance_warnings(db, v1, v2)

    if direction == FINE_TO_COARSE:
        if reagg is not None:
            warnings.append("reagg ignored: the finer view is on the left, no reaggregation needed")
        a1 = _attr_by_name(v1, db, a1name)
        a2 = _attr_by_name(v2, db, a2name)
        tm = h.translation(a1.lineage, a2.lineage, db)
        conds = tuple(EqCond(n1, n2) for n1, n2 in matching.items()) + (
            TranslateCond(a1name, a2name, "left", tm.pairs),
        )
        join = Join("full", conds, v1.query, v2.query)
        cols = []
        for n in v1.dim_names(db):
            if n == a1name:
                cols.append((Ref(f"l.{a1name}"), a1name))
            else:
                cols.append((Coalesce((Ref(f"l.{n}"), Ref(f"r.{matching[n]}"))), n))
        cols.append((Arith(op, Ref(f"l.{y1}"), Ref(f"r.{y2}")), "y"))
        query = Project(tuple(cols), join)
    else:
        q2p = _reaggregated(db, h, v1, v2, a1name, a2name, reagg, default_from="right")
        # The re-aggregated side names its columns by lineage.
        lin = {n: _attr_by_name(v1, db, n).lineage for n in v1.dim_names(db)}
        conds = tuple(EqCond(n, lin[n]) for n in v1.dim_names(db))
        join = Join("full", conds, v1.query, q2p)
        cols = []
        for n in v1.dim_names(db):
            cols.append((Coalesce((Ref(f"l.{n}"), Ref(f"r.{lin[n]}"))), n))
        cols.append((Arith(op, Ref(f"l.{y1}"), Ref(f"r.y")), "y"))
        query = Project(tuple(cols), join)

    return make_view(
        query, v1.mapping.copy(), f"({v1.label} {op} {v2.label})", db,
        canonical=None,
        measure_override=v1.measure_type(db),
        untyped_measure=v1.untyped_measure,
        warnings=warnings,
    )


def _reaggregated(db, h, v1, v2, a1name, a2name, reagg, default_from: str) -> QueryExpr:
    """Re-aggregate v2's pre-aggregation input at v1's granularity.

    Returns a group-by over v2's base rows whose grouping attributes are the
    shared dimensions plus v1's differing attribute (reached through the
    translation map when v2's base table lacks that column).
    """
    cq2 = v2.require_canonical()
    if reagg is None:
        if default_from == "right":
            reagg = cq2.agg
        else:
            if v1.canonical is None:
                raise NonCanonicalView(
                    f"view {v1.label!r} is not canonical; pass reagg explicitly"
                )
            reagg = v1.canonical.agg
    if reagg not in AGGREGATES:
        raise UnknownAggregate(f"unknown reaggregation function {reagg!r}")

    a1 = _attr_by_name(v1, db, a1name)
    a2 = _attr_by_name(v2, db, a2name)
    preagg_cols = [a.name for a in infer_schema(cq2.preagg, db)]

    if a1.lineage in preagg_cols:
        reagg_input: QueryExpr = cq2.preagg
    else:
        # The coarse attribute lives in another table: splice it in through
        # the materialized translation map.
        tm = h.translation(a2.lineage, a1.lineage, db)
        maprel = MapRel(f"{a2.lineage}__fine", a1.lineage, tm.pairs)
        join = Join("inner", (EqCond(a2.lineage, f"{a2.lineage}__fine"),), cq2.preagg, maprel)
        cols = [(Ref(f"l.{c}"), c) for c in preagg_cols]
        cols.append((Ref(f"r.{a1.lineage}"), a1.lineage))
        reagg_input = Project(tuple(cols), join)

    gb = []
    for n in v1.dim_names(db):
        gb.append(a1.lineage if n == a1name else _attr_by_name(v1, db, n).lineage)
    return GroupBy(tuple(gb), reagg, cq2.measure, reagg_input, out="y")


def hier_union_compose(db: Database, h: Hierarchy, v1: View, v2: View,
                       reagg: str | None = None, override: bool = False,
                       vis_attr: str | None = None) -> View:
    """Union composition across granularities.

    A coarser v2 is duplicated over each matching fine value of v1; a finer
    v2 is re-aggregated to v1's granularity (``reagg`` defaults to v1's own
    aggregate).
    """
    verdict = _hier_verdict(db, h, v1, v2, override)
    if verdict.diff_pair is None:
        return union_compose(db, v1, v2, override=override, vis_attr=vis_attr)

    a1name, a2name, direction = verdict.diff_pair
    matching = dict(verdict.matching or {})
    matching.pop(a1name, None)
    y2 = v2.measure_attr(db).name

    if direction == FINE_TO_COARSE:
        a1 = _attr_by_name(v1, db, a1name)
        a2 = _attr_by_name(v2, db, a2name)
        tm = h.translation(a1.lineage, a2.lineage, db)
        fine_list = Project(((Ref(a1name), a1name),), v1.query, distinct=True)
        join = Join("left", (TranslateCond(a1name, a2name, "left", tm.pairs),),
                    fine_list, v2.query)
        cols = []
        for a in v1.schema(db):
            if a.name == a1name:
                cols.append((Ref(f"l.{a1name}"), a1name))
            elif a.role == MEASURE:
                cols.append((Ref(f"r.{y2}"), a.name))
            else:
                cols.append((Ref(f"r.{matching[a.name]}"), a.name))
        q2p: QueryExpr = Project(tuple(cols), join)
    else:
        grouped = _reaggregated(db, h, v1, v2, a1name, a2name, reagg, default_from="left")
        # Align the re-aggregated query's columns with v1's schema.
        a1 = _attr_by_name(v1, db, a1name)
        cols = []
        for a in v1.schema(db):
            if a.role == MEASURE:
                cols.append((Ref("y"), a.name))
            elif a.name == a1name:
                cols.append((Ref(a1.lineage), a.name))
            else:
                cols.append((Ref(_attr_by_name(v1, db, a.name).lineage), a.name))
        q2p = Project(tuple(cols), grouped)

    qids = _dedupe([v1.label, v2.label])
    qid_col = _qid_column([a.name for a in v1.schema(db)])
    b1 = Project(((Lit(qids[0]), qid_col),), v1.query, star=True)
    b2 = Project(((Lit(qids[1]), qid_col),), q2p, star=True)
    return _finish_union(db, [b1, b2], v1, qid_col,
                         f"union({v1.label}, {v2.label})", vis_attr)


# --- constants and dispatch -----------------------------------------------------------

def _register_derived(db: Database, stem: str, schema, rows) -> str:
    name = f"_{stem}"
    k = 1
    while name in db:
        k += 1
        name = f"_{stem}_{k}"
    db.register(make_table(name, schema, rows))
    return name


def constant_view(db: Database, value, label: str | None = None,
                  measure_attr: str | None = None) -> View:
    """0-dimensional view holding a single value.

    ``measure_attr`` types the constant as derived from a base measure; left
    unset, the constant is untyped and composes with any numeric measure.
    """
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise QueryTypeError(f"constant views hold numbers, got {value!r}")
    label = label or str(value)
    col = measure_attr or "value"
    dtype = "int" if isinstance(value, int) else "float"
    tname = _register_derived(
        db, f"const_{len(db.names())}",
        [Attribute(col, MEASURE, dtype, col)], [(value,)],
    )
    cq = CanonicalQuery((), "avg", col, tname, Base(tname), TruePred())
    return make_view(
        cq.query, VisualMapping("text", {"y": "y"}), label, db,
        canonical=cq,
        untyped_measure=measure_attr is None,
    )


def pair_verdict(db: Database, v1, v2, h: Hierarchy | None = None) -> SafetyVerdict:
    """Verdict a binary composition of these operands would be gated on,
    applying the same preprocessing as the operators themselves."""
    v2p = v2
    if isinstance(v2, View):
        v2p, _ = drop_single_value_dims(db, v2)
    lin1 = {a.lineage for a in v1.dim_attrs(db)}
    lin2 = {a.lineage for a in v2p.dim_attrs(db)}
    if lin2 < lin1:
        return match_schemas(v1, v2p, "superset", db=db)
    return match_schemas(v1, v2p, "exact", h=h, db=db)


def compose_pair(db: Database, left, right, op: str = "-", how: str = "stat",
                 override: bool = False, h: Hierarchy | None = None,
                 reagg: str | None = None):
    """Dispatch a binary composition over View/ViewSet operands, choosing the
    hierarchy-aware operator when the schemas differ by an FD-related pair."""
    lvs, rvs = isinstance(left, ViewSet), isinstance(right, ViewSet)
    if lvs and rvs:
        return viewset_viewset(db, left, right, op=op, how=how, override=override,
                               h=h, reagg=reagg)
    if lvs:
        return viewset_view(db, left, right, op=op, side="left", how=how,
                            override=override, h=h, reagg=reagg)
    if rvs:
        return viewset_view(db, right, left, op=op, side="right", how=how,
                            override=override, h=h, reagg=reagg)

    if h is not None:
        probe = match_schemas(left, right, "exact", h=h, db=db)
        if probe.diff_pair is not None:
            if how == "union":
                return hier_union_compose(db, h, left, right, reagg=reagg, override=override)
            return hier_stat_compose(db, h, left, right, op=op, reagg=reagg, override=override)
    if how == "union":
        return union_compose(db, left, right, override=override)
    return stat_compose(db, left, right, op=op, override=override)
