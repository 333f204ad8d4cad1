"""Compositional comparison engine for group-by aggregation views."""

from . import compose, errors, hierarchy, modelview, relalg, safety, sqlgen, tables, views
from .compose import (
    constant_view,
    compose_pair,
    explode,
    extract,
    hier_stat_compose,
    hier_union_compose,
    stat_compose,
    stat_compose_nonexact,
    union_compose,
    viewset_stat,
    viewset_union,
    viewset_view,
    viewset_viewset,
)
from .hierarchy import FD, Hierarchy, register_hierarchy
from .modelview import ModelView, compose_model_model, compose_view_model, lift, render_model, sample_domain
from .relalg import canonicalize, evaluate
from .safety import match_schemas, measure_type, measures_compatible, single_value_dims
from .sqlgen import emit_sql
from .tables import Database, Table, load_csv
from .views import ChartSpec, View, ViewSet, VisualMapping, build_chartspec, make_view, make_viewset

__version__ = "0.1.0"
