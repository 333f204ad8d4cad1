"""Command-line entry point.

    vca eval  --data d.csv --views v.json [--hierarchy h.json] --expr "SFO - OAK" --out table
    vca check --data d.csv --views v.json --expr "SFO - OAK"
    vca serve --port 8000

``eval`` writes the result table (CSV), ChartSpec JSON or emitted SQL to
stdout; warnings go to stderr so pipelines stay clean.  ``check`` prints the
safety verdict as JSON and exits 0 (Safe), 2 (UnsafeOverridable) or
3 (Unsafe).  Any engine error exits 1 with the message on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from .errors import VcaError
from .modelview import ModelView
from .session import load_session
from .sqlgen import emit_sql
from .views import View, ViewSet, build_chartspec, data_warnings

log = logging.getLogger("vca")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vca", description=__doc__.strip().splitlines()[0]
                                     if __doc__ else "view composition engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", action="append", required=True,
                       help="CSV file to load (repeatable); table named after the file stem")
        p.add_argument("--views", help="JSON view definitions")
        p.add_argument("--hierarchy", help="JSON list of {from, to} functional dependencies")
        p.add_argument("--roles", help="JSON role hints {attr: dimension|measure}")
        p.add_argument("--expr", required=True, help="composition expression")

    p_eval = sub.add_parser("eval", help="evaluate an expression")
    common(p_eval)
    p_eval.add_argument("--out", choices=("table", "chart", "sql"), default="table")
    p_eval.add_argument("--override", action="store_true",
                        help="override an UnsafeOverridable verdict")

    p_check = sub.add_parser("check", help="print the safety verdict for a composition")
    common(p_check)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    return parser


def _emit_table(view: View, session) -> None:
    table = view.data(session.db)
    dims = [a.name for a in table.schema if a.role == "dimension"]
    measures = [a.name for a in table.schema if a.role == "measure"]
    order = dims + measures
    idx = [table.attr_names.index(n) for n in order]
    rows = sorted(
        ([row[i] for i in idx] for row in table.rows),
        key=lambda r: [(v is None, "" if v is None else v) for v in r],
    )
    writer = csv.writer(sys.stdout)
    writer.writerow(order)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])


def _run_eval(args) -> int:
    session = load_session(args.data, args.views, args.hierarchy, args.roles)
    result = session.eval(args.expr, override=args.override)

    if isinstance(result, ModelView):
        if args.out != "chart":
            print(json.dumps(result.to_json(), indent=2))
            return 0
        from .modelview import render_model

        result = render_model(session.db, result)

    views = list(result) if isinstance(result, ViewSet) else [result]
    for view in views:
        for w in data_warnings(view, session.db):
            print(f"warning: {w}", file=sys.stderr)
        if args.out == "table":
            _emit_table(view, session)
        elif args.out == "chart":
            print(json.dumps(build_chartspec(view, session.db).to_json(), indent=2))
        else:
            print(emit_sql(view.query, session.db).text)
    return 0


def _run_check(args) -> int:
    session = load_session(args.data, args.views, args.hierarchy, args.roles)
    verdict = session.check(args.expr)
    print(json.dumps(verdict.to_json(), indent=2))
    return {"Safe": 0, "UnsafeOverridable": 2, "Unsafe": 3}[verdict.status]


def _run_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    level = os.environ.get("VCA_LOG", "warn").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return _run_eval(args)
        if args.command == "check":
            return _run_check(args)
        return _run_serve(args)
    except VcaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
