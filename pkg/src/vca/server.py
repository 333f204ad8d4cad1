"""HTTP facade: sessions, safety checks, composition evaluation, chart specs.

All request/response bodies are JSON and carry a schema version field v=1.
Sessions live in memory and are evicted after an hour of inactivity.  Unsafe
compositions come back as 400 with the verdict body unless the request sets
override; the UI surfaces the verdict reasons and re-sends with override.
"""

from __future__ import annotations

import threading
import time
import uuid

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import UnsafeComposition, VcaError
from .modelview import ModelView, render_model
from .session import Session
from .tables import load_csv_text
from .views import View, ViewSet, build_chartspec

MAX_UPLOAD_BYTES = 10 * 1024 * 1024
SESSION_IDLE_SECONDS = 3600


class TableUpload(BaseModel):
    name: str
    csv: str
    roles: dict[str, str] | None = None


class FdSpec(BaseModel):
    from_: str = Field(alias="from")
    to: str


class SessionUpload(BaseModel):
    v: int = 1
    tables: list[TableUpload]
    views: list[dict] = []
    hierarchy: list[FdSpec] = []


class CheckRequest(BaseModel):
    v: int = 1
    expr: str


class EvalRequest(BaseModel):
    v: int = 1
    expr: str
    override: bool = False
    name: str | None = None


class DecomposeRequest(BaseModel):
    v: int = 1
    view: str
    kind: str  # "extract" | "explode"
    args: dict = {}


class _Store:
    """Session registry: concurrent reads, serialized create/evict."""

    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[Session, float]] = {}

    def create(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._evict_idle()
            self._sessions[sid] = (session, time.monotonic())
        return sid

    def get(self, sid: str) -> Session:
        with self._lock:
            self._evict_idle()
            if sid not in self._sessions:
                raise HTTPException(404, detail="unknown session")
            session, _ = self._sessions[sid]
            self._sessions[sid] = (session, time.monotonic())
            return session

    def drop(self, sid: str) -> None:
        with self._lock:
            self._sessions.pop(sid, None)

    def _evict_idle(self) -> None:
        now = time.monotonic()
        stale = [sid for sid, (_, t) in self._sessions.items()
                 if now - t > SESSION_IDLE_SECONDS]
        for sid in stale:
            del self._sessions[sid]


def _view_payload(session: Session, name: str, view: View) -> dict:
    return {
        "name": name,
        "label": view.label,
        "chartSpec": build_chartspec(view, session.db).to_json(),
    }


def _table_payload(view: View, session: Session) -> dict:
    table = view.data(session.db)
    return {
        "columns": table.attr_names,
        "rows": [[_json_cell(v) for v in row] for row in table.rows],
    }


def _json_cell(v):
    import datetime

    return v.isoformat() if isinstance(v, datetime.date) else v


def create_app() -> FastAPI:
    app = FastAPI(title="view composition service", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = _Store()

    @app.middleware("http")
    async def limit_upload(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > MAX_UPLOAD_BYTES:
            return JSONResponse({"v": 1, "error": "upload exceeds 10 MB"}, status_code=413)
        return await call_next(request)

    @app.exception_handler(UnsafeComposition)
    async def unsafe_handler(request, exc: UnsafeComposition):
        return JSONResponse(
            {"v": 1, "error": str(exc), "verdict": exc.verdict.to_json()},
            status_code=400,
        )

    @app.exception_handler(VcaError)
    async def engine_error_handler(request, exc: VcaError):
        return JSONResponse({"v": 1, "error": str(exc)}, status_code=400)

    @app.exception_handler(Exception)
    async def internal_handler(request, exc):
        return JSONResponse({"v": 1, "error": "internal error"}, status_code=500)

    @app.post("/sessions")
    def create_session(body: SessionUpload):
        session = Session()
        for upload in body.tables:
            session.register_table(load_csv_text(upload.csv, upload.name, upload.roles))
        if body.hierarchy:
            session.set_hierarchy([(fd.from_, fd.to) for fd in body.hierarchy])
        for spec in body.views:
            session.define_view(spec)
        return {"v": 1, "sessionId": store.create(session)}

    @app.get("/sessions/{sid}/views")
    def list_views(sid: str):
        session = store.get(sid)
        out = []
        for name, view in session.views.items():
            if isinstance(view, View):
                out.append(_view_payload(session, name, view))
        return {"v": 1, "views": out}

    @app.post("/sessions/{sid}/check")
    def check(sid: str, body: CheckRequest):
        session = store.get(sid)
        verdict = session.check(body.expr)
        return verdict.to_json()

    @app.post("/sessions/{sid}/eval")
    def eval_expr(sid: str, body: EvalRequest):
        session = store.get(sid)
        result = session.eval(body.expr, override=body.override)

        if isinstance(result, ModelView):
            model_json = result.to_json()
            result = render_model(session.db, result)
            name = session.add_view(result, body.name)
            return {
                "v": 1,
                "name": name,
                "model": model_json,
                "chartSpec": build_chartspec(result, session.db).to_json(),
                "table": _table_payload(result, session),
                "warnings": list(result.warnings),
            }

        if isinstance(result, ViewSet):
            members = []
            for view in result:
                name = session.add_view(view, None)
                members.append({
                    **_view_payload(session, name, view),
                    "table": _table_payload(view, session),
                })
            return {"v": 1, "views": members, "warnings": []}

        name = session.add_view(result, body.name)
        spec = build_chartspec(result, session.db)
        return {
            "v": 1,
            "name": name,
            "chartSpec": spec.to_json(),
            "table": _table_payload(result, session),
            "warnings": list(spec.warnings),
        }

    @app.post("/sessions/{sid}/decompose")
    def decompose(sid: str, body: DecomposeRequest):
        from .compose import explode as explode_op
        from .compose import extract as extract_op
        from .session import _pred_from_spec

        session = store.get(sid)
        if body.view not in session.views:
            raise HTTPException(404, detail=f"unknown view {body.view!r}")
        source = session.views[body.view]
        if not isinstance(source, View):
            raise HTTPException(400, detail="decompose needs a plain view")

        if body.kind == "extract":
            out = [extract_op(session.db, source, _pred_from_spec(body.args.get("pred")))]
        elif body.kind == "explode":
            out = list(explode_op(session.db, source, body.args.get("attrs", [])))
        else:
            raise HTTPException(400, detail=f"unknown decomposition {body.kind!r}")

        members = []
        for view in out:
            name = session.add_view(view, None)
            members.append(_view_payload(session, name, view))
        return {"v": 1, "views": members}

    @app.delete("/sessions/{sid}", status_code=204)
    def drop_session(sid: str):
        store.drop(sid)
        return None

    return app


app = create_app()
