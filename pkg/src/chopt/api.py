"""HTTP surface over a runtime.

Every GET is a pure view of runtime state; only POST endpoints mutate.
Errors use one envelope: {"code", "field", "message"} with code one of
parse, validation, not_found, conflict.  Configs are posted as raw JSON
text so parse errors can report line and column.

The app holds a lock around runtime access; a background ticker (serve
mode) takes the same lock, so handlers always see consistent state.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from chopt.runtime import Runtime
from chopt.space import ConfigError, ParseError, ValidationError
from chopt.store import NotFoundError


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "field": field, "message": message},
    )


def create_app(
    runtime: Runtime,
    lock: threading.Lock | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="chopt", docs_url=None, redoc_url=None)
    app.state.runtime = runtime
    app.state.lock = lock if lock is not None else threading.Lock()

    @app.exception_handler(ParseError)
    def handle_parse(_request: Request, exc: ParseError) -> JSONResponse:
        return _error(400, "parse", str(exc))

    @app.exception_handler(ValidationError)
    def handle_validation(_request: Request, exc: ValidationError) -> JSONResponse:
        return _error(400, "validation", str(exc), field=exc.field)

    @app.exception_handler(ConfigError)
    def handle_config(_request: Request, exc: ConfigError) -> JSONResponse:
        return _error(400, "validation", str(exc))

    @app.exception_handler(NotFoundError)
    def handle_not_found(_request: Request, exc: NotFoundError) -> JSONResponse:
        return _error(404, "not_found", str(exc))

    @app.get("/sessions")
    def list_sessions(status: str | None = None) -> dict[str, Any]:
        with app.state.lock:
            return {"sessions": runtime.list_records(status)}

    @app.post("/sessions", status_code=201)
    async def submit_session(request: Request) -> dict[str, Any]:
        body = await request.body()
        with app.state.lock:
            session_id = runtime.submit(body)
        return {"id": session_id}

    @app.get("/sessions/{session_id}")
    def session_detail(session_id: str) -> dict[str, Any]:
        with app.state.lock:
            return runtime.session_record(session_id)

    @app.get("/sessions/{session_id}/trials")
    def session_trials(session_id: str) -> dict[str, Any]:
        with app.state.lock:
            return runtime.trial_records(session_id)

    @app.get("/sessions/{session_id}/top")
    def session_top(session_id: str, k: int = 10) -> dict[str, Any]:
        with app.state.lock:
            return {"session": session_id, "trials": runtime.top_trials(session_id, k)}

    @app.post("/sessions/{session_id}/rerun", status_code=201)
    async def rerun_session(session_id: str, request: Request) -> dict[str, Any]:
        body = await request.body()
        try:
            payload = json.loads(body) if body else {}
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno) from None
        with app.state.lock:
            new_id = runtime.rerun(session_id, payload)
        return {"id": new_id, "base": session_id}

    @app.post("/sessions/{session_id}/stop")
    def stop_session(session_id: str) -> dict[str, Any]:
        with app.state.lock:
            status = runtime.stop(session_id)
        return {"id": session_id, "status": status}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str, format: str = "csv") -> Response:
        if format not in ("csv", "jsonl"):
            raise ValidationError("format", "must be csv or jsonl")
        with app.state.lock:
            runtime._get(session_id)  # 404 before reading files
            text = runtime.store.export_trials([session_id], format)
        media = "text/csv" if format == "csv" else "application/x-ndjson"
        return Response(content=text, media_type=media)

    @app.get("/export")
    def export_many(ids: str, format: str = "csv") -> Response:
        if format not in ("csv", "jsonl"):
            raise ValidationError("format", "must be csv or jsonl")
        session_ids = [s for s in ids.split(",") if s]
        if not session_ids:
            raise ValidationError("ids", "must list at least one session")
        with app.state.lock:
            for sid in session_ids:
                runtime._get(sid)
            text = runtime.store.export_trials(session_ids, format)
        media = "text/csv" if format == "csv" else "application/x-ndjson"
        return Response(content=text, media_type=media)

    @app.get("/cluster")
    def cluster() -> dict[str, Any]:
        with app.state.lock:
            return runtime.cluster_view()

    @app.post("/ticks")
    async def advance(request: Request) -> dict[str, Any]:
        body = await request.body()
        try:
            payload = json.loads(body) if body else {}
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno) from None
        n = payload.get("n", 1)
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 100000:
            raise ValidationError("n", "must be an integer in [1, 100000]")
        with app.state.lock:
            runtime.run(n)
        return {"tick": runtime.clock.tick}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> FileResponse:
            return FileResponse(str(Path(static_dir) / "index.html"))

    return app
