"""HTTP/websocket surface of the session service.

Endpoints:
    POST /sessions                     create a session, streaming starts at once
    GET  /sessions/{id}                status
    GET  /sessions/{id}/metrics        metric suite (409 while running)
    GET  /sessions/{id}/log            stored event log as JSONL
    POST /sessions/{id}/interrupt      user interrupt -> accepted | stale
    POST /sessions/{id}/advance        resume a paused session past its window
    WS   /sessions/{id}/events         event stream; frames are the event-log
                                       schema plus {"seq": int}; resume with
                                       ?from_seq=<last seen seq>
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response, WebSocket, WebSocketDisconnect

from specplan.engine.presentation import InterruptOutcome
from specplan.service.schemas import (
    AdvanceResponse,
    CreateSessionRequest,
    InterruptAck,
    InterruptRequest,
    MetricsResponse,
    SessionCreated,
    SessionStatusResponse,
)
from specplan.service.sessions import BackendFactory, Session, SessionManager, SessionStatus

END_OF_STREAM = "end_of_stream"


def create_app(
    *,
    persist_dir: str | Path | None = None,
    backend_factory: BackendFactory | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="specplan session service")
    manager = SessionManager(persist_dir=persist_dir, backend_factory=backend_factory)
    app.state.manager = manager
    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def _session_or_404(session_id: str) -> Session:
        session = manager.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/health")
    async def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/sessions", response_model=SessionCreated, status_code=201)
    async def create_session(request: CreateSessionRequest) -> SessionCreated:
        session = manager.create(request)
        return SessionCreated(id=session.id, status=session.status.value)

    @app.get("/sessions/{session_id}", response_model=SessionStatusResponse)
    async def session_status(session_id: str) -> SessionStatusResponse:
        session = _session_or_404(session_id)
        return SessionStatusResponse(
            id=session.id,
            status=session.status.value,
            seq=len(session.events),
            overflowed=session.overflowed,
        )

    @app.get("/sessions/{session_id}/metrics", response_model=MetricsResponse)
    async def session_metrics(session_id: str) -> MetricsResponse:
        session = _session_or_404(session_id)
        if not session.finished:
            raise HTTPException(status_code=409, detail=f"session is {session.status.value}")
        return MetricsResponse(
            id=session.id,
            status=session.status.value,
            partial=session.status is SessionStatus.FAILED,
            metrics=session.metrics().to_dict(),
        )

    @app.get("/sessions/{session_id}/log")
    async def session_log(session_id: str) -> Response:
        session = _session_or_404(session_id)
        return Response(content=session.event_log().to_jsonl(), media_type="application/x-ndjson")

    @app.post("/sessions/{session_id}/interrupt", response_model=InterruptAck)
    async def post_interrupt(session_id: str, request: InterruptRequest) -> InterruptAck:
        session = _session_or_404(session_id)
        outcome = await session.interrupt(request.index, request.content)
        return InterruptAck(status="accepted" if outcome is InterruptOutcome.ACCEPTED else "stale")

    @app.post("/sessions/{session_id}/advance", response_model=AdvanceResponse)
    async def post_advance(session_id: str) -> AdvanceResponse:
        session = _session_or_404(session_id)
        return AdvanceResponse(resumed=await session.advance())

    @app.websocket("/sessions/{session_id}/events")
    async def stream_events(
        websocket: WebSocket, session_id: str, from_seq: int = Query(default=0, ge=0)
    ) -> None:
        session = manager.get(session_id)
        if session is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        cursor = from_seq
        try:
            while True:
                marker = session.change_marker()
                while cursor < len(session.events):
                    frame = {"seq": cursor + 1, **session.events[cursor].payload()}
                    await websocket.send_text(json.dumps(frame, separators=(",", ":")))
                    cursor += 1
                if session.finished and cursor >= len(session.events):
                    frame = {"seq": cursor + 1, "type": END_OF_STREAM}
                    await websocket.send_text(json.dumps(frame, separators=(",", ":")))
                    break
                await marker.wait()
        except WebSocketDisconnect:
            return
        await websocket.close()

    return app


app = create_app()
