"""HTTP/WebSocket surface over the session service."""

from __future__ import annotations

import asyncio
import contextlib
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .. import WIRE_FORMAT_VERSION, __version__
from .service import SessionService


def create_app(
    scene_dir: Path | None = None,
    tick_hz: float = 50.0,
    snapshot_hz: float = 20.0,
    seed: int = 0,
) -> FastAPI:
    service = SessionService(
        scene_dir=scene_dir, tick_hz=tick_hz, snapshot_hz=snapshot_hz, seed=seed
    )

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(service.run())
        try:
            yield
        finally:
            service.stop()
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="navvi gateway", version=__version__, lifespan=lifespan)
    app.state.service = service

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "version": __version__, "wire": WIRE_FORMAT_VERSION}

    @app.get("/scenes")
    async def scenes() -> dict:
        return {"scenes": service.list_scenes()}

    @app.websocket("/ws")
    async def ws(websocket: WebSocket) -> None:
        await websocket.accept()
        client = await service.connect(websocket.send_text)
        try:
            while True:
                text = await websocket.receive_text()
                await service.handle_text(client, text)
        except WebSocketDisconnect:
            pass
        finally:
            await service.disconnect(client)

    return app
