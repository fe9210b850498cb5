"""Service front-ends: TCP newline-delimited frames, plus the identical frame
protocol over a WebSocket for browser clients, with a small HTTP surface.

One event loop owns the session: connection handlers and the tick task never
run concurrently with each other, so the session needs no locking.
"""
from __future__ import annotations

import asyncio
import logging
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .frames import MAX_FRAME_BYTES, serialize_frame
from .session import Session

log = logging.getLogger(__name__)


class Broadcaster:
    def __init__(self):
        self._queues: set[asyncio.Queue] = set()

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=256)
        self._queues.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        self._queues.discard(q)

    def publish(self, line: str) -> None:
        for q in list(self._queues):
            try:
                q.put_nowait(line)
            except asyncio.QueueFull:
                # Slow consumer: drop oldest snapshot rather than stall the loop.
                try:
                    q.get_nowait()
                except asyncio.QueueEmpty:
                    pass
                q.put_nowait(line)


class GatewayServer:
    def __init__(self, session: Session, tick_s: Optional[float] = None,
                 realtime: bool = True):
        self.session = session
        self.tick_s = tick_s if tick_s is not None else session.sim_config.sensor_period_s
        self.realtime = realtime
        self.broadcaster = Broadcaster()
        self._tcp: Optional[asyncio.AbstractServer] = None

    def tick_once(self) -> None:
        snapshot = self.session.tick()
        self.broadcaster.publish(serialize_frame(snapshot))

    async def tick_loop(self) -> None:
        while True:
            self.tick_once()
            if self.realtime:
                await asyncio.sleep(self.tick_s)
            else:
                await asyncio.sleep(0)

    async def start_tcp(self, host: str, port: int) -> int:
        self._tcp = await asyncio.start_server(self._handle_tcp, host, port)
        return self._tcp.sockets[0].getsockname()[1]

    async def stop_tcp(self) -> None:
        if self._tcp is not None:
            self._tcp.close()
            await self._tcp.wait_closed()

    async def _handle_tcp(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        queue: Optional[asyncio.Queue] = None
        forward: Optional[asyncio.Task] = None

        async def forward_snapshots(q: asyncio.Queue):
            while True:
                line = await q.get()
                writer.write(line.encode() + b"\n")
                await writer.drain()

        try:
            while True:
                try:
                    raw = await reader.readline()
                except (ConnectionResetError, asyncio.LimitOverrunError):
                    break
                if not raw:
                    break
                line = raw.decode("utf-8", errors="replace").rstrip("\r\n")
                if not line.strip():
                    continue
                responses = self.session.handle_line(line)
                # Subscription state rides on the connection, keyed off the ack.
                if '"Subscribe"' in line:
                    import json
                    try:
                        doc = json.loads(line)
                        if doc.get("kind") == "Subscribe":
                            on = doc.get("payload", {}).get("on", True)
                            if on and queue is None:
                                queue = self.broadcaster.subscribe()
                                forward = asyncio.ensure_future(forward_snapshots(queue))
                            elif not on and queue is not None:
                                self.broadcaster.unsubscribe(queue)
                                if forward:
                                    forward.cancel()
                                queue, forward = None, None
                    except Exception:
                        pass
                for resp in responses:
                    writer.write(resp.encode() + b"\n")
                await writer.drain()
        finally:
            if queue is not None:
                self.broadcaster.unsubscribe(queue)
            if forward is not None:
                forward.cancel()
            writer.close()
            try:
                await writer.wait_closed()
            except Exception:
                pass


def create_app(server: GatewayServer) -> FastAPI:
    app = FastAPI(title="lifttiles gateway")
    session = server.session

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True, "t_s": session.state.t_s, "seq": session.seq}

    @app.get("/state")
    def get_state():
        return session._snapshot_payload()

    @app.post("/frames")
    def post_frame(frame: dict):
        import json
        return [json.loads(r) for r in session.handle_line(json.dumps(frame))]

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        queue: Optional[asyncio.Queue] = None
        forward: Optional[asyncio.Task] = None

        async def forward_snapshots(q: asyncio.Queue):
            while True:
                await ws.send_text(await q.get())

        try:
            while True:
                line = await ws.receive_text()
                responses = session.handle_line(line)
                import json
                try:
                    doc = json.loads(line)
                except Exception:
                    doc = {}
                if isinstance(doc, dict) and doc.get("kind") == "Subscribe":
                    on = doc.get("payload", {}).get("on", True)
                    if on and queue is None:
                        queue = server.broadcaster.subscribe()
                        forward = asyncio.ensure_future(forward_snapshots(queue))
                    elif not on and queue is not None:
                        server.broadcaster.unsubscribe(queue)
                        if forward:
                            forward.cancel()
                        queue, forward = None, None
                for resp in responses:
                    await ws.send_text(resp)
        except WebSocketDisconnect:
            pass
        finally:
            if queue is not None:
                server.broadcaster.unsubscribe(queue)
            if forward is not None:
                forward.cancel()

    return app


async def serve(server: GatewayServer, host: str, port: int,
                http_host: Optional[str] = None, http_port: Optional[int] = None) -> None:
    """Run TCP front-end, optional HTTP/WS front-end, and the sim tick loop."""
    await server.start_tcp(host, port)
    log.info("frame protocol listening on %s:%d", host, port)
    tasks = [asyncio.ensure_future(server.tick_loop())]
    if http_port is not None:
        import uvicorn
        config = uvicorn.Config(create_app(server), host=http_host or host,
                                port=http_port, log_level="warning")
        tasks.append(asyncio.ensure_future(uvicorn.Server(config).serve()))
        log.info("http/ws listening on %s:%d", http_host or host, http_port)
    try:
        await asyncio.gather(*tasks)
    finally:
        for t in tasks:
            t.cancel()
        await server.stop_tcp()
