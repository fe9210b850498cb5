"""Blocking thin client for the newline-delimited frame protocol."""
from __future__ import annotations

import json
import socket
import uuid
from typing import Callable, Optional


class GatewayClient:
    def __init__(self, host: str, port: int, timeout_s: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout_s)
        self._buf = b""

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_line(self) -> dict:
        while b"\n" not in self._buf:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionError("gateway closed the connection")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return json.loads(line.decode("utf-8"))

    def request(self, kind: str, payload: Optional[dict] = None) -> dict:
        """Send one request frame and return its matching Ack/Err."""
        cid = uuid.uuid4().hex[:12]
        frame = {"id": cid, "kind": kind, "payload": payload or {}}
        self._sock.sendall((json.dumps(frame) + "\n").encode())
        while True:
            doc = self._read_line()
            if doc.get("id") == cid and doc.get("kind") in ("Ack", "Err"):
                return doc

    def stream(self, on_frame: Callable[[dict], bool]) -> None:
        """Deliver incoming frames until the callback returns False."""
        while True:
            if not on_frame(self._read_line()):
                return
