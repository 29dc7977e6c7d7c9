"""Newline-delimited JSON authentication service.

Requests and responses are single-line JSON objects terminated by ``\\n``::

    {"type":"auth","customer":"alice","static":"pw","otp":"240445","at":0}
    {"type":"result","status":"accept","reason":"ok"}

Unknown fields are ignored. A line that is not a valid request gets an
``{"type":"error",...}`` reply and the connection stays open.
"""

from __future__ import annotations

import asyncio
import json
import logging
import sys
import time
from dataclasses import dataclass
from typing import Any

from ..verifier import Registry, VerifyOutcome
from .eventlog import EventLog

log = logging.getLogger(__name__)

CLOCK_MODES = ("simulated", "live")


class FrameError(ValueError):
    pass


def encode(obj: dict[str, Any]) -> bytes:
    return (json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


@dataclass(frozen=True)
class AuthRequest:
    customer_id: str
    static_credential: str
    otp: Any
    at: int | None

    @classmethod
    def from_frame(cls, d: dict[str, Any], clock_mode: str) -> "AuthRequest":
        customer, static = d.get("customer"), d.get("static", "")
        if not isinstance(customer, str) or not customer:
            raise FrameError("missing customer")
        if not isinstance(static, str):
            raise FrameError("static must be a string")
        at = d.get("at")
        if clock_mode == "simulated":
            if isinstance(at, bool) or not isinstance(at, int) or at < 0:
                raise FrameError("simulated clock needs a non-negative integer 'at'")
        return cls(customer, static, d.get("otp"), at)


def parse_frame(line: bytes | str) -> dict[str, Any]:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError:
            raise FrameError("frame is not UTF-8") from None
    try:
        d = json.loads(line)
    except ValueError:
        raise FrameError("frame is not JSON") from None
    if not isinstance(d, dict):
        raise FrameError("frame must be a JSON object")
    return d


class AuthService:
    def __init__(self, registry: Registry, events: EventLog | None = None,
                 clock_mode: str = "simulated") -> None:
        if clock_mode not in CLOCK_MODES:
            raise ValueError(f"clock_mode must be one of {CLOCK_MODES}")
        self.registry = registry
        self.events = events or EventLog()
        self.clock_mode = clock_mode

    def now(self, asserted: int | None) -> int:
        if self.clock_mode == "live":
            return int(time.time())
        if asserted is None:
            raise FrameError("simulated clock needs 'at'")
        return asserted

    def handle(self, frame: dict[str, Any]) -> dict[str, Any]:
        kind = frame.get("type")
        if kind == "auth":
            req = AuthRequest.from_frame(frame, self.clock_mode)
            return self.auth(req)
        if kind == "reset":
            customer = frame.get("customer")
            if not isinstance(customer, str) or customer not in self.registry.records:
                return {"type": "result", "status": "reject", "reason": "unknown-customer"}
            at = self.now(frame.get("at") if isinstance(frame.get("at"), int) else 0)
            with self.registry.locked(customer) as rec:
                rec.reset()
                self.events.append(at, customer, "reset")
            return {"type": "result", "status": "ok", "reason": "reset"}
        if kind == "ping":
            return {"type": "pong"}
        raise FrameError(f"unknown request type {kind!r}")

    def auth(self, req: AuthRequest) -> dict[str, Any]:
        at = self.now(req.at)
        otp = req.otp if isinstance(req.otp, str) else ""

        def record(outcome: VerifyOutcome) -> None:
            self.events.append(at, req.customer_id, "auth", outcome.status, outcome.reason.value,
                               outcome.recovered_a if outcome.accepted else None)

        outcome = self.registry.authenticate(req.customer_id, req.static_credential, otp, at,
                                             on_outcome=record)
        return {"type": "result", "status": outcome.status, "reason": outcome.reason.value}

    def handle_line(self, line: bytes | str) -> bytes:
        try:
            return encode(self.handle(parse_frame(line)))
        except FrameError as exc:
            return encode({"type": "error", "reason": "malformed-frame", "detail": str(exc)})



async def _serve_connection(service: AuthService, reader: asyncio.StreamReader,
                            writer: asyncio.StreamWriter) -> None:
    peer = writer.get_extra_info("peername")
    log.debug("connection from %s", peer)
    try:
        while True:
            try:
                line = await reader.readuntil(b"\n")
            except asyncio.IncompleteReadError as exc:
                if exc.partial.strip():
                    writer.write(service.handle_line(exc.partial))
                    await writer.drain()
                break
            except asyncio.LimitOverrunError as exc:
                await reader.read(exc.consumed)  # discard the oversized frame
                writer.write(encode({"type": "error", "reason": "malformed-frame",
                                     "detail": "frame too long"}))
                await writer.drain()
                continue
            if not line.strip():
                continue
            writer.write(service.handle_line(line))
            await writer.drain()
    except ConnectionError:
        pass
    finally:
        writer.close()


async def start_server(service: AuthService, listen: str) -> asyncio.AbstractServer:
    """Listen on ``host:port`` or ``unix:/path``."""
    handler = lambda r, w: _serve_connection(service, r, w)  # noqa: E731
    if listen.startswith("unix:"):
        return await asyncio.start_unix_server(handler, path=listen[5:])
    host, _, port = listen.rpartition(":")
    return await asyncio.start_server(handler, host or "127.0.0.1", int(port))


def serve_stdio(service: AuthService, stdin=None, stdout=None) -> None:
    """Serve one request per input line until EOF."""
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(service.handle_line(line))
        stdout.flush()


def serve(service: AuthService, listen: str = "stdio") -> None:
    """Run until shutdown (EOF on stdio, or interrupt for sockets)."""
    if listen == "stdio":
        serve_stdio(service)
        return

    async def main() -> None:
        server = await start_server(service, listen)
        addrs = ", ".join(str(s.getsockname()) for s in server.sockets)
        log.info("authd listening on %s (%s clock)", addrs, service.clock_mode)
        async with server:
            await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass


def request(listen: str, frame: dict[str, Any], timeout: float = 5.0) -> dict[str, Any]:
    """Send one frame to a running service and return the decoded reply."""
    import socket

    if listen.startswith("unix:"):
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.settimeout(timeout)
        sock.connect(listen[5:])
    else:
        host, _, port = listen.rpartition(":")
        sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout=timeout)
    with sock, sock.makefile("rwb") as fh:
        fh.write(encode(frame))
        fh.flush()
        reply = fh.readline()
    return json.loads(reply)
