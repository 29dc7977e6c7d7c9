"""Append-only JSON-lines log of authentication events.

The registry snapshot holds provisioned records; replaying the log over it
rebuilds the current high-water marks, failure counters and locks.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Iterator

from ..verifier import Reason, Registry, VerifierConfig

# rejects that count against the failure limit
_COUNTED = {Reason.BAD_STATIC.value, Reason.BAD_OTP.value, Reason.REPLAY.value, Reason.STALE.value}


class LogCorrupt(ValueError):
    def __init__(self, path: str | Path, offset: int, lineno: int, detail: str) -> None:
        super().__init__(f"{path}: corrupt event at byte offset {offset} (line {lineno}): {detail}")
        self.offset = offset
        self.lineno = lineno


@dataclass(frozen=True)
class AuthEvent:
    seq: int
    at: int
    customer: str
    kind: str = "auth"
    status: str | None = None
    reason: str | None = None
    recovered_A: int | None = None

    def to_line(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":")) + "\n"


class EventLog:
    """Totally ordered appender; ``seq`` continues from any existing file."""

    def __init__(self, path: str | Path | None = None, stream: IO[str] | None = None,
                 fsync: bool = False) -> None:
        self.path = Path(path) if path is not None else None
        self._stream = stream
        self._fsync = fsync
        self._lock = threading.Lock()
        self._seq = 0
        if self.path is not None and self.path.exists():
            for ev in iter_events(self.path):
                self._seq = ev.seq
        self.events: list[AuthEvent] = []

    @property
    def seq(self) -> int:
        return self._seq

    def append(self, at: int, customer: str, kind: str = "auth", status: str | None = None,
               reason: str | None = None, recovered_A: int | None = None) -> AuthEvent:
        with self._lock:
            self._seq += 1
            ev = AuthEvent(self._seq, at, customer, kind, status, reason, recovered_A)
            line = ev.to_line()
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    if self._fsync:
                        fh.flush()
                        os.fsync(fh.fileno())
            if self._stream is not None:
                self._stream.write(line)
            self.events.append(ev)
            return ev


def iter_events(path: str | Path) -> Iterator[AuthEvent]:
    """Yield events in order; a damaged line raises :class:`LogCorrupt`."""
    offset = 0
    last_seq = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            if not raw.endswith(b"\n"):
                raise LogCorrupt(path, offset, lineno, "truncated line")
            try:
                d = json.loads(raw)
                ev = AuthEvent(**d)
            except (ValueError, TypeError) as exc:
                raise LogCorrupt(path, offset, lineno, str(exc)) from None
            if ev.seq <= last_seq:
                raise LogCorrupt(path, offset, lineno, f"sequence {ev.seq} not increasing")
            last_seq = ev.seq
            yield ev
            offset += len(raw)


def apply_event(registry: Registry, ev: AuthEvent) -> None:
    if ev.customer not in registry.records:
        return
    rec = registry.records[ev.customer]
    if ev.kind == "reset":
        rec.reset()
    elif ev.status == "accept":
        rec.high_water = max(rec.high_water, ev.recovered_A)
        rec.failures = 0
    elif ev.reason in _COUNTED and registry.config.lockout:
        rec.record_failure()


def replay_log(snapshot: str | Path, log: str | Path | None,
               config: VerifierConfig | None = None) -> Registry:
    """Registry state after reapplying ``log`` to the provisioned ``snapshot``."""
    registry = Registry.load_snapshot(snapshot, config)
    if log is not None and Path(log).exists():
        for ev in iter_events(log):
            apply_event(registry, ev)
    return registry
