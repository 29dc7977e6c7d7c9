"""JSON-lines press/auth/forge scenarios replayed in simulated time.

The first line may be a header without ``t``::

    {"seed": 1, "max_delay": 480, "max_attempts": 3,
     "actors": [{"id": "alice", "key": "3132...", "phase": 0, "t0": 0, "a0": 0, "static": "pw"}]}

Every other line is an event, sorted by ``t`` (ties keep file order)::

    {"t": 0, "action": "press", "actor": "alice", "label": "p1"}
    {"t": "7:59+", "action": "auth", "actor": "alice", "otp_from": "p1"}
    {"t": 900, "action": "forge", "actor": "alice"}

``auth`` submits the OTP shown by the press named in ``otp_from`` (default:
the actor's latest), or an explicit ``otp``. ``forge`` submits a random
forgery drawn from the scenario seed.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .attack import forge
from .authd.eventlog import EventLog
from .authd.service import AuthService
from .timebase import SyncModel, parse_instant
from .token import Otp, TokenState, new_token
from .verifier import Registry, VerifierConfig

ACTIONS = ("press", "auth", "forge")


class ScenarioError(ValueError):
    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Event:
    t: int
    action: str
    actor: str
    fields: dict[str, Any]
    lineno: int


@dataclass
class Scenario:
    seed: int = 0
    actors: list[dict[str, Any]] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    max_delay: int | None = 480
    max_attempts: int = 3


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    last_t = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            d = json.loads(line)
        except ValueError as exc:
            raise ScenarioError(lineno, f"invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ScenarioError(lineno, "expected a JSON object")
        if "t" not in d:
            if sc.events:
                raise ScenarioError(lineno, "header must precede events")
            sc.seed = int(d.get("seed", sc.seed))
            sc.max_delay = d.get("max_delay", sc.max_delay)
            sc.max_attempts = int(d.get("max_attempts", sc.max_attempts))
            sc.actors.extend(d.get("actors", []))
            continue
        action, actor = d.get("action"), d.get("actor")
        if action not in ACTIONS:
            raise ScenarioError(lineno, f"action must be one of {ACTIONS}")
        if not isinstance(actor, str):
            raise ScenarioError(lineno, "missing actor")
        try:
            t = parse_instant(d["t"])
        except (TypeError, ValueError) as exc:
            raise ScenarioError(lineno, str(exc)) from None
        if last_t is not None and t < last_t:
            raise ScenarioError(lineno, f"events not sorted by t ({t} < {last_t})")
        last_t = t
        rest = {k: v for k, v in d.items() if k not in ("t", "action", "actor")}
        sc.events.append(Event(t, action, actor, rest, lineno))
    return sc


@dataclass
class AuthRow:
    t: int
    actor: str
    action: str
    otp: str
    delay: int | None
    status: str
    reason: str


@dataclass
class ReplayResult:
    rows: list[AuthRow]
    presses: list[tuple[int, str, str, str]]
    log_text: str
    registry: Registry

    def summary(self) -> dict[str, Any]:
        return {
            "presses": len(self.presses),
            "auth_events": len(self.rows),
            "accepted": sum(r.status == "accept" for r in self.rows),
            "rejected": sum(r.status == "reject" for r in self.rows),
        }

    def table(self) -> str:
        lines = [f"{'t':>8}  {'actor':<10} {'action':<6} {'otp':<6}  {'delay':>6}  status  reason"]
        for r in self.rows:
            delay = "" if r.delay is None else str(r.delay)
            lines.append(f"{r.t:>8}  {r.actor:<10} {r.action:<6} {r.otp:<6}  {delay:>6}  "
                         f"{r.status:<6}  {r.reason}")
        return "\n".join(lines) + "\n"


def run_scenario(sc: Scenario, max_delay: int | None = None,
                 max_attempts: int | None = None) -> ReplayResult:
    """Execute events against in-process tokens and a verifier."""
    delay = sc.max_delay if max_delay is None else max_delay
    attempts = sc.max_attempts if max_attempts is None else max_attempts
    registry = Registry(config=VerifierConfig(max_delay=delay))
    tokens: dict[str, TokenState] = {}
    statics: dict[str, str] = {}
    for a in sc.actors:
        key = bytes.fromhex(a["key"])
        t0, a0 = int(a.get("t0", 0)), int(a.get("a0", 0))
        tokens[a["id"]] = new_token(key, SyncModel(int(a.get("phase", 0))), t0, a0)
        statics[a["id"]] = a.get("static", "")
        registry.provision(a["id"], key, t0, a0, statics[a["id"]], int(a.get("max_attempts", attempts)))
    rng = np.random.default_rng(sc.seed)
    buf = io.StringIO()
    service = AuthService(registry, EventLog(stream=buf), "simulated")
    shown: dict[str, dict[str, tuple[int, Otp]]] = {}
    latest: dict[str, tuple[int, Otp]] = {}
    rows: list[AuthRow] = []
    presses = []
    for ev in sc.events:
        token = tokens.get(ev.actor)
        if ev.action == "press":
            if token is None:
                raise ScenarioError(ev.lineno, f"unknown actor {ev.actor!r}")
            otp, kind = token.press(ev.t)
            gen_t = token.last_gen
            latest[ev.actor] = (gen_t, otp)
            if "label" in ev.fields:
                shown.setdefault(ev.actor, {})[ev.fields["label"]] = (gen_t, otp)
            presses.append((ev.t, ev.actor, str(otp), kind.value))
            continue
        gen_t: int | None = None
        if ev.action == "forge":
            otp_text = str(forge(rng, ev.fields.get("lead")))
        elif "otp" in ev.fields:
            otp_text = str(ev.fields["otp"])
        else:
            ref = ev.fields.get("otp_from")
            src = shown.get(ev.actor, {}).get(ref) if ref is not None else latest.get(ev.actor)
            if src is None:
                raise ScenarioError(ev.lineno, f"no displayed OTP for {ev.actor!r} ({ref})")
            gen_t, otp = src
            otp_text = str(otp)
        frame = {"type": "auth", "customer": ev.actor, "otp": otp_text, "at": ev.t,
                 "static": ev.fields.get("static", statics.get(ev.actor, ""))}
        reply = service.handle(frame)
        rows.append(AuthRow(ev.t, ev.actor, ev.action, otp_text,
                            None if gen_t is None else ev.t - gen_t, reply["status"], reply["reason"]))
    return ReplayResult(rows, presses, buf.getvalue(), registry)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def delay_scenario(key_hex: str = "3132333435363738393031323334353637383930",
                    delays: tuple[str, ...] = ("12:40+", "10:00+", "9:11+", "8:00+",
                                               "7:59+", "7:04+", "6:02+", "5:06+")) -> str:
    """Delay experiment: each OTP generated on a 64 s boundary, submitted late."""
    lines = [json.dumps({"seed": 0, "max_attempts": 10, "actors": [
        {"id": "tester", "key": key_hex, "phase": 0, "t0": 0, "a0": 0, "static": "pw"}]})]
    events = []
    for i, d in enumerate(delays, 1):
        start = 2048 * i
        events.append((start, {"t": start, "action": "press", "actor": "tester", "label": f"d{i}"}))
        events.append((start + parse_instant(d), {"t": start + parse_instant(d), "action": "auth",
                                                  "actor": "tester", "otp_from": f"d{i}", "delay": d}))
    events.sort(key=lambda e: e[0])
    lines += [json.dumps(e) for _, e in events]
    return "\n".join(lines) + "\n"
