from .config import Settings, load_settings, parse_config
from .eventlog import AuthEvent, EventLog, LogCorrupt, apply_event, iter_events, replay_log
from .service import AuthRequest, AuthService, FrameError, encode, request, serve, start_server

__all__ = [
    "AuthEvent", "AuthRequest", "AuthService", "EventLog", "FrameError", "LogCorrupt", "Settings",
    "apply_event", "encode", "iter_events", "load_settings", "parse_config", "replay_log",
    "request", "serve", "start_server",
]
