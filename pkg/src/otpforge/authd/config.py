"""Flat ``key=value`` configuration for the service and CLI."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

ENV_VAR = "OTPFORGE_CONFIG"


@dataclass(frozen=True)
class Settings:
    max_delay: int = 480
    max_attempts: int = 3
    listen: str = "127.0.0.1:7463"
    log: str = "authd-events.jsonl"
    snapshot: str = "registry.jsonl"
    clock: str = "simulated"

    def merged(self, **overrides: object) -> "Settings":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def parse_config(text: str, base: Settings = Settings()) -> Settings:
    types = {f.name: f.type for f in fields(Settings)}
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in types:
            raise ValueError(f"config line {lineno}: unknown or malformed entry {raw!r}")
        try:
            values[key] = int(value) if types[key] in (int, "int") else value
        except ValueError:
            raise ValueError(f"config line {lineno}: {key} must be an integer") from None
    return replace(base, **values)


def load_settings(path: str | Path | None = None) -> Settings:
    """Settings from ``path``, else from ``$OTPFORGE_CONFIG``, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return Settings()
    return parse_config(Path(path).read_text())
