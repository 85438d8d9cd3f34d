"""Runtime configuration: one JSON file plus METASECURE_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional


@dataclass
class AppConfig:
    rp_id: str = "meta.example"
    host: str = "127.0.0.1"
    port: int = 8700
    admin_token: str = "metasecure-admin"
    challenge_ttl_ms: int = 120_000
    session_ttl_ms: int = 300_000
    token_ttl_ms: int = 3_600_000
    state_file: Optional[str] = None
    audit_log: Optional[str] = None
    # Device persistence is opt-in; without both values devices stay in memory.
    vault_file: Optional[str] = None
    vault_secret: Optional[str] = None
    face_file: Optional[str] = None


_INT_FIELDS = {"port", "challenge_ttl_ms", "session_ttl_ms", "token_ttl_ms"}


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    """Defaults, overridden by the config file, overridden by environment."""
    values: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(AppConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for f in fields(AppConfig):
        env = os.environ.get(f"METASECURE_{f.name.upper()}")
        if env is not None:
            values[f.name] = int(env) if f.name in _INT_FIELDS else env
    return AppConfig(**values)
