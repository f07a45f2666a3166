"""Multi-cloud searchable encrypted database."""

import json

from ._core import (
    AuthError,
    ParameterError,
    PmcdbError,
    ProtocolError,
    RevokedError,
    Server,
    Session,
    StoreIoError,
    audit_json,
    compact,
    init,
    stats,
)


def audit(data, *, kind="all", trials=100, key_file=None, seed=None):
    """Audit results as a list of dicts, one per audit."""
    text = audit_json(data, kind=kind, trials=trials, key_file=key_file, seed=seed)
    return [json.loads(line) for line in text.splitlines() if line]


__all__ = [
    "AuthError",
    "ParameterError",
    "PmcdbError",
    "ProtocolError",
    "RevokedError",
    "Server",
    "Session",
    "StoreIoError",
    "audit",
    "audit_json",
    "compact",
    "init",
    "stats",
]
