"""Readers for the experiment dump formats.

All dumps are JSON: episode and planning dumps are line-delimited with a
one-line header carrying the schema name, version and environment geometry;
the summary is a single JSON document. Schema names and the version are
pinned here and validated on every read.
"""

from __future__ import annotations

import json
from pathlib import Path

EPISODE_SCHEMA = "steinmpc-episode"
PLANNING_SCHEMA = "steinmpc-planning"
SUMMARY_SCHEMA = "steinmpc-summary"
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """The dump is missing, empty, or carries an unexpected schema/version."""


def _check_schema(found: dict, expected: str, path) -> None:
    if found.get("schema") != expected or found.get("version") != SCHEMA_VERSION:
        raise SchemaError(
            f"schema mismatch in {path}: expected {expected} v{SCHEMA_VERSION}, "
            f"found {found.get('schema')} v{found.get('version')}"
        )


def _read_jsonl(path):
    try:
        with open(path) as fh:
            lines = [line for line in fh if line.strip()]
    except OSError as exc:
        raise SchemaError(f"cannot read dump {path}: {exc}") from None
    if not lines:
        raise SchemaError(f"empty dump: {path}")
    return [json.loads(line) for line in lines]


def read_episode_dump(path):
    """(header, records) from an episode dump."""
    rows = _read_jsonl(path)
    _check_schema(rows[0], EPISODE_SCHEMA, path)
    return rows[0], rows[1:]


def read_planning_dump(path):
    """(header, snapshot rows) from a planning dump."""
    rows = _read_jsonl(path)
    _check_schema(rows[0], PLANNING_SCHEMA, path)
    return rows[0], rows[1:]


def read_summary(path):
    """Summary payload with its rows list."""
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read dump {path}: {exc}") from None
    _check_schema(payload, SUMMARY_SCHEMA, path)
    return payload
