"""Structured warnings: JSON lines on stderr, one object per event."""

from __future__ import annotations

import json
import sys


def warn(event: str, **fields) -> None:
    """Emit one diagnostic record. Never raises."""
    record = {"event": event}
    record.update(fields)
    try:
        sys.stderr.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    except Exception:
        pass
