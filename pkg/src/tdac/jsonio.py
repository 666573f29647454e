"""Canonical JSON emission and atomic file writes.

All model files are emitted through canonical_dumps so that structurally
equal models serialize to byte-identical documents.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import ModelSyntaxError


def canonical_dumps(payload) -> bytes:
    """Serialize with a fixed layout; callers build dicts in canonical key order."""
    return (json.dumps(payload, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def loads_document(document: bytes | str):
    """Decode and parse a JSON document, mapping failures to ModelSyntaxError."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelSyntaxError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from exc


def atomic_write(path: Path | str, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
