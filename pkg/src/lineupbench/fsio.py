"""Atomic file writes: temp file in the destination directory, then
os.replace, so readers never observe partial artifacts and failed stages
leave nothing behind."""

from __future__ import annotations

import os
import tempfile

from .errors import DataIOError


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                                   suffix=os.path.basename(path))
    except OSError as e:
        raise DataIOError(f"cannot create temp file next to {path}: {e}") from e
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise DataIOError(f"cannot write {path}: {e}") from e


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
