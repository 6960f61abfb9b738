"""Atomic file writes shared by the CLI and the CSV reporters."""

import json
import os
import tempfile


def atomic_write_text(path, text: str) -> str:
    """Write via a temp file in the target directory, then rename over."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_json(path, data, indent=1) -> str:
    return atomic_write_text(path, json.dumps(data, indent=indent) + "\n")
