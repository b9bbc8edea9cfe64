"""
Output Helpers
Write-then-rename file output shared by the CLI and the experiment runner
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

PathLike = Union[str, Path]


def dumps_json(payload: Any) -> str:
    # sorted keys keep repeated runs byte-identical
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to a sibling temp file and rename it over the target

    Args:
        path: Destination file
        text: Full file contents

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def write_json(path: PathLike, payload: Any) -> Path:
    return atomic_write_text(path, dumps_json(payload))


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
