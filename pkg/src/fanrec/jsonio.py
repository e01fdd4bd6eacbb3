"""Canonical JSON / JSON Lines writing with fixed float formatting.

Floats are always printed with 17 significant digits so that every value
round-trips exactly and identical inputs give identical bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Iterator

HEADER_KEY = "_header"


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite float cannot be serialized: {x!r}")
    return format(x, ".17g")


def dumps(obj: Any) -> str:
    """Compact JSON with sorted keys and 17-significant-digit floats."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(json.dumps(str(k), ensure_ascii=False) + ":" + dumps(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    # numpy scalars
    if hasattr(obj, "item"):
        return dumps(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(path: str | Path, records: Iterable[Any], header: dict | None = None) -> int:
    """Write one record per line; an optional header object goes first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(dumps({HEADER_KEY: header}) + "\n")
        for rec in records:
            fh.write(dumps(rec) + "\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield records, skipping blank lines and the header line."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if isinstance(obj, dict) and HEADER_KEY in obj:
                continue
            yield obj


def read_jsonl_header(path: str | Path) -> dict | None:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if isinstance(obj, dict) and HEADER_KEY in obj:
                return obj[HEADER_KEY]
            return None
    return None
