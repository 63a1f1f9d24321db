"""JSON Lines reading/writing with line-numbered errors."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

from figcap.errors import FormatError

Source = Union[str, os.PathLike, IO[str]]


def _open(source: Source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8"), str(source)
    return source, source_name(source)


def source_name(source: Source):
    if isinstance(source, (str, os.PathLike)):
        return str(source)
    return getattr(source, "name", None)


def iter_jsonl(source: Source) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for each non-blank line."""
    fh, name = _open(source)
    try:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed JSON ({exc.msg})", line=lineno, path=name) from None
            if not isinstance(obj, dict):
                raise FormatError("expected a JSON object", line=lineno, path=name)
            yield lineno, obj
    finally:
        if fh is not source:
            fh.close()


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def write_jsonl(rows: Iterable[dict], dest: Source) -> int:
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        with open(dest, "w", encoding="utf-8") as fh:
            return write_jsonl(rows, fh)
    count = 0
    for row in rows:
        dest.write(dumps(row) + "\n")
        count += 1
    return count


def read_captions(source: Source) -> dict[str, str]:
    """Read ``{"id", "caption"}`` rows (``chosen_text`` accepted for fused output).

    Preserves file order; duplicate ids are a format error.
    """
    out: dict[str, str] = {}
    name = source_name(source)
    for lineno, obj in iter_jsonl(source):
        rid = obj.get("id")
        if not isinstance(rid, str) or not rid:
            raise FormatError("missing or empty string field 'id'", line=lineno, path=name)
        text = obj.get("caption", obj.get("chosen_text"))
        if not isinstance(text, str):
            raise FormatError(f"record {rid!r} has no string 'caption'", line=lineno, path=name)
        if rid in out:
            raise FormatError(f"duplicate id {rid!r}", line=lineno, path=name)
        out[rid] = text
    return out
