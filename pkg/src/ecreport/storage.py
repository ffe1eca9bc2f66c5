"""File formats: transcript JSON, trace and judgment JSON Lines, atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable

from ecreport.model import ConversationTrace, EcReportError, Transcript, validate_transcript


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_jsonl(records: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=False) + "\n" for r in records)


def write_jsonl(path: str | os.PathLike, records: Iterable[dict[str, Any]]) -> None:
    atomic_write_text(path, dumps_jsonl(records))


def read_jsonl(path: str | os.PathLike) -> list[dict[str, Any]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise EcReportError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
    return out


def load_transcript(path: str | os.PathLike) -> Transcript:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EcReportError(f"{path}: invalid JSON ({exc.msg})") from exc
    try:
        transcript = Transcript.from_dict(raw)
    except (KeyError, ValueError, TypeError) as exc:
        raise EcReportError(f"{path}: malformed transcript ({exc!r})") from exc
    return validate_transcript(transcript)


def save_transcript(path: str | os.PathLike, transcript: Transcript) -> None:
    atomic_write_text(path, json.dumps(transcript.to_dict(), indent=2, ensure_ascii=False) + "\n")


def save_trace(path: str | os.PathLike, trace: ConversationTrace) -> None:
    write_jsonl(path, trace.to_records())


def load_trace(path: str | os.PathLike) -> ConversationTrace:
    return ConversationTrace.from_records(read_jsonl(path))
