import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Iterator, List

from .errors import ArtifactIOError

logger = logging.getLogger(__name__)


def fmt_float(value: float) -> str:
    """17 significant digits, always parsed back as a float"""
    text = format(float(value), ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=False, separators=(",", ":"), ensure_ascii=False)


def write_text(path: Path, text: str) -> Path:
    """Write a text artifact atomically (temp file + rename)"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        raise ArtifactIOError(f"failed writing {path}: {e}") from e
    logger.debug("wrote %s", path)
    return path


def write_bytes(path: Path, payload: bytes) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except OSError as e:
        raise ArtifactIOError(f"failed writing {path}: {e}") from e
    return path


def read_text(path: Path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise ArtifactIOError(f"failed reading {path}: {e}") from e


def read_bytes(path: Path) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise ArtifactIOError(f"failed reading {path}: {e}") from e


def write_json(path: Path, data: Any) -> Path:
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> Any:
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ArtifactIOError(f"{path} is not valid JSON: {e}") from e


def write_jsonl(path: Path, rows: Iterable[Any]) -> Path:
    lines = [canonical_json(row) for row in rows]
    return write_text(path, "".join(line + "\n" for line in lines))


def read_jsonl(path: Path) -> List[Any]:
    return list(iter_jsonl(path))


def iter_jsonl(path: Path) -> Iterator[Any]:
    for number, line in enumerate(read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as e:
            raise ArtifactIOError(f"{path}:{number}: invalid JSON line: {e}") from e


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(read_bytes(path))
    return digest.hexdigest()
