"""Parameter checkpoints.

Layout: 4-byte little-endian header length, UTF-8 JSON header, then the raw
little-endian float64 payload. The header lists every parameter's name, shape
and byte offset plus a SHA-256 of the payload.
"""
import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Dict

import numpy as np

from ..utils.errors import CorruptionError, FormatError, InvalidInputError
from ..utils.io import read_bytes, write_bytes
from .params import ParameterStore

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")


def save_checkpoint(store: ParameterStore, path: Path, extra: Dict = None) -> Path:
    if len(store) == 0:
        raise InvalidInputError("refusing to write a checkpoint of an empty parameter store")
    entries = []
    chunks = []
    offset = 0
    for name, tensor in store.items():
        payload = np.ascontiguousarray(tensor.data, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(tensor.shape), "byte_offset": offset})
        chunks.append(payload)
        offset += len(payload)
    body = b"".join(chunks)
    header = {
        "format_version": FORMAT_VERSION,
        "params": entries,
        "payload_bytes": len(body),
        "payload_sha256": hashlib.sha256(body).hexdigest(),
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    write_bytes(path, _LENGTH.pack(len(header_bytes)) + header_bytes + body)
    logger.info("saved %d parameters to %s", len(entries), path)
    return Path(path)


def read_checkpoint(path: Path) -> Dict[str, np.ndarray]:
    """Parse and verify a checkpoint file into name -> array"""
    raw = read_bytes(path)
    if len(raw) < _LENGTH.size:
        raise CorruptionError(f"{path}: truncated header")
    (header_len,) = _LENGTH.unpack_from(raw, 0)
    start = _LENGTH.size + header_len
    if start > len(raw):
        raise CorruptionError(f"{path}: truncated header")
    try:
        header = json.loads(raw[_LENGTH.size:start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptionError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict) or "format_version" not in header:
        raise CorruptionError(f"{path}: header without format_version")
    if header["format_version"] != FORMAT_VERSION:
        raise FormatError(f"{path}: format_version {header['format_version']}, expected {FORMAT_VERSION}")
    body = raw[start:]
    if len(body) != header.get("payload_bytes"):
        raise CorruptionError(f"{path}: payload has {len(body)} bytes, header says {header.get('payload_bytes')}")
    if hashlib.sha256(body).hexdigest() != header.get("payload_sha256"):
        raise CorruptionError(f"{path}: payload checksum mismatch")
    arrays = {}
    for entry in header["params"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        offset = int(entry["byte_offset"])
        if offset + 8 * count > len(body):
            raise CorruptionError(f"{path}: parameter '{entry['name']}' runs past the payload")
        arrays[entry["name"]] = np.frombuffer(body, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
    return arrays


def load_checkpoint(store: ParameterStore, path: Path) -> ParameterStore:
    """Load values into ``store``; nothing is written unless every check passes"""
    store.load_values(read_checkpoint(path))
    logger.info("loaded %d parameters from %s", len(store), path)
    return store


def checkpoint_io(store: ParameterStore, path: Path, direction: str) -> bool:
    if direction == "save":
        save_checkpoint(store, path)
    elif direction == "load":
        load_checkpoint(store, path)
    else:
        raise InvalidInputError(f"checkpoint direction must be 'save' or 'load', got '{direction}'")
    return True
