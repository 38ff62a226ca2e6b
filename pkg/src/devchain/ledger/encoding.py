"""Canonical document encoding and digests.

Documents are JSON values restricted to maps with string keys, arrays,
strings, integers, booleans and null. Floats are refused: amounts are integer
cents and metrics scaled integers, so replay never depends on float printing.
"""

import hashlib
import json
import re

from devchain.errors import UnsupportedValue

DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)

_HEX_RE = re.compile(r"^[0-9a-f]*$")


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _check(value, path="$"):
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        raise UnsupportedValue(f"Float at {path} - store scaled integers instead")
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise UnsupportedValue(f"Non-string key {key!r} at {path}")
            _check(item, f"{path}.{key}")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    raise UnsupportedValue(f"Unsupported value of type {type(value).__name__} at {path}")


def canonical_encode(doc) -> bytes:
    _check(doc)
    text = json.dumps(
        doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )
    try:
        return text.encode("utf-8")
    except UnicodeEncodeError as e:
        raise UnsupportedValue(f"Text is not valid UTF-8: {e.reason}")


def _reject_float(text):
    raise UnsupportedValue(f"Float {text} in canonical document")


def _reject_constant(text):
    raise UnsupportedValue(f"Constant {text} in canonical document")


def canonical_decode(data: bytes):
    try:
        return json.loads(
            data.decode("utf-8"),
            parse_float=_reject_float,
            parse_constant=_reject_constant,
        )
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise UnsupportedValue(f"Not a canonical document: {e}")


def is_canonical(data: bytes) -> bool:
    try:
        return canonical_encode(canonical_decode(data)) == data
    except UnsupportedValue:
        return False


def to_hex(value: bytes) -> str:
    return value.hex()


def from_hex(text, size=None, what="value") -> bytes:
    """Strict lowercase hex; upper-case or odd-length input is not an alias."""
    if not isinstance(text, str) or not _HEX_RE.match(text) or len(text) % 2:
        raise UnsupportedValue(f"{what} is not lowercase hex: {text!r}")
    raw = bytes.fromhex(text)
    if size is not None and len(raw) != size:
        raise UnsupportedValue(f"{what} must be {size} bytes, got {len(raw)}")
    return raw
