"""Binary PGM (P5) reading and writing for 8-bit grayscale images."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import GuardError

__all__ = ["PgmError", "parse_pgm", "read_pgm", "format_pgm", "write_pgm", "MAX_SIDE"]

MAX_SIDE = 256
_WS = b" \t\r\n\v\f"


class PgmError(ValueError):
    """Malformed PGM data; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _skip(data, pos):
    while pos < len(data):
        if data[pos] in _WS:
            pos += 1
        elif data[pos] == ord("#"):
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    return pos


def _int_token(data, pos, what):
    pos = _skip(data, pos)
    start = pos
    while pos < len(data) and 48 <= data[pos] <= 57:
        pos += 1
    if pos == start:
        raise PgmError(f"expected {what}", start)
    return int(data[start:pos]), pos


def parse_pgm(data: bytes, max_side=MAX_SIDE):
    """Return ``(image, maxval)`` with ``image`` a ``(height, width)`` uint8 array."""
    if data[:2] != b"P5":
        raise PgmError("missing P5 magic number", 0)
    pos = 2
    if pos >= len(data) or data[pos] not in _WS + b"#":
        raise PgmError("expected whitespace after magic number", pos)
    width, pos = _int_token(data, pos, "width")
    height, pos = _int_token(data, pos, "height")
    maxval, pos = _int_token(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError("image dimensions must be positive", pos)
    if not 1 <= maxval <= 255:
        raise PgmError(f"maxval {maxval} unsupported (need 1..255)", pos)
    if pos >= len(data) or data[pos] not in _WS:
        raise PgmError("expected single whitespace before raster", pos)
    pos += 1
    if width > max_side or height > max_side:
        raise GuardError(f"image {width}x{height} exceeds {max_side}x{max_side}; downsample it first")
    need = width * height
    if len(data) - pos < need:
        raise PgmError(f"raster truncated: need {need} bytes, have {len(data) - pos}", len(data))
    img = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(height, width)
    if img.max(initial=0) > maxval:
        bad = int(np.argmax(img.ravel() > maxval))
        raise PgmError(f"sample exceeds maxval {maxval}", pos + bad)
    return img.copy(), maxval


def read_pgm(path, max_side=MAX_SIDE):
    return parse_pgm(Path(path).read_bytes(), max_side)


def format_pgm(img, maxval=255) -> bytes:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    h, w = img.shape
    raster = np.clip(img, 0, maxval).astype(np.uint8)
    return f"P5\n{w} {h}\n{maxval}\n".encode() + raster.tobytes()


def write_pgm(path, img, maxval=255):
    Path(path).write_bytes(format_pgm(img, maxval))
