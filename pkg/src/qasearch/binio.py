"""Low-level helpers for the package's binary artifact formats.

All three persisted artifacts (sparse index, encoder model, embedding
store) use little-endian fixed-width headers plus LEB128 varints for
counts and postings. A Reader wraps the whole file in memory; artifacts
are desk-scale so streaming is not worth the complexity.
"""

from __future__ import annotations

import struct

from .errors import FormatError

FORMAT_VERSION = 1


def write_varint(buf: bytearray, value: int) -> None:
    """Append an unsigned LEB128 varint."""
    if value < 0:
        raise ValueError(f"varint requires a non-negative value, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def write_u32(buf: bytearray, value: int) -> None:
    buf.extend(struct.pack("<I", value))


def write_u64(buf: bytearray, value: int) -> None:
    buf.extend(struct.pack("<Q", value))


def write_f64(buf: bytearray, value: float) -> None:
    buf.extend(struct.pack("<d", value))


class Reader:
    """Cursor over an artifact's bytes with truncation-checked reads."""

    def __init__(self, data: bytes, name: str = "artifact"):
        self.data = data
        self.pos = 0
        self.name = name

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.name}: truncated file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        got = self._take(len(magic))
        if got != magic:
            raise FormatError(
                f"{self.name}: bad magic {got!r}, expected {magic!r}"
            )

    def read_varint(self) -> int:
        value = 0
        shift = 0
        while True:
            if self.pos >= len(self.data):
                raise FormatError(f"{self.name}: truncated varint")
            byte = self.data[self.pos]
            self.pos += 1
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7

    def read_u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def read_u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def read_f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def read_bytes(self, n: int) -> bytes:
        return self._take(n)

    def expect_eof(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{self.name}: {len(self.data) - self.pos} trailing bytes"
            )

    def check_version(self, version: int) -> None:
        if version != FORMAT_VERSION:
            raise FormatError(
                f"{self.name}: unsupported format version {version}"
            )
