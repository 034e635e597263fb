"""
Little-endian primitives shared by the FFRW / FFSG / FFCK file formats.
"""
import struct
from typing import BinaryIO

import numpy as np

from seeg_pretrain.exception import FormatError


class BinaryWriter:
    def __init__(self, stream: BinaryIO):
        self.stream = stream

    def _pack(self, fmt: str, value) -> None:
        self.stream.write(struct.pack("<" + fmt, value))

    def magic(self, magic: bytes, version: int) -> None:
        self.stream.write(magic)
        self.u32(version)

    def u8(self, value: int) -> None:
        self._pack("B", value)

    def u16(self, value: int) -> None:
        self._pack("H", value)

    def u32(self, value: int) -> None:
        self._pack("I", value)

    def u64(self, value: int) -> None:
        self._pack("Q", value)

    def f64(self, value: float) -> None:
        self._pack("d", value)

    def short_text(self, text: str) -> None:
        """u16 byte length + UTF-8."""
        raw = text.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise FormatError("identifier longer than 65535 bytes")
        self.u16(len(raw))
        self.stream.write(raw)

    def long_text(self, text: str) -> None:
        """u32 byte length + UTF-8."""
        raw = text.encode("utf-8")
        self.u32(len(raw))
        self.stream.write(raw)

    def array(self, values: np.ndarray, dtype: str) -> None:
        self.stream.write(np.ascontiguousarray(values, dtype=dtype).tobytes(order="C"))


class BinaryReader:
    def __init__(self, stream: BinaryIO, source: str = "<stream>"):
        self.stream = stream
        self.source = source

    def _take(self, n: int) -> bytes:
        raw = self.stream.read(n)
        if len(raw) != n:
            raise FormatError(f"{self.source}: truncated file (wanted {n} bytes, got {len(raw)})")
        return raw

    def _unpack(self, fmt: str):
        size = struct.calcsize("<" + fmt)
        return struct.unpack("<" + fmt, self._take(size))[0]

    def expect_magic(self, magic: bytes, version: int) -> None:
        found = self._take(len(magic))
        if found != magic:
            raise FormatError(f"{self.source}: bad magic {found!r}, expected {magic!r}")
        found_version = self.u32()
        if found_version != version:
            raise FormatError(f"{self.source}: unsupported version {found_version}")

    def u8(self) -> int:
        return self._unpack("B")

    def u16(self) -> int:
        return self._unpack("H")

    def u32(self) -> int:
        return self._unpack("I")

    def u64(self) -> int:
        return self._unpack("Q")

    def f64(self) -> float:
        return self._unpack("d")

    def short_text(self) -> str:
        return self._take(self.u16()).decode("utf-8")

    def long_text(self) -> str:
        return self._take(self.u32()).decode("utf-8")

    def array(self, count: int, dtype: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self._take(count * itemsize), dtype=dtype).copy()

    def at_end(self) -> bool:
        return self.stream.read(1) == b""
