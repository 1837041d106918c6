"""Packed bit strings, loop extension and sequential bit reading.

Bits are stored MSB-first within each byte: bit 0 of a string is the most
significant bit of byte 0. Pad bits beyond ``length`` in the final byte are
always zero.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Union

import numpy as np

__all__ = [
    "BitString",
    "LoopedView",
    "BitCursor",
    "SourceExhausted",
    "load_bits",
    "load_concatenated",
    "store_bits",
    "complement",
    "loop_to",
]

MAX_READ = 128


class SourceExhausted(Exception):
    """Raised when a cursor is asked for more bits than remain."""

    def __init__(self, requested: int, remaining: int, position: int):
        super().__init__(
            f"source exhausted at bit {position}: requested {requested}, {remaining} remaining"
        )
        self.requested = requested
        self.remaining = remaining
        self.position = position


def _tail_mask(length: int) -> int:
    r = length % 8
    return 0xFF if r == 0 else (0xFF << (8 - r)) & 0xFF


class BitString:
    """Immutable packed binary string."""

    __slots__ = ("_data", "_length")

    def __init__(self, data: Union[bytes, bytearray, np.ndarray], length: int | None = None):
        if isinstance(data, np.ndarray):
            arr = np.array(data, dtype=np.uint8, copy=True).ravel()
        else:
            arr = np.frombuffer(bytes(data), dtype=np.uint8).copy()
        nbits = arr.size * 8
        if length is None:
            length = nbits
        if length < 0 or length > nbits or (length + 7) // 8 != arr.size:
            raise ValueError(f"length {length} inconsistent with {arr.size} bytes")
        if length % 8:
            arr[-1] &= _tail_mask(length)
        arr.setflags(write=False)
        self._data = arr
        self._length = int(length)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_bits(cls, bits: Union[Iterable[int], np.ndarray]) -> "BitString":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(np.packbits(arr), arr.size)

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        """Parse an ASCII string of '0'/'1' characters; whitespace is ignored."""
        cleaned = "".join(text.split())
        if set(cleaned) - {"0", "1"}:
            raise ValueError("text bit format accepts only '0', '1' and whitespace")
        return cls.from_bits(np.frombuffer(cleaned.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(np.zeros((length + 7) // 8, dtype=np.uint8), length)

    # -- accessors ----------------------------------------------------------

    @property
    def length(self) -> int:
        return self._length

    def __len__(self) -> int:
        return self._length

    @property
    def packed(self) -> np.ndarray:
        """Read-only view of the packed bytes."""
        return self._data

    def to_bytes(self) -> bytes:
        return self._data.tobytes()

    def to_text(self) -> str:
        return "".join(map(str, self.bits().tolist()))

    def bit(self, i: int) -> int:
        if not 0 <= i < self._length:
            raise IndexError(f"bit index {i} out of range for length {self._length}")
        return (int(self._data[i >> 3]) >> (7 - (i & 7))) & 1

    def bits(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Unpacked bits ``[start, stop)`` as a uint8 array of 0/1."""
        stop = self._length if stop is None else stop
        if not 0 <= start <= stop <= self._length:
            raise IndexError(f"bit range [{start}, {stop}) out of range for length {self._length}")
        lo, hi = start >> 3, (stop + 7) >> 3
        unpacked = np.unpackbits(self._data[lo:hi])
        off = start - (lo << 3)
        return unpacked[off : off + (stop - start)]

    def read_int(self, start: int, count: int) -> int:
        """Integer whose MSB-first binary form is bits ``[start, start+count)``."""
        if count == 0:
            return 0
        end = start + count
        if start < 0 or end > self._length:
            raise IndexError(f"bit range [{start}, {end}) out of range for length {self._length}")
        lo, hi = start >> 3, (end + 7) >> 3
        value = int.from_bytes(self._data[lo:hi].tobytes(), "big")
        value >>= (hi << 3) - end
        return value & ((1 << count) - 1)

    def count_ones(self) -> int:
        return int(np.unpackbits(self._data).sum(dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._length == other._length and np.array_equal(self._data, other._data)

    def __hash__(self) -> int:
        return hash((self._length, self._data.tobytes()))

    def __repr__(self) -> str:
        if self._length <= 64:
            return f"BitString('{self.to_text()}')"
        return f"BitString(<{self._length} bits>)"


class LoopedView:
    """Lazy repetition of ``base`` up to ``target_length`` bits."""

    __slots__ = ("base", "target_length")

    def __init__(self, base: BitString, target_length: int):
        if base.length < 1:
            raise ValueError("cannot loop an empty string")
        if target_length < base.length:
            raise ValueError(
                f"target length {target_length} shorter than base length {base.length}"
            )
        self.base = base
        self.target_length = int(target_length)

    @property
    def length(self) -> int:
        return self.target_length

    def __len__(self) -> int:
        return self.target_length

    @property
    def repetitions(self) -> int:
        return self.target_length // self.base.length

    def bit(self, i: int) -> int:
        if not 0 <= i < self.target_length:
            raise IndexError(f"bit index {i} out of range for length {self.target_length}")
        return self.base.bit(i % self.base.length)

    def bits(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.target_length if stop is None else stop
        if not 0 <= start <= stop <= self.target_length:
            raise IndexError(f"bit range [{start}, {stop}) out of range for length {self.target_length}")
        period = self.base.length
        if stop - start <= period and (start % period) + (stop - start) <= period:
            s = start % period
            return self.base.bits(s, s + stop - start)
        unit = self.base.bits()
        return unit[np.arange(start, stop, dtype=np.int64) % period]

    def read_int(self, start: int, count: int) -> int:
        end = start + count
        if start < 0 or end > self.target_length:
            raise IndexError(f"bit range [{start}, {end}) out of range for length {self.target_length}")
        period = self.base.length
        value = 0
        pos = start
        while pos < end:
            s = pos % period
            take = min(end - pos, period - s)
            value = (value << take) | self.base.read_int(s, take)
            pos += take
        return value

    def materialize(self) -> BitString:
        return BitString.from_bits(self.bits())

    def __repr__(self) -> str:
        return f"LoopedView(base=<{self.base.length} bits>, target_length={self.target_length})"


BitSource = Union[BitString, LoopedView]


class BitCursor:
    """Sequential reader over a bit source. One cursor per thread."""

    __slots__ = ("source", "position", "start_offset")

    def __init__(self, source: BitSource, start_offset: int = 0):
        if not 0 <= start_offset <= source.length:
            raise ValueError(f"start offset {start_offset} outside source of {source.length} bits")
        self.source = source
        self.position = start_offset
        self.start_offset = start_offset

    @property
    def consumed(self) -> int:
        return self.position - self.start_offset

    @property
    def remaining(self) -> int:
        return self.source.length - self.position

    def read_bits(self, count: int) -> int:
        if not 0 <= count <= MAX_READ:
            raise ValueError(f"read size must be in [0, {MAX_READ}], got {count}")
        return self.read_wide(count)

    def read_wide(self, count: int) -> int:
        """Like :meth:`read_bits` but without the 128-bit cap (witness strings)."""
        if count > self.remaining:
            raise SourceExhausted(count, self.remaining, self.position)
        value = self.source.read_int(self.position, count)
        self.position += count
        return value


def read_bits(cursor: BitCursor, count: int) -> int:
    return cursor.read_bits(count)


# -- file I/O and transformations -----------------------------------------


def load_bits(path: Union[str, os.PathLike], format: str = "raw") -> BitString:
    """Load a bit string from disk.

    ``format="raw"`` reads any byte stream (8 bits per byte, MSB first);
    ``format="text"`` reads ASCII '0'/'1' characters with whitespace ignored.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such bit file: {path}")
    if path.stat().st_size == 0:
        raise ValueError(f"bit file is empty: {path}")
    if format == "raw":
        return BitString(np.fromfile(path, dtype=np.uint8))
    if format == "text":
        x = BitString.from_text(path.read_text(encoding="ascii"))
        if x.length == 0:
            raise ValueError(f"bit file has no bits: {path}")
        return x
    raise ValueError(f"unknown bit file format {format!r}")


def load_concatenated(paths: Iterable[Union[str, os.PathLike]]) -> BitString:
    """Byte-level concatenation of several raw files into one string."""
    parts = [load_bits(p).packed for p in paths]
    if not parts:
        raise ValueError("no files to concatenate")
    return BitString(np.concatenate(parts))


def store_bits(x: BitString, path: Union[str, os.PathLike]) -> None:
    """Write the packed bytes; a partial final byte is zero-padded."""
    Path(path).write_bytes(x.to_bytes())


def complement(x: BitString) -> BitString:
    return BitString(np.bitwise_not(x.packed), x.length)


def loop_to(x: BitString, target_length: int) -> LoopedView:
    return LoopedView(x, target_length)
