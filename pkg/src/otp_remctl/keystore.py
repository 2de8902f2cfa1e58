"""Precharged key stores: address-indexed one-time key blocks with a consumption ledger.

A store is charged once from an entropy source, in two byte-identical
copies (one per party).  Each block is consumable exactly once, and blocks
skipped during loss recovery are burned rather than queued, so the two
ledgers can only ever move forward.

On-disk format (all integers big-endian):

    magic "SKS1" | version u16 | block_size u16 | block_count u32 |
    consumed bitmap (ceil(block_count/8) bytes, bit i = block i, MSB-first) |
    key material (block_count * block_size bytes) |
    CRC-32 (IEEE) over all preceding bytes, u32
"""

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

from .entropy import EntropySource
from .errors import (
    BadMagic,
    BadVersion,
    ChecksumMismatch,
    KeyReused,
    OutOfRange,
    SksFormatError,
    TruncatedFile,
)

FULL_BLOCK_SIZE = 32
SELECTIVE_BLOCK_SIZE = 23

MAGIC = b"SKS1"
VERSION = 1
_HEADER = struct.Struct(">4sHHI")
_CRC = struct.Struct(">I")

MAX_ADDRESS = 2**32 - 1


@dataclass(frozen=True, order=True)
class KeyAddress:
    """32-bit block index; serialized as exactly 4 bytes, big-endian."""

    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index <= MAX_ADDRESS:
            raise OutOfRange(f"address must fit in 32 bits, got {self.index}")

    def to_bytes(self) -> bytes:
        return self.index.to_bytes(4, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyAddress":
        if len(data) != 4:
            raise ValueError(f"address is 4 bytes, got {len(data)}")
        return cls(int.from_bytes(data, "big"))


def _index(addr) -> int:
    return addr.index if isinstance(addr, KeyAddress) else int(addr)


class SksStore:
    """Key material plus its consumption ledger.

    Single-writer; a loaded store that is never mutated may be read
    concurrently.  The ledger only grows: a block index is marked consumed
    at most once and never unmarked.
    """

    def __init__(self, block_size: int, block_count: int, key_material: bytes,
                 consumed=None) -> None:
        if block_size < 1:
            raise ValueError(f"block_size must be positive, got {block_size}")
        if block_count < 1:
            raise ValueError(f"block_count must be positive, got {block_count}")
        if block_count - 1 > MAX_ADDRESS:
            raise ValueError(f"block_count {block_count} exceeds the 32-bit address space")
        if len(key_material) != block_size * block_count:
            raise ValueError(
                f"key material is {len(key_material)} bytes, "
                f"expected {block_size * block_count}"
            )
        self.block_size = block_size
        self.block_count = block_count
        self._material = bytes(key_material)
        if consumed is None:
            self._consumed = bytearray(block_count)
        else:
            if len(consumed) != block_count:
                raise ValueError("consumed ledger length must equal block_count")
            self._consumed = bytearray(1 if c else 0 for c in consumed)
        self._consumed_count = sum(self._consumed)
        self._next = 0
        self._advance()

    def _advance(self) -> None:
        while self._next < self.block_count and self._consumed[self._next]:
            self._next += 1

    @property
    def key_material(self) -> bytes:
        return self._material

    @property
    def next_expected(self) -> KeyAddress:
        """Smallest unconsumed index (== block_count when exhausted)."""
        return KeyAddress(self._next)

    @property
    def consumed_count(self) -> int:
        return self._consumed_count

    @property
    def remaining(self) -> int:
        return self.block_count - self._consumed_count

    def is_consumed(self, addr) -> bool:
        i = _index(addr)
        if not 0 <= i < self.block_count:
            raise OutOfRange(f"address {i} not in store of {self.block_count} blocks")
        return bool(self._consumed[i])

    def take_block(self, addr) -> bytes:
        """Return and burn the block at ``addr``.

        Raises OutOfRange past the end of the store and KeyReused on a
        second take of the same address; the block's bytes are returned
        exactly once, ever.
        """
        i = _index(addr)
        if not 0 <= i < self.block_count:
            raise OutOfRange(f"address {i} not in store of {self.block_count} blocks")
        if self._consumed[i]:
            raise KeyReused(f"key block {i} already consumed")
        self._consumed[i] = 1
        self._consumed_count += 1
        if i == self._next:
            self._advance()
        off = i * self.block_size
        return self._material[off:off + self.block_size]

    def discard_through(self, addr) -> int:
        """Burn every unconsumed block below ``addr``; return how many.

        Idempotent: a no-op when ``addr`` is at or below next_expected.
        """
        limit = min(_index(addr), self.block_count)
        burned = 0
        for i in range(self._next, limit):
            if not self._consumed[i]:
                self._consumed[i] = 1
                burned += 1
        if burned:
            self._consumed_count += burned
            self._advance()
        return burned

    def consumed_bitmap(self) -> bytes:
        """Ledger packed one bit per block, MSB-first (the file encoding)."""
        bitmap = bytearray((self.block_count + 7) // 8)
        for i, c in enumerate(self._consumed):
            if c:
                bitmap[i >> 3] |= 0x80 >> (i & 7)
        return bytes(bitmap)

    def save(self, path) -> None:
        """Persist the store, ledger included, in the bit-exact file format."""
        body = _HEADER.pack(MAGIC, VERSION, self.block_size, self.block_count)
        body += self.consumed_bitmap()
        body += self._material
        Path(path).write_bytes(body + _CRC.pack(zlib.crc32(body)))

    @classmethod
    def load(cls, path) -> "SksStore":
        """Load a store file; failure modes are distinct, never a wrong state."""
        data = Path(path).read_bytes()
        if len(data) < len(MAGIC):
            raise TruncatedFile(f"{path}: {len(data)} bytes, too short for the magic")
        if data[:4] != MAGIC:
            raise BadMagic(f"{path}: bad magic {data[:4]!r}")
        if len(data) < _HEADER.size:
            raise TruncatedFile(f"{path}: header incomplete")
        _, version, block_size, block_count = _HEADER.unpack_from(data)
        if version != VERSION:
            raise BadVersion(f"{path}: unsupported version {version}")
        if block_size < 1 or block_count < 1:
            raise SksFormatError(f"{path}: nonsense geometry {block_size}x{block_count}")
        bitmap_len = (block_count + 7) // 8
        total = _HEADER.size + bitmap_len + block_size * block_count + _CRC.size
        if len(data) < total:
            raise TruncatedFile(f"{path}: {len(data)} bytes, format needs {total}")
        if len(data) > total:
            raise SksFormatError(f"{path}: {len(data) - total} trailing bytes")
        (stored_crc,) = _CRC.unpack_from(data, total - _CRC.size)
        actual_crc = zlib.crc32(data[:total - _CRC.size])
        if stored_crc != actual_crc:
            raise ChecksumMismatch(
                f"{path}: CRC {actual_crc:#010x} != stored {stored_crc:#010x}"
            )
        bitmap = data[_HEADER.size:_HEADER.size + bitmap_len]
        consumed = bytearray(block_count)
        for i in range(block_count):
            if bitmap[i >> 3] & (0x80 >> (i & 7)):
                consumed[i] = 1
        material = data[_HEADER.size + bitmap_len:total - _CRC.size]
        return cls(block_size, block_count, material, consumed)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SksStore):
            return NotImplemented
        return (self.block_size == other.block_size
                and self.block_count == other.block_count
                and self._material == other._material
                and self._consumed == other._consumed)

    def __repr__(self) -> str:
        return (f"SksStore(block_size={self.block_size}, "
                f"block_count={self.block_count}, "
                f"consumed={self._consumed_count})")


def charge(source: EntropySource, block_size: int, block_count: int):
    """Draw fresh key material and return matched (controller, controlee) stores.

    Both copies share byte-identical material and start with empty ledgers.
    """
    if block_size not in (FULL_BLOCK_SIZE, SELECTIVE_BLOCK_SIZE):
        raise ValueError(
            f"block_size must be {FULL_BLOCK_SIZE} (full) or "
            f"{SELECTIVE_BLOCK_SIZE} (selective), got {block_size}"
        )
    if block_count < 1:
        raise ValueError(f"block_count must be positive, got {block_count}")
    material = source.fill(block_size * block_count)
    return (SksStore(block_size, block_count, material),
            SksStore(block_size, block_count, material))
