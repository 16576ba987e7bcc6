"""Conventional set-associative cache model (metadata only, no payloads)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import ConfigError, LogicError
from .policies import PolicyKind, full_mask, make_policy
from .trace import Op


def is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


class WriteMode(str, enum.Enum):
    WRITEBACK = "writeback"
    WRITETHROUGH = "writethrough"


@dataclass(frozen=True)
class CacheGeometry:
    size_bytes: int
    ways: int
    line_bytes: int = 64

    def __post_init__(self):
        if self.ways < 1 or self.size_bytes < 1:
            raise ConfigError("cache size and ways must be positive")
        if not is_pow2(self.line_bytes):
            raise ConfigError("line_bytes must be a power of two, got %d" % self.line_bytes)
        if self.size_bytes % (self.ways * self.line_bytes):
            raise ConfigError("size %d is not a multiple of ways*line_bytes" % self.size_bytes)
        if not is_pow2(self.sets):
            raise ConfigError("set count %d is not a power of two" % self.sets)

    @property
    def sets(self) -> int:
        return self.size_bytes // (self.ways * self.line_bytes)

    @property
    def lines(self) -> int:
        return self.sets * self.ways


class AccessOutcome(NamedTuple):
    hit: bool
    evicted: Optional[tuple]  # (line address, dirty)
    filled: bool
    write_through: bool = False


class Cache:
    """Set-associative cache with LRU or tree-PLRU replacement.

    ``access`` takes an optional allocation mask; all ways are always probed
    for hits.  In writethrough mode no line is ever dirty and every write is
    reported downstream via ``AccessOutcome.write_through``.
    """

    def __init__(self, geometry: CacheGeometry, policy=PolicyKind.LRU,
                 write_mode=WriteMode.WRITEBACK, name: str = "cache", debug: bool = False):
        self.geometry = geometry
        self.name = name
        self.policy_kind = PolicyKind(policy)
        self.write_mode = WriteMode(write_mode)
        self.writeback = self.write_mode is WriteMode.WRITEBACK
        self.debug = debug
        g = geometry
        self._line_shift = g.line_bytes.bit_length() - 1
        self._sets = g.sets
        self._set_mask = g.sets - 1
        self._set_shift = g.sets.bit_length() - 1
        self._full = full_mask(g.ways)
        self.tags = [[None] * g.ways for _ in range(g.sets)]
        self.dirty = [[False] * g.ways for _ in range(g.sets)]
        self.where = [dict() for _ in range(g.sets)]  # tag -> way
        self.repl = [make_policy(self.policy_kind, g.ways) for _ in range(g.sets)]

    def locate(self, address: int) -> tuple[int, int]:
        line = address >> self._line_shift
        return line & self._set_mask, line >> self._set_shift

    def line_address(self, set_idx: int, tag: int) -> int:
        return ((tag << self._set_shift) | set_idx) << self._line_shift

    def contains(self, address: int) -> bool:
        s, tag = self.locate(address)
        return tag in self.where[s]

    def access(self, address: int, op: Op = Op.READ, mask: int | None = None) -> AccessOutcome:
        s, tag = self.locate(address)
        where = self.where[s]
        is_write = op is Op.WRITE
        wt = is_write and not self.writeback
        way = where.get(tag)
        if way is not None:
            self.repl[s].touch(way)
            if is_write and self.writeback:
                self.dirty[s][way] = True
            if self.debug:
                self.check_set(s)
            return AccessOutcome(True, None, False, wt)

        if mask is None:
            mask = self._full
        way = self._choose_victim(s, mask)
        evicted = None
        old = self.tags[s][way]
        if old is not None:
            evicted = (self.line_address(s, old), self.dirty[s][way])
            del where[old]
        self.tags[s][way] = tag
        self.dirty[s][way] = is_write and self.writeback
        where[tag] = way
        self.repl[s].touch(way)
        if self.debug:
            self.check_set(s)
        return AccessOutcome(False, evicted, True, wt)

    def _choose_victim(self, s: int, mask: int) -> int:
        mask &= self._full
        if not mask:
            raise LogicError("%s: empty allocation mask" % self.name)
        tags = self.tags[s]
        if len(self.where[s]) < len(tags):
            for w in range(len(tags)):
                if tags[w] is None and mask >> w & 1:
                    return w
        return self.repl[s].victim(mask)

    def invalidate(self, address: int) -> Optional[bool]:
        """Drop ``address`` if resident; return its dirty flag, or None if absent."""
        s, tag = self.locate(address)
        way = self.where[s].pop(tag, None)
        if way is None:
            return None
        dirty = self.dirty[s][way]
        self.tags[s][way] = None
        self.dirty[s][way] = False
        if self.debug:
            self.check_set(s)
        return dirty

    def resident(self) -> list[int]:
        return sorted(self.line_address(s, t) for s in range(self._sets) for t in self.where[s])

    def check_set(self, s: int) -> None:
        tags = self.tags[s]
        valid = [t for t in tags if t is not None]
        if len(valid) != len(set(valid)):
            raise LogicError("%s: duplicate tag in set %d" % (self.name, s))
        if {t: w for w, t in enumerate(tags) if t is not None} != self.where[s]:
            raise LogicError("%s: tag index out of sync in set %d" % (self.name, s))
        for w, t in enumerate(tags):
            if self.dirty[s][w] and (t is None or not self.writeback):
                raise LogicError("%s: dirty flag on invalid or writethrough line" % self.name)

    def check_invariants(self) -> None:
        for s in range(self._sets):
            self.check_set(s)
