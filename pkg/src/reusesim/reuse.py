"""Decoupled tag/data reuse cache.

The tag array tracks every line that missed in the LLC; the data array only
holds lines whose tag was hit again (after ``hysteresis`` re-references).
Each valid tag carries a forward pointer to its data way (or ``None``) and
each valid data entry a reverse pointer to its owning tag way.  Both arrays
are per-set LRU and share the same set index; the data array simply has
fewer ways.

Evictions run along two paths:

* tag eviction takes the linked data entry (if any) with it;
* data eviction clears the owner's forward pointer but leaves the tag valid,
  with its reuse count intact, so the next access re-allocates at once.

``op=WRITE`` denotes a full-line writeback from the level above.  It is
treated as a reference: with the tag resident it counts toward reuse and
allocates the data entry dirty without fetching; otherwise the line is
written through to DRAM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .cache import is_pow2
from .errors import ConfigError, LogicError
from .policies import LRUState
from .trace import Op


@dataclass(frozen=True)
class ReuseGeometry:
    sets: int
    tag_ways: int = 16
    data_ways: int = 8
    line_bytes: int = 64
    hysteresis: int = 1

    def __post_init__(self):
        if not is_pow2(self.sets):
            raise ConfigError("reuse cache set count must be a power of two")
        if not is_pow2(self.line_bytes):
            raise ConfigError("line_bytes must be a power of two")
        if not self.tag_ways >= self.data_ways >= 1:
            raise ConfigError("need tag_ways >= data_ways >= 1")
        if self.hysteresis < 0:
            raise ConfigError("hysteresis must be non-negative")

    @classmethod
    def from_sizes(cls, tag_bytes: int, data_bytes: int, tag_ways: int = 16,
                   line_bytes: int = 64, hysteresis: int = 1) -> "ReuseGeometry":
        """Geometry from "equivalent" array sizes, e.g. 1MB tag / 512KB data.

        A tag array of ``tag_bytes`` holds as many tags as a conventional cache
        of that size holds lines.
        """
        tags = tag_bytes // line_bytes
        sets = tags // tag_ways
        if sets * tag_ways * line_bytes != tag_bytes:
            raise ConfigError("tag size is not a multiple of tag_ways * line_bytes")
        data_lines = data_bytes // line_bytes
        if data_lines % sets:
            raise ConfigError("data size does not divide evenly over %d sets" % sets)
        return cls(sets, tag_ways, data_lines // sets, line_bytes, hysteresis)

    @property
    def tag_entries(self) -> int:
        return self.sets * self.tag_ways

    @property
    def data_entries(self) -> int:
        return self.sets * self.data_ways

    @property
    def data_bytes(self) -> int:
        return self.data_entries * self.line_bytes

    @property
    def tag_bytes(self) -> int:
        return self.tag_entries * self.line_bytes


class ReuseOutcome(NamedTuple):
    tag_hit: bool
    data_hit: bool
    data_allocated: bool
    tag_evicted: Optional[int]
    data_evicted: tuple  # ((line address, dirty), ...), usually at most one
    dram_fetch: bool
    dram_writebacks: int
    write_through: bool

    @property
    def dram_transfers(self) -> int:
        return int(self.dram_fetch) + self.dram_writebacks + int(self.write_through)


class ReuseCache:
    def __init__(self, geometry: ReuseGeometry, name: str = "llc", debug: bool = False):
        self.geometry = geometry
        self.name = name
        self.debug = debug
        g = geometry
        self._line_shift = g.line_bytes.bit_length() - 1
        self._set_mask = g.sets - 1
        self._set_shift = g.sets.bit_length() - 1
        self.tag = [[None] * g.tag_ways for _ in range(g.sets)]
        self.fwd = [[None] * g.tag_ways for _ in range(g.sets)]
        self.count = [[0] * g.tag_ways for _ in range(g.sets)]
        self.where = [dict() for _ in range(g.sets)]
        self.tag_lru = [LRUState(g.tag_ways) for _ in range(g.sets)]
        self.rev = [[None] * g.data_ways for _ in range(g.sets)]  # None = invalid
        self.ddirty = [[False] * g.data_ways for _ in range(g.sets)]
        self.data_lru = [LRUState(g.data_ways) for _ in range(g.sets)]
        self.data_insertions = 0

    def locate(self, address: int) -> tuple[int, int]:
        line = address >> self._line_shift
        return line & self._set_mask, line >> self._set_shift

    def line_address(self, set_idx: int, tag: int) -> int:
        return ((tag << self._set_shift) | set_idx) << self._line_shift

    def evict_tag(self, set_idx: int, tag_way: int) -> tuple:
        """Invalidate a tag entry and, via its forward pointer, its data.

        Returns ``(tag line address, data dirty flag or None)``; None means no
        data entry was linked.
        """
        tag = self.tag[set_idx][tag_way] if 0 <= tag_way < self.geometry.tag_ways else None
        if tag is None:
            raise LogicError("%s: evicting invalid tag way %d in set %d" % (self.name, tag_way, set_idx))
        dirty = None
        dway = self.fwd[set_idx][tag_way]
        if dway is not None:
            dirty = self.ddirty[set_idx][dway]
            self.rev[set_idx][dway] = None
            self.ddirty[set_idx][dway] = False
        del self.where[set_idx][tag]
        self.tag[set_idx][tag_way] = None
        self.fwd[set_idx][tag_way] = None
        self.count[set_idx][tag_way] = 0
        return self.line_address(set_idx, tag), dirty

    def evict_data(self, set_idx: int, data_way: int) -> tuple:
        """Invalidate a data entry; the owning tag stays valid with fwd cleared.

        Returns ``(line address, dirty)``.
        """
        owner = self.rev[set_idx][data_way] if 0 <= data_way < self.geometry.data_ways else None
        if owner is None:
            raise LogicError("%s: evicting invalid data way %d in set %d" % (self.name, data_way, set_idx))
        self.fwd[set_idx][owner] = None
        dirty = self.ddirty[set_idx][data_way]
        self.rev[set_idx][data_way] = None
        self.ddirty[set_idx][data_way] = False
        return self.line_address(set_idx, self.tag[set_idx][owner]), dirty

    def _allocate_data(self, s: int, tway: int, dirty: bool, evicted: list) -> None:
        rev = self.rev[s]
        try:
            dway = rev.index(None)
        except ValueError:
            dway = self.data_lru[s].victim()
            evicted.append(self.evict_data(s, dway))
        rev[dway] = tway
        self.fwd[s][tway] = dway
        self.ddirty[s][dway] = dirty
        self.data_lru[s].touch(dway)
        self.data_insertions += 1

    def access(self, address: int, op: Op = Op.READ) -> ReuseOutcome:
        s, tag = self.locate(address)
        is_write = op is Op.WRITE
        hyst = self.geometry.hysteresis
        evicted: list = []
        tway = self.where[s].get(tag)

        if tway is None:
            tag_evicted = None
            tags = self.tag[s]
            if len(self.where[s]) < len(tags):
                tway = tags.index(None)
            else:
                tway = self.tag_lru[s].victim()
                tag_evicted, ddirty = self.evict_tag(s, tway)
                if ddirty is not None:
                    evicted.append((tag_evicted, ddirty))
            tags[tway] = tag
            self.where[s][tag] = tway
            self.fwd[s][tway] = None
            self.count[s][tway] = 0
            self.tag_lru[s].touch(tway)
            allocated = hyst == 0
            if allocated:
                self._allocate_data(s, tway, is_write, evicted)
            out = ReuseOutcome(
                False, False, allocated, tag_evicted, tuple(evicted),
                not is_write, sum(d for _, d in evicted), is_write and not allocated,
            )
        else:
            self.tag_lru[s].touch(tway)
            dway = self.fwd[s][tway]
            if dway is not None:
                self.data_lru[s].touch(dway)
                if is_write:
                    self.ddirty[s][dway] = True
                out = ReuseOutcome(True, True, False, None, (), False, 0, False)
            else:
                cnt = self.count[s]
                if cnt[tway] < hyst:
                    cnt[tway] += 1
                allocated = cnt[tway] >= hyst
                if allocated:
                    self._allocate_data(s, tway, is_write, evicted)
                out = ReuseOutcome(
                    True, False, allocated, None, tuple(evicted),
                    not is_write, sum(d for _, d in evicted), is_write and not allocated,
                )
        if self.debug:
            self.check_set(s)
        return out

    def contains_tag(self, address: int) -> bool:
        s, tag = self.locate(address)
        return tag in self.where[s]

    def contains_data(self, address: int) -> bool:
        s, tag = self.locate(address)
        tway = self.where[s].get(tag)
        return tway is not None and self.fwd[s][tway] is not None

    def data_occupancy(self) -> int:
        return sum(r is not None for row in self.rev for r in row)

    def check_set(self, s: int) -> None:
        g = self.geometry
        for tway in range(g.tag_ways):
            tag = self.tag[s][tway]
            dway = self.fwd[s][tway]
            if tag is None:
                if dway is not None:
                    raise LogicError("%s: invalid tag %d/%d has a forward pointer" % (self.name, s, tway))
                continue
            if self.where[s].get(tag) != tway:
                raise LogicError("%s: tag index out of sync in set %d" % (self.name, s))
            if not 0 <= self.count[s][tway] <= g.hysteresis:
                raise LogicError("%s: reuse counter out of range" % self.name)
            if dway is not None and self.rev[s][dway] != tway:
                raise LogicError("%s: forward pointer %d/%d -> %d not reciprocated" % (self.name, s, tway, dway))
        if len(self.where[s]) != sum(t is not None for t in self.tag[s]):
            raise LogicError("%s: stale tag index entries in set %d" % (self.name, s))
        for dway in range(g.data_ways):
            owner = self.rev[s][dway]
            if owner is None:
                if self.ddirty[s][dway]:
                    raise LogicError("%s: dirty invalid data entry" % self.name)
                continue
            if self.tag[s][owner] is None or self.fwd[s][owner] != dway:
                raise LogicError("%s: reverse pointer %d/%d -> %d not reciprocated" % (self.name, s, dway, owner))

    def check_invariants(self) -> None:
        for s in range(self.geometry.sets):
            self.check_set(s)
