"""Per-set replacement state: true LRU and tree pseudo-LRU.

Way masks are plain ``int`` bitsets (bit ``w`` set means way ``w`` may be
allocated).  Victim selection honours the mask; hits never consult it.
"""

from __future__ import annotations

import enum

from .errors import ConfigError, LogicError


class PolicyKind(str, enum.Enum):
    LRU = "LRU"
    TREE_PLRU = "TreePLRU"


def full_mask(ways: int) -> int:
    return (1 << ways) - 1


def mask_from_ways(way_indices) -> int:
    m = 0
    for w in way_indices:
        m |= 1 << w
    return m


def mask_ways(mask: int) -> list[int]:
    return [w for w in range(mask.bit_length()) if mask >> w & 1]


class LRUState:
    """Recency list of way indices, least recent first."""

    kind = PolicyKind.LRU
    __slots__ = ("ways", "order")

    def __init__(self, ways: int):
        if ways < 1:
            raise ConfigError("ways must be positive")
        self.ways = ways
        self.order = list(range(ways))

    def touch(self, way: int) -> None:
        if not 0 <= way < self.ways:
            raise LogicError("way %d out of range for %d-way set" % (way, self.ways))
        order = self.order
        if order[-1] != way:
            order.remove(way)
            order.append(way)

    def victim(self, mask: int | None = None) -> int:
        if mask is None:
            return self.order[0]
        if not mask & full_mask(self.ways):
            raise LogicError("victim selection with an empty way mask")
        for w in self.order:
            if mask >> w & 1:
                return w
        raise LogicError("unreachable: mask has no way in range")

    def serialize(self) -> tuple:
        return tuple(self.order)

    @classmethod
    def deserialize(cls, ways: int, data) -> "LRUState":
        st = cls(ways)
        if sorted(data) != list(range(ways)):
            raise LogicError("LRU recency list is not a permutation")
        st.order = list(data)
        return st


class TreePLRUState:
    """Binary-tree PLRU over ``ways - 1`` bits stored in heap order.

    Node ``n`` has children ``2n+1`` / ``2n+2``; leaves map to ways.  A bit of
    0 means the victim lies in the left subtree, 1 the right subtree.  A
    per-way touch stamp backs victim selection under a partial mask.
    """

    kind = PolicyKind.TREE_PLRU
    __slots__ = ("ways", "bits", "stamps", "clock", "_levels")

    def __init__(self, ways: int):
        if ways < 1 or ways & (ways - 1):
            raise ConfigError("TreePLRU needs a power-of-two way count, got %d" % ways)
        self.ways = ways
        self.bits = [0] * (ways - 1)
        self.stamps = [0] * ways
        self.clock = 0
        self._levels = ways.bit_length() - 1

    def touch(self, way: int) -> None:
        if not 0 <= way < self.ways:
            raise LogicError("way %d out of range for %d-way set" % (way, self.ways))
        node = 0
        for level in range(self._levels - 1, -1, -1):
            right = way >> level & 1
            # point away from the touched way
            self.bits[node] = 0 if right else 1
            node = 2 * node + 1 + right
        self.clock += 1
        self.stamps[way] = self.clock

    def victim(self, mask: int | None = None) -> int:
        full = full_mask(self.ways)
        if mask is not None and not mask & full:
            raise LogicError("victim selection with an empty way mask")
        if mask is None or mask & full == full:
            node, way = 0, 0
            for _ in range(self._levels):
                b = self.bits[node]
                way = way << 1 | b
                node = 2 * node + 1 + b
            return way
        allowed = [w for w in range(self.ways) if mask >> w & 1]
        return min(allowed, key=lambda w: (self.stamps[w], w))

    def serialize(self) -> int:
        v = 0
        for i, b in enumerate(self.bits):
            v |= b << i
        return v

    @classmethod
    def deserialize(cls, ways: int, data: int) -> "TreePLRUState":
        st = cls(ways)
        if data >> (ways - 1):
            raise LogicError("TreePLRU state has more than ways-1 bits")
        st.bits = [data >> i & 1 for i in range(ways - 1)]
        return st


def make_policy(kind, ways: int):
    kind = PolicyKind(kind)
    if kind is PolicyKind.LRU:
        return LRUState(ways)
    return TreePLRUState(ways)
