"""Offline trace analysis: LRU stack distances, workload classes, area bits."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field

from .cache import CacheGeometry
from .errors import ConfigError
from .reuse import ReuseGeometry

INF = math.inf


def _addresses(trace):
    for rec in trace:
        yield rec if isinstance(rec, int) else rec.address


@dataclass
class ReuseHistogram:
    """Stack distance -> occurrence count; first touches are keyed ``math.inf``."""

    counts: Counter = field(default_factory=Counter)
    line_bytes: int = 64

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def cold(self) -> int:
        return self.counts.get(INF, 0)

    def finite(self) -> dict:
        return {d: n for d, n in self.counts.items() if d != INF}

    def to_dict(self) -> dict:
        items = sorted(self.finite().items())
        return {
            "line_bytes": self.line_bytes,
            "total": self.total,
            "cold": self.cold,
            "distances": [[d, n] for d, n in items],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReuseHistogram":
        c = Counter({int(k): int(n) for k, n in d["distances"]})
        if d["cold"]:
            c[INF] = d["cold"]
        return cls(c, d["line_bytes"])


class _Fenwick:
    __slots__ = ("n", "tree")

    def __init__(self, n):
        self.n = n
        self.tree = [0] * (n + 1)

    def add(self, i, delta):
        i += 1
        tree, n = self.tree, self.n
        while i <= n:
            tree[i] += delta
            i += i & -i

    def prefix(self, i):
        """Sum of positions [0, i)."""
        s, tree = 0, self.tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s


def stack_distances(trace, line_bytes: int = 64) -> list:
    """Per-record LRU stack distance (distinct lines since the last touch)."""
    addrs = [a // line_bytes for a in _addresses(trace)]
    n = len(addrs)
    # a 1 at position t marks the most recent touch of some line
    bit = _Fenwick(n)
    last: dict[int, int] = {}
    live = 0
    out = []
    for t, line in enumerate(addrs):
        prev = last.get(line)
        if prev is None:
            out.append(INF)
            live += 1
        else:
            out.append(live - bit.prefix(prev + 1))
            bit.add(prev, -1)
        bit.add(t, 1)
        last[line] = t
    return out


def reuse_distances(trace, line_bytes: int = 64) -> ReuseHistogram:
    if not trace:
        raise ConfigError("reuse distance of an empty trace")
    return ReuseHistogram(Counter(stack_distances(trace, line_bytes)), line_bytes)


class WorkloadClass(str, enum.Enum):
    CACHE_FRIENDLY = "CacheFriendly"
    CACHE_SENSITIVE = "CacheSensitive"
    STREAMING = "Streaming"
    LARGE_WORKING_SET = "LargeWorkingSet"


@dataclass(frozen=True)
class ClassifyThresholds:
    streaming_reuse_fraction: float = 0.05
    friendly_fraction: float = 0.80
    friendly_distance: float = 0.25  # of llc_lines
    large_fraction: float = 0.50


def classify(hist: ReuseHistogram, llc_lines: int,
             thresholds: ClassifyThresholds = ClassifyThresholds()) -> WorkloadClass:
    total = hist.total
    if total == 0:
        raise ConfigError("cannot classify an empty histogram")
    finite = hist.finite()
    n_finite = sum(finite.values())
    if n_finite / total < thresholds.streaming_reuse_fraction:
        return WorkloadClass.STREAMING
    near = sum(n for d, n in finite.items() if d < llc_lines * thresholds.friendly_distance)
    if near / n_finite >= thresholds.friendly_fraction:
        return WorkloadClass.CACHE_FRIENDLY
    far = sum(n for d, n in finite.items() if d >= llc_lines)
    if far / n_finite >= thresholds.large_fraction:
        return WorkloadClass.LARGE_WORKING_SET
    return WorkloadClass.CACHE_SENSITIVE


def clog2(x: int) -> int:
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0


@dataclass
class AreaReport:
    name: str
    data_bits: int
    tag_bits: int
    pointer_bits: int
    state_bits: int
    replacement_bits: int
    baseline: str | None = None
    baseline_bits: int | None = None

    @property
    def total_bits(self) -> int:
        return self.data_bits + self.tag_bits + self.pointer_bits + self.state_bits + self.replacement_bits

    @property
    def reduction(self) -> float | None:
        """Fractional saving relative to the baseline (0.45 means 45% smaller)."""
        if self.baseline_bits is None:
            return None
        return 1.0 - self.total_bits / self.baseline_bits

    def against(self, other: "AreaReport") -> "AreaReport":
        return AreaReport(self.name, self.data_bits, self.tag_bits, self.pointer_bits,
                          self.state_bits, self.replacement_bits, other.name, other.total_bits)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "data_bits": self.data_bits,
            "tag_bits": self.tag_bits,
            "pointer_bits": self.pointer_bits,
            "state_bits": self.state_bits,
            "replacement_bits": self.replacement_bits,
            "total_bits": self.total_bits,
            "baseline": self.baseline,
            "baseline_bits": self.baseline_bits,
            "reduction": self.reduction,
        }


def area_bits(llc, address_bits: int = 48, name: str | None = None) -> AreaReport:
    """Storage-bit area model for a conventional or reuse LLC.

    Conventional line: data + tag + valid/dirty + LRU rank (log2 ways bits).
    Reuse tag entry: tag + valid + forward pointer (valid bit + data-way
    index) + reuse counter + LRU rank.  Reuse data entry: data + valid/dirty
    + reverse pointer (tag-way index) + LRU rank.
    """
    if isinstance(llc, CacheGeometry):
        g = llc
        tag = address_bits - clog2(g.sets) - clog2(g.line_bytes)
        n = g.lines
        return AreaReport(
            name or "conventional %s/%d-way" % (_size(g.size_bytes), g.ways),
            data_bits=n * 8 * g.line_bytes,
            tag_bits=n * tag,
            pointer_bits=0,
            state_bits=n * 2,
            replacement_bits=g.sets * g.ways * clog2(g.ways),
        )
    if isinstance(llc, ReuseGeometry):
        g = llc
        tag = address_bits - clog2(g.sets) - clog2(g.line_bytes)
        nt, nd = g.tag_entries, g.data_entries
        fwd = 1 + clog2(g.data_ways)
        rev = clog2(g.tag_ways)
        counter = clog2(g.hysteresis + 1)
        return AreaReport(
            name or "reuse %s data / %s tag" % (_size(g.data_bytes), _size(g.tag_bytes)),
            data_bits=nd * 8 * g.line_bytes,
            tag_bits=nt * tag,
            pointer_bits=nt * fwd + nd * rev,
            state_bits=nt * (1 + counter) + nd * 2,
            replacement_bits=nt * clog2(g.tag_ways) + nd * clog2(g.data_ways),
        )
    raise ConfigError("area_bits needs a CacheGeometry or ReuseGeometry")


def _size(b: int) -> str:
    if b % (1 << 20) == 0:
        return "%dMB" % (b >> 20)
    return "%dKB" % (b >> 10)


def area_comparison(conventional: CacheGeometry, reuse_geoms, address_bits: int = 48) -> list:
    base = area_bits(conventional, address_bits)
    return [base] + [area_bits(g, address_bits).against(base) for g in reuse_geoms]
