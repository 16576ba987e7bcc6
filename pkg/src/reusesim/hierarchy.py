"""CPU-GPU memory hierarchy and the shared-LLC allocation schemes.

Topology (defaults follow the evaluated APU configuration):

* per CPU core: L1I 32KB/4-way, L1D 32KB/4-way, L2 256KB/8-way (PLRU, writeback);
* per GPU CU: L1D 4KB/4-way writethrough; one 32KB/8-way L1I per 4 CUs;
  one GPU L2 4KB/8-way writeback;
* shared LLC 1MB/16-way true LRU; 2GB of DRAM.

Levels are non-inclusive/non-exclusive.  Timing is a blocking in-order
model: an access costs the latencies of every level it traverses, and a
source's cycles are ``icount * cpi_base`` plus its access latencies.
Writebacks are off the critical path.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, fields, replace
from typing import NamedTuple

from .cache import Cache, CacheGeometry, WriteMode
from .errors import ConfigError
from .metrics import MetricsReport, SourceStats, check_identities
from .policies import PolicyKind, full_mask, mask_from_ways, mask_ways
from .reuse import ReuseCache, ReuseGeometry
from .trace import Op, TraceRecord, is_gpu, source_index

KB = 1024
MB = 1024 * KB
GB = 1024 * MB


class Scheme(str, enum.Enum):
    SHARED_LRU = "SharedLRU"
    STATIC_PARTITION = "StaticPartition"
    GPU_BYPASS = "GpuBypass"
    REUSE_CACHE = "ReuseCache"


ALL_SCHEMES = tuple(Scheme)


@dataclass(frozen=True)
class LevelConfig:
    size_bytes: int
    ways: int
    line_bytes: int = 64
    policy: PolicyKind = PolicyKind.TREE_PLRU
    write_mode: WriteMode = WriteMode.WRITEBACK

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind(self.policy))
        object.__setattr__(self, "write_mode", WriteMode(self.write_mode))
        self.geometry  # validates

    @property
    def geometry(self) -> CacheGeometry:
        return CacheGeometry(self.size_bytes, self.ways, self.line_bytes)


@dataclass(frozen=True)
class ReuseConfig:
    """Reuse-cache arrays; ``None`` sizes derive from the LLC level.

    Defaults give a tag array covering the LLC and a data array of half its
    capacity (tag:data = 2:1).
    """

    tag_bytes: int | None = None
    data_bytes: int | None = None
    tag_ways: int | None = None
    hysteresis: int = 1


@dataclass(frozen=True)
class Latencies:
    l1: int = 1
    l2: int = 10
    llc: int = 30
    dram: int = 200


def _level(size, ways, **kw):
    return LevelConfig(size, ways, **kw)


@dataclass(frozen=True)
class HierarchyConfig:
    cpu_l1i: LevelConfig = _level(32 * KB, 4)
    cpu_l1d: LevelConfig = _level(32 * KB, 4)
    cpu_l2: LevelConfig = _level(256 * KB, 8)
    gpu_l1d: LevelConfig = _level(4 * KB, 4, write_mode=WriteMode.WRITETHROUGH)
    gpu_l1i: LevelConfig = _level(32 * KB, 8)
    gpu_l2: LevelConfig = _level(4 * KB, 8)
    llc: LevelConfig = _level(1 * MB, 16, policy=PolicyKind.LRU)
    llc_scheme: Scheme = Scheme.SHARED_LRU
    cpu_way_mask: tuple | None = None  # way indices; None = lower half
    gpu_way_mask: tuple | None = None  # way indices; None = upper half
    reuse: ReuseConfig = ReuseConfig()
    latency: Latencies = Latencies()
    bus_bytes_per_cycle: float = 16
    cpi_base: int = 1
    cpu_cores: int = 2
    gpu_cus: int = 4
    cus_per_l1i: int = 4
    cpu_l2_shared: bool = False
    dram_bytes: int = 2 * GB

    def __post_init__(self):
        object.__setattr__(self, "llc_scheme", Scheme(self.llc_scheme))
        for name in ("cpu_way_mask", "gpu_way_mask"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(sorted(v)))
        self.validate()

    def validate(self):
        cpu, gpu = self.partition_masks()
        if cpu & gpu:
            raise ConfigError("CPU and GPU way masks overlap")
        if cpu | gpu != full_mask(self.llc.ways):
            raise ConfigError("CPU and GPU way masks must cover all %d LLC ways" % self.llc.ways)
        if not cpu or not gpu:
            raise ConfigError("each partition needs at least one way")
        lines = {lvl.line_bytes for lvl in (self.cpu_l1i, self.cpu_l1d, self.cpu_l2, self.gpu_l1d,
                                            self.gpu_l1i, self.gpu_l2, self.llc)}
        if len(lines) != 1:
            raise ConfigError("all levels must share one line size")
        if self.reuse_geometry().sets < 1:
            raise ConfigError("reuse cache geometry is empty")
        if self.bus_bytes_per_cycle <= 0 or self.cpi_base < 0:
            raise ConfigError("bus_bytes_per_cycle must be positive and cpi_base non-negative")
        if self.cpu_cores < 0 or self.gpu_cus < 0 or self.cus_per_l1i < 1:
            raise ConfigError("core counts must be non-negative")

    def partition_masks(self) -> tuple[int, int]:
        ways = self.llc.ways
        half = ways // 2
        if self.cpu_way_mask is None and self.gpu_way_mask is None:
            return full_mask(half), full_mask(ways) & ~full_mask(half)
        for m in (self.cpu_way_mask, self.gpu_way_mask):
            if m is not None and any(not 0 <= w < ways for w in m):
                raise ConfigError("way mask index outside 0..%d" % (ways - 1))
        cpu = mask_from_ways(self.cpu_way_mask) if self.cpu_way_mask is not None else None
        gpu = mask_from_ways(self.gpu_way_mask) if self.gpu_way_mask is not None else None
        if cpu is None:
            cpu = full_mask(ways) & ~gpu
        if gpu is None:
            gpu = full_mask(ways) & ~cpu
        return cpu, gpu

    def reuse_geometry(self) -> ReuseGeometry:
        r, llc = self.reuse, self.llc
        tag_bytes = r.tag_bytes if r.tag_bytes is not None else llc.size_bytes
        data_bytes = r.data_bytes if r.data_bytes is not None else tag_bytes // 2
        tag_ways = r.tag_ways if r.tag_ways is not None else llc.ways
        return ReuseGeometry.from_sizes(tag_bytes, data_bytes, tag_ways, llc.line_bytes, r.hysteresis)

    @property
    def line_bytes(self) -> int:
        return self.llc.line_bytes

    def with_scheme(self, scheme) -> "HierarchyConfig":
        return replace(self, llc_scheme=Scheme(scheme))

    # JSON ----------------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        return _plain(d)

    @classmethod
    def from_dict(cls, doc: dict) -> "HierarchyConfig":
        """Build a config from a (partial) JSON document; missing fields keep defaults."""
        if not isinstance(doc, dict):
            raise ConfigError("hierarchy config must be a JSON object")
        base = cls()
        kwargs = {}
        names = {f.name: f for f in fields(cls)}
        for key, value in doc.items():
            if key not in names:
                raise ConfigError("unknown config field %r" % key)
            current = getattr(base, key)
            try:
                if isinstance(current, (LevelConfig, ReuseConfig, Latencies)):
                    if not isinstance(value, dict):
                        raise ConfigError("field %r must be an object" % key)
                    sub = {f.name for f in fields(current)}
                    unknown = sorted(set(value) - sub)
                    if unknown:
                        raise ConfigError("unknown field %r in %r" % (unknown[0], key))
                    kwargs[key] = replace(current, **value)
                elif key in ("cpu_way_mask", "gpu_way_mask"):
                    if isinstance(value, int) and not isinstance(value, bool):
                        value = mask_ways(value)
                    kwargs[key] = None if value is None else tuple(value)
                else:
                    kwargs[key] = value
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError("invalid value for field %r: %s" % (key, e)) from None
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError("invalid config: %s" % e) from None


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


class RoutedAccess(NamedTuple):
    source: str
    serviced_at: str  # L1 | L2 | LLC | DRAM
    latency_cycles: int
    dram_line_transfers: int


class LLCEvent(NamedTuple):
    source: str
    address: int
    kind: str  # "read" | "writeback"
    hit: bool


_DEPTH = {"L1": 0, "L2": 1, "LLC": 2, "DRAM": 3}

# internal request kinds seen by the shared levels
READ, STORE, WRITEBACK = "read", "store", "writeback"


class Hierarchy:
    """Mutable simulation state for one configuration."""

    def __init__(self, config: HierarchyConfig, debug: bool = False, record_llc: bool = False):
        self.config = config
        self.scheme = config.llc_scheme
        self.debug = debug
        c = config
        mk = lambda lvl, name: Cache(lvl.geometry, lvl.policy, lvl.write_mode, name, debug)
        self.cpu_l1i = [mk(c.cpu_l1i, "cpu%d.l1i" % i) for i in range(c.cpu_cores)]
        self.cpu_l1d = [mk(c.cpu_l1d, "cpu%d.l1d" % i) for i in range(c.cpu_cores)]
        if c.cpu_l2_shared:
            shared = mk(c.cpu_l2, "cpu.l2")
            self.cpu_l2 = [shared] * c.cpu_cores
        else:
            self.cpu_l2 = [mk(c.cpu_l2, "cpu%d.l2" % i) for i in range(c.cpu_cores)]
        self.gpu_l1d = [mk(c.gpu_l1d, "gpu%d.l1d" % i) for i in range(c.gpu_cus)]
        n_l1i = -(-c.gpu_cus // c.cus_per_l1i)
        self.gpu_l1i = [mk(c.gpu_l1i, "gpu.l1i%d" % i) for i in range(n_l1i)]
        self.gpu_l2 = mk(c.gpu_l2, "gpu.l2")
        if self.scheme is Scheme.REUSE_CACHE:
            self.llc = ReuseCache(c.reuse_geometry(), "llc", debug)
        else:
            g = c.llc.geometry
            self.llc = Cache(g, c.llc.policy, c.llc.write_mode, "llc", debug)
        self.cpu_mask, self.gpu_mask = c.partition_masks()
        self.stats: dict[str, SourceStats] = {}
        self.counters = {
            "dram_reads": 0, "dram_writes": 0, "bypass_transfers": 0, "llc_insertions": 0,
            "tag_hits": 0, "tag_evictions": 0, "data_evictions": 0,
        }
        self.llc_log: list[LLCEvent] | None = [] if record_llc else None
        lat = c.latency
        self._latency = {
            "L1": lat.l1,
            "L2": lat.l1 + lat.l2,
            "LLC": lat.l1 + lat.l2 + lat.llc,
            "DRAM": lat.l1 + lat.l2 + lat.llc + lat.dram,
        }
        self._bypass_latency = lat.l1 + lat.l2 + lat.dram
        self._routes = {}

    def _paths(self, source: str):
        route = self._routes.get(source)
        if route is None:
            route = self._routes[source] = self._route(source)
        return route

    def _route(self, source: str):
        idx = source_index(source)
        if is_gpu(source):
            if idx >= self.config.gpu_cus:
                raise ConfigError("source %s has no configured path (%d GPU CUs)" % (source, self.config.gpu_cus))
            return self.gpu_l1i[idx // self.config.cus_per_l1i], self.gpu_l1d[idx], self.gpu_l2
        if idx >= self.config.cpu_cores:
            raise ConfigError("source %s has no configured path (%d CPU cores)" % (source, self.config.cpu_cores))
        return self.cpu_l1i[idx], self.cpu_l1d[idx], self.cpu_l2[idx]

    def _stats(self, source: str) -> SourceStats:
        st = self.stats.get(source)
        if st is None:
            self._paths(source)
            st = self.stats[source] = SourceStats()
        return st

    # DRAM ----------------------------------------------------------------
    def _dram(self, st: SourceStats, write: bool) -> None:
        self.counters["dram_writes" if write else "dram_reads"] += 1
        st.dram_transfers += 1

    # LLC -----------------------------------------------------------------
    def _llc(self, source: str, st: SourceStats, address: int, kind: str) -> str:
        gpu = is_gpu(source)
        demand = kind != WRITEBACK
        if gpu and self.scheme is Scheme.GPU_BYPASS:
            self.counters["bypass_transfers"] += 1
            self._dram(st, write=not demand)
            if demand:
                st.llc_misses += 1
            return "DRAM"

        ls = st.levels["LLC"]
        ls.accesses += 1
        op = Op.READ if demand else Op.WRITE

        if self.scheme is Scheme.REUSE_CACHE:
            out = self.llc.access(address, op)
            hit = out.data_hit
            c = self.counters
            c["tag_hits"] += out.tag_hit
            c["tag_evictions"] += out.tag_evicted is not None
            c["data_evictions"] += len(out.data_evicted)
            c["llc_insertions"] += out.data_allocated
            if out.dram_fetch:
                ls.fetches += 1
                self._dram(st, write=False)
            for _ in range(out.dram_writebacks):
                ls.writebacks += 1
                self._dram(st, write=True)
            if out.write_through:
                ls.writethroughs += 1
                self._dram(st, write=True)
        else:
            mask = None
            if self.scheme is Scheme.STATIC_PARTITION:
                mask = self.gpu_mask if gpu else self.cpu_mask
            out = self.llc.access(address, op, mask)
            hit = out.hit
            if not hit:
                self.counters["llc_insertions"] += 1
                if demand:
                    ls.fetches += 1
                    self._dram(st, write=False)
            if out.evicted is not None and out.evicted[1]:
                ls.writebacks += 1
                self._dram(st, write=True)
            if out.write_through:
                ls.writethroughs += 1
                self._dram(st, write=True)

        if hit:
            ls.hits += 1
        else:
            ls.misses += 1
            if demand:
                st.llc_misses += 1
        if self.llc_log is not None:
            self.llc_log.append(LLCEvent(source, address, kind, hit))
        return "LLC" if hit else "DRAM"

    # private levels --------------------------------------------------------
    def _l2(self, source, st, l2: Cache, address: int, kind: str) -> str:
        ls = st.levels["L2"]
        ls.accesses += 1
        out = l2.access(address, Op.READ if kind == READ else Op.WRITE)
        where = "L2"
        if out.hit:
            ls.hits += 1
        else:
            ls.misses += 1
            if kind != WRITEBACK:
                # stores from a writethrough L1 are partial lines and need a fill too
                ls.fetches += 1
                where = self._llc(source, st, address, READ)
        if out.write_through:
            ls.writethroughs += 1
            self._llc(source, st, address, WRITEBACK)
        if out.evicted is not None and out.evicted[1]:
            ls.writebacks += 1
            self._llc(source, st, out.evicted[0], WRITEBACK)
        return where

    def access(self, rec: TraceRecord) -> RoutedAccess:
        if rec.address >= self.config.dram_bytes:
            raise ConfigError("address %#x beyond the %d-byte DRAM" % (rec.address, self.config.dram_bytes))
        source = rec.source
        st = self._stats(source)
        l1i, l1d, l2 = self._paths(source)
        before = st.dram_transfers

        if rec.op is Op.IFETCH:
            l1, ls = l1i, st.levels["L1I"]
        else:
            l1, ls = l1d, st.levels["L1D"]
        ls.accesses += 1
        out = l1.access(rec.address, rec.op)
        where = "L1"
        if out.hit:
            ls.hits += 1
        else:
            ls.misses += 1
            if not out.write_through:
                ls.fetches += 1
                where = self._l2(source, st, l2, rec.address, READ)
        if out.write_through:
            ls.writethroughs += 1
            w = self._l2(source, st, l2, rec.address, STORE)
            if _DEPTH[w] > _DEPTH[where]:
                where = w
        if out.evicted is not None and out.evicted[1]:
            ls.writebacks += 1
            self._l2(source, st, l2, out.evicted[0], WRITEBACK)

        if where == "DRAM" and is_gpu(source) and self.scheme is Scheme.GPU_BYPASS:
            latency = self._bypass_latency
        else:
            latency = self._latency[where]
        st.records += 1
        st.instructions += rec.icount
        st.cycles += rec.icount * self.config.cpi_base + latency
        st.serviced[where] += 1
        return RoutedAccess(source, where, latency, st.dram_transfers - before)

    def report(self, seed: int | None = None) -> MetricsReport:
        return MetricsReport(
            scheme=self.scheme.value,
            line_bytes=self.config.line_bytes,
            bus_bytes_per_cycle=self.config.bus_bytes_per_cycle,
            sources=dict(sorted(self.stats.items())),
            counters=dict(self.counters),
            seed=seed,
            config=self.config.to_dict(),
        )


def simulate(trace, config: HierarchyConfig, *, seed: int | None = None, log: list | None = None,
             debug: bool = False) -> MetricsReport:
    """Run ``trace`` through a fresh hierarchy and return the counter report.

    When ``log`` is a list, one :class:`RoutedAccess` per record is appended.
    Counter identities are checked before returning.
    """
    if not trace:
        raise ConfigError("cannot simulate an empty trace")
    h = Hierarchy(config, debug=debug)
    if log is None:
        for rec in trace:
            h.access(rec)
    else:
        for rec in trace:
            log.append(h.access(rec))
    report = h.report(seed)
    check_identities(report)
    return report


def shared_lines(trace, line_bytes: int = 64) -> set:
    """Line addresses touched by both CPU and GPU sources."""
    cpu, gpu = set(), set()
    for rec in trace:
        (gpu if is_gpu(rec.source) else cpu).add(rec.address // line_bytes)
    return cpu & gpu
