"""Counters, derived metrics (MPKI, bus utilization, IPC proxy) and reports.

A :class:`MetricsReport` holds raw counters only; every derived number is
recomputed from them, so a report parsed back from JSON or CSV yields the
same metrics.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import LogicError, MetricError

LEVELS = ("L1I", "L1D", "L2", "LLC")
LEVEL_COUNTERS = ("accesses", "hits", "misses", "fetches", "writebacks", "writethroughs")
SERVICE_LEVELS = ("L1", "L2", "LLC", "DRAM")
SOURCE_COUNTERS = ("records", "instructions", "cycles", "llc_misses", "dram_transfers")
GLOBAL_COUNTERS = (
    "dram_reads", "dram_writes", "bypass_transfers", "llc_insertions",
    "tag_hits", "tag_evictions", "data_evictions",
)


def mpki(misses: int, instructions: int) -> float:
    """Misses per thousand instructions."""
    if instructions <= 0:
        raise MetricError("MPKI undefined for %d instructions" % instructions)
    return misses * 1000 / instructions


def bus_utilization(dram_line_transfers: int, total_cycles: int, line_bytes: int,
                    bus_bytes_per_cycle: float) -> float:
    """Fraction of cycles the DRAM data bus is busy, saturating at 1."""
    if total_cycles <= 0:
        raise MetricError("bus utilization undefined for %d cycles" % total_cycles)
    busy = dram_line_transfers * (line_bytes / bus_bytes_per_cycle)
    return min(1.0, busy / total_cycles)


def ipc_proxy(instructions: int, cycles: int) -> float:
    if cycles <= 0:
        raise MetricError("IPC undefined for %d cycles" % cycles)
    return instructions / cycles


class LevelStats:
    __slots__ = LEVEL_COUNTERS

    def __init__(self, **kw):
        for name in LEVEL_COUNTERS:
            setattr(self, name, kw.get(name, 0))

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in LEVEL_COUNTERS}


@dataclass
class SourceStats:
    records: int = 0
    instructions: int = 0
    cycles: int = 0
    llc_misses: int = 0  # demand requests that left the L2 and were served by DRAM
    dram_transfers: int = 0
    serviced: dict = field(default_factory=lambda: dict.fromkeys(SERVICE_LEVELS, 0))
    levels: dict = field(default_factory=lambda: {lvl: LevelStats() for lvl in LEVELS})

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in SOURCE_COUNTERS}
        d["serviced"] = dict(self.serviced)
        d["levels"] = {lvl: self.levels[lvl].as_dict() for lvl in LEVELS}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SourceStats":
        st = cls(**{name: d[name] for name in SOURCE_COUNTERS})
        st.serviced = {lvl: d["serviced"][lvl] for lvl in SERVICE_LEVELS}
        st.levels = {lvl: LevelStats(**d["levels"][lvl]) for lvl in LEVELS}
        return st

    def equal_counters(self, other: "SourceStats") -> bool:
        return self.as_dict() == other.as_dict()


@dataclass
class MetricsReport:
    scheme: str
    line_bytes: int
    bus_bytes_per_cycle: float
    sources: dict = field(default_factory=dict)
    counters: dict = field(default_factory=lambda: dict.fromkeys(GLOBAL_COUNTERS, 0))
    seed: int | None = None
    config: dict = field(default_factory=dict)

    # derived -------------------------------------------------------------
    @property
    def dram_line_transfers(self) -> int:
        return self.counters["dram_reads"] + self.counters["dram_writes"]

    @property
    def total_cycles(self) -> int:
        return max((s.cycles for s in self.sources.values()), default=0)

    @property
    def bus_utilization(self) -> float:
        return bus_utilization(self.dram_line_transfers, self.total_cycles,
                               self.line_bytes, self.bus_bytes_per_cycle)

    def mpki(self, source: str) -> float:
        s = self.sources[source]
        return mpki(s.llc_misses, s.instructions)

    def ipc(self, source: str) -> float:
        s = self.sources[source]
        return ipc_proxy(s.instructions, s.cycles)

    def _group(self, prefix):
        return [k for k in self.sources if k.startswith(prefix)]

    def throughput(self, prefix: str) -> float:
        """Sum of per-source IPC proxies over ``cpu*`` or ``gpu*`` sources."""
        return sum(self.ipc(k) for k in self._group(prefix))

    def group_mpki(self, prefix: str) -> float:
        srcs = [self.sources[k] for k in self._group(prefix)]
        instr = sum(s.instructions for s in srcs)
        if not instr:
            return 0.0
        return mpki(sum(s.llc_misses for s in srcs), instr)

    def level_total(self, level: str, counter: str, prefix: str = "") -> int:
        return sum(getattr(s.levels[level], counter)
                   for k, s in self.sources.items() if k.startswith(prefix))

    def derived(self) -> dict:
        per_source = {
            k: {"mpki": self.mpki(k), "ipc": self.ipc(k)} for k in self.sources
        }
        return {
            "sources": per_source,
            "dram_line_transfers": self.dram_line_transfers,
            "total_cycles": self.total_cycles,
            "bus_utilization": self.bus_utilization,
            "cpu_ipc": self.throughput("cpu"),
            "gpu_ipc": self.throughput("gpu"),
            "cpu_mpki": self.group_mpki("cpu"),
            "gpu_mpki": self.group_mpki("gpu"),
        }

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "config": self.config,
            "raw": {
                "line_bytes": self.line_bytes,
                "bus_bytes_per_cycle": self.bus_bytes_per_cycle,
                "global": dict(self.counters),
                "sources": {k: s.as_dict() for k, s in self.sources.items()},
            },
            "derived": self.derived(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        raw = d["raw"]
        return cls(
            scheme=d["scheme"],
            line_bytes=raw["line_bytes"],
            bus_bytes_per_cycle=raw["bus_bytes_per_cycle"],
            sources={k: SourceStats.from_dict(v) for k, v in sorted(raw["sources"].items())},
            counters={name: raw["global"][name] for name in GLOBAL_COUNTERS},
            seed=d.get("seed"),
            config=d.get("config", {}),
        )


SOURCE_METRICS = (
    list(SOURCE_COUNTERS)
    + ["serviced.%s" % lvl for lvl in SERVICE_LEVELS]
    + ["%s.%s" % (lvl, c) for lvl in LEVELS for c in LEVEL_COUNTERS]
    + ["mpki", "ipc"]
)
GLOBAL_METRICS = (
    ["scheme", "seed", "line_bytes", "bus_bytes_per_cycle"]
    + list(GLOBAL_COUNTERS)
    + ["dram_line_transfers", "total_cycles", "bus_utilization", "cpu_ipc", "gpu_ipc",
       "cpu_mpki", "gpu_mpki"]
)


def _source_value(report, key, s, metric):
    if metric in SOURCE_COUNTERS:
        return getattr(s, metric)
    if metric == "mpki":
        return report.mpki(key)
    if metric == "ipc":
        return report.ipc(key)
    head, tail = metric.split(".")
    if head == "serviced":
        return s.serviced[tail]
    return getattr(s.levels[head], tail)


def _global_value(report, metric, derived):
    if metric in ("scheme", "seed", "line_bytes", "bus_bytes_per_cycle"):
        return getattr(report, metric)
    if metric in GLOBAL_COUNTERS:
        return report.counters[metric]
    return derived[metric]


def _fmt(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def emit_report(report: MetricsReport, fmt: str = "json") -> str:
    """Serialize a report as canonical JSON or as ``scope,metric,value`` CSV."""
    if fmt == "json":
        return dump_json(report.to_dict())
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "metric", "value"])
        for key, s in report.sources.items():
            for metric in SOURCE_METRICS:
                w.writerow([key, metric, _fmt(_source_value(report, key, s, metric))])
        derived = report.derived()
        for metric in GLOBAL_METRICS:
            w.writerow(["global", metric, _fmt(_global_value(report, metric, derived))])
        return buf.getvalue()
    raise ValueError("unknown report format %r" % fmt)


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_report_json(text: str) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(text))


def _num(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_report_csv(text: str) -> MetricsReport:
    """Rebuild the raw counters of a report from its CSV form (config is not kept)."""
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["scope", "metric", "value"]:
        raise ValueError("not a report CSV")
    glob, per = {}, {}
    for scope, metric, value in rows[1:]:
        if scope == "global":
            glob[metric] = value
        else:
            per.setdefault(scope, {})[metric] = value
    sources = {}
    for key, vals in per.items():
        st = SourceStats(**{name: int(vals[name]) for name in SOURCE_COUNTERS})
        st.serviced = {lvl: int(vals["serviced." + lvl]) for lvl in SERVICE_LEVELS}
        st.levels = {
            lvl: LevelStats(**{c: int(vals["%s.%s" % (lvl, c)]) for c in LEVEL_COUNTERS})
            for lvl in LEVELS
        }
        sources[key] = st
    return MetricsReport(
        scheme=glob["scheme"],
        line_bytes=int(glob["line_bytes"]),
        bus_bytes_per_cycle=_num(glob["bus_bytes_per_cycle"]),
        sources=dict(sorted(sources.items())),
        counters={name: int(glob[name]) for name in GLOBAL_COUNTERS},
        seed=_num(glob["seed"]),
    )


def check_identities(report: MetricsReport) -> None:
    """Raise :class:`LogicError` if any counter reconciliation fails.

    * hits + misses == accesses at every (source, level);
    * a level's accesses equal the downstream requests of the level above;
    * DRAM transfers equal LLC fetches + LLC writebacks + LLC writethroughs
      + bypass transfers;
    * every record is serviced at exactly one level.
    """
    bad = []
    down = ("fetches", "writebacks", "writethroughs")
    for key, s in report.sources.items():
        for lvl in LEVELS:
            st = s.levels[lvl]
            if st.hits + st.misses != st.accesses:
                bad.append("%s %s: hits+misses != accesses" % (key, lvl))
        from_l1 = sum(getattr(s.levels[lvl], c) for lvl in ("L1I", "L1D") for c in down)
        if s.levels["L2"].accesses != from_l1:
            bad.append("%s: L2 accesses != L1 downstream requests" % key)
        if sum(s.serviced.values()) != s.records:
            bad.append("%s: serviced counts != records" % key)
        if s.levels["L1I"].accesses + s.levels["L1D"].accesses != s.records:
            bad.append("%s: L1 accesses != records" % key)
    from_l2 = sum(report.level_total("L2", c) for c in down)
    llc_acc = report.level_total("LLC", "accesses")
    if llc_acc + report.counters["bypass_transfers"] != from_l2:
        bad.append("LLC accesses + bypass != L2 downstream requests")
    llc_out = sum(report.level_total("LLC", c) for c in down)
    if report.dram_line_transfers != llc_out + report.counters["bypass_transfers"]:
        bad.append("DRAM transfers != LLC fetches+writebacks+writethroughs + bypass")
    if report.dram_line_transfers != sum(s.dram_transfers for s in report.sources.values()):
        bad.append("DRAM transfers != per-source DRAM transfers")
    if report.total_cycles > 0 and not 0.0 <= report.bus_utilization <= 1.0:
        bad.append("bus utilization outside [0, 1]")
    if bad:
        raise LogicError("counter identities violated: " + "; ".join(bad))
