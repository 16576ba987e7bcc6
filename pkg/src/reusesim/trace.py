"""Trace records, the text trace format, and synthetic workload generators.

A trace is a single total order of memory accesses issued by the CPU cores
(``cpu0``, ``cpu1``) and the GPU compute units (``gpu0`` .. ``gpu3``).  One
record per line::

    # source op address icount
    cpu0 R 0x1040 3
    gpu2 W 0xffffffffffff 1

``icount`` is the number of instructions the source executed since its
previous record, including the memory instruction itself.
"""

from __future__ import annotations

import enum
import gzip
import io
import json
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, TraceParseError

ADDRESS_BITS = 48
ADDRESS_LIMIT = 1 << ADDRESS_BITS

_SOURCE_RE = re.compile(r"^(cpu|gpu)(\d+)$")


class Op(str, enum.Enum):
    READ = "R"
    WRITE = "W"
    IFETCH = "I"


def is_gpu(source: str) -> bool:
    return source.startswith("gpu")


def source_index(source: str) -> int:
    """Core / compute-unit number of a source token (``gpu3`` -> 3)."""
    m = _SOURCE_RE.match(source)
    if m is None:
        raise ConfigError("unknown source %r" % source)
    return int(m.group(2))


def valid_source(source: str) -> bool:
    return _SOURCE_RE.match(source) is not None


@dataclass(frozen=True)
class TraceRecord:
    source: str
    op: Op
    address: int
    icount: int = 1

    def __post_init__(self):
        if not valid_source(self.source):
            raise ConfigError("unknown source %r" % self.source)
        if not 0 <= self.address < ADDRESS_LIMIT:
            raise ConfigError("address %#x outside the 48-bit range" % self.address)
        if self.icount < 1:
            raise ConfigError("icount must be >= 1, got %d" % self.icount)

    def format(self) -> str:
        return "%s %s %#x %d" % (self.source, self.op.value, self.address, self.icount)


_OPS = {op.value: op for op in Op}


def parse_trace_line(line: str, lineno: int | None = None) -> TraceRecord:
    """Decode one ``<source> <op> <hex-address> <icount>`` line."""
    parts = line.split()
    if len(parts) != 4:
        raise TraceParseError("expected 4 fields, got %d" % len(parts), lineno, "record")
    source, op_tok, addr_tok, icount_tok = parts

    if not valid_source(source):
        raise TraceParseError("unknown source %r" % source, lineno, "source")
    op = _OPS.get(op_tok)
    if op is None:
        raise TraceParseError("unknown op %r" % op_tok, lineno, "op")
    if not addr_tok.lower().startswith("0x"):
        raise TraceParseError("address must be 0x-prefixed hex: %r" % addr_tok, lineno, "address")
    try:
        address = int(addr_tok[2:], 16)
    except ValueError:
        raise TraceParseError("non-hex address %r" % addr_tok, lineno, "address") from None
    if address >= ADDRESS_LIMIT:
        raise TraceParseError("address %s exceeds 48 bits" % addr_tok, lineno, "address")
    try:
        icount = int(icount_tok, 10)
    except ValueError:
        raise TraceParseError("icount is not an integer: %r" % icount_tok, lineno, "icount") from None
    if icount < 1:
        raise TraceParseError("icount must be >= 1, got %d" % icount, lineno, "icount")
    return TraceRecord(source, op, address, icount)


def parse_trace(lines: Iterable[str]) -> Iterator[TraceRecord]:
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield parse_trace_line(stripped, lineno)


class _ClosingGzip(gzip.GzipFile):
    """Gzip writer with an empty name and zero mtime in the header."""

    def __init__(self, path):
        self._raw = open(path, "wb")
        super().__init__(filename="", mode="wb", fileobj=self._raw, mtime=0)

    def close(self):
        try:
            super().close()
        finally:
            self._raw.close()


def _open_text(path, mode):
    path = Path(path)
    if path.suffix == ".gz":
        # mtime=0 keeps compressed output byte-identical across runs
        if "w" in mode:
            return io.TextIOWrapper(_ClosingGzip(path), encoding="utf-8", newline="\n")
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8", newline="\n" if "w" in mode else None)


def read_trace(path) -> list[TraceRecord]:
    """Read a trace file (plain or ``.gz``)."""
    with _open_text(path, "r") as fh:
        return list(parse_trace(fh))


def write_trace(path, records: Iterable[TraceRecord], header: str | None = None) -> int:
    n = 0
    with _open_text(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
        for rec in records:
            fh.write(rec.format())
            fh.write("\n")
            n += 1
    return n


class GeneratorKind(str, enum.Enum):
    STREAMING = "Streaming"
    WORKING_SET = "WorkingSet"
    STRIDED_BLOCKED = "StridedBlocked"
    POINTER_CHASE = "PointerChase"


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic access stream.

    ``source`` and ``line_bytes`` extend the basic parameter set: the first
    names the issuing core, the second sets the alignment granule used by the
    line-oriented generators.
    """

    kind: GeneratorKind
    base_address: int = 0
    footprint_bytes: int = 64 * 1024
    record_count: int = 1000
    stride_bytes: int = 64
    reuse_factor: int = 1
    write_fraction: float = 0.0
    seed: int = 0
    icount_per_access: int = 1
    source: str = "cpu0"
    line_bytes: int = 64

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        self.validate()

    def validate(self):
        if self.line_bytes <= 0 or self.line_bytes & (self.line_bytes - 1):
            raise ConfigError("line_bytes must be a power of two")
        if self.footprint_bytes < self.line_bytes:
            raise ConfigError("footprint_bytes must be >= line size (%d)" % self.line_bytes)
        if self.record_count < 1:
            raise ConfigError("record_count must be positive")
        if self.base_address < 0 or self.base_address + self.footprint_bytes > ADDRESS_LIMIT:
            raise ConfigError("base_address + footprint_bytes exceeds the 48-bit range")
        if self.kind in (GeneratorKind.STREAMING, GeneratorKind.STRIDED_BLOCKED) and self.stride_bytes < 1:
            raise ConfigError("stride_bytes must be positive")
        if self.reuse_factor < 1:
            raise ConfigError("reuse_factor must be positive")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ConfigError("write_fraction must lie in [0, 1]")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.icount_per_access < 1:
            raise ConfigError("icount_per_access must be positive")
        if not valid_source(self.source):
            raise ConfigError("unknown source %r" % self.source)

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError("unknown generator field %r" % unknown[0])
        if "kind" not in doc:
            raise ConfigError("generator spec is missing field 'kind'")
        try:
            kind = GeneratorKind(doc["kind"])
        except ValueError:
            raise ConfigError("invalid value for field 'kind': %r" % doc["kind"]) from None
        kwargs = dict(doc, kind=kind)
        for name in known - {"kind", "source", "write_fraction"}:
            if name in kwargs and (not isinstance(kwargs[name], int) or isinstance(kwargs[name], bool)):
                raise ConfigError("field %r must be an integer" % name)
        if "write_fraction" in kwargs and not isinstance(kwargs["write_fraction"], (int, float)):
            raise ConfigError("field 'write_fraction' must be a number")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def _ops(spec: GeneratorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec.write_fraction <= 0.0:
        return np.zeros(n, dtype=bool)
    return rng.random(n) < spec.write_fraction


def _offsets(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.record_count
    i = np.arange(n, dtype=np.int64)
    nlines = spec.footprint_bytes // spec.line_bytes

    if spec.kind is GeneratorKind.STREAMING:
        return (i * spec.stride_bytes) % spec.footprint_bytes

    if spec.kind is GeneratorKind.WORKING_SET:
        return rng.integers(0, nlines, size=n, dtype=np.int64) * spec.line_bytes

    if spec.kind is GeneratorKind.STRIDED_BLOCKED:
        # reuse_factor blocks, each swept reuse_factor times before advancing
        block = spec.footprint_bytes // spec.reuse_factor // spec.stride_bytes * spec.stride_bytes
        block = max(spec.stride_bytes, block)
        per_sweep = block // spec.stride_bytes
        per_block = per_sweep * spec.reuse_factor
        nblocks = -(-spec.footprint_bytes // block)
        block_idx = (i // per_block) % nblocks
        within = (i % per_sweep) * spec.stride_bytes
        off = block_idx * block + within
        return off % spec.footprint_bytes

    if spec.kind is GeneratorKind.POINTER_CHASE:
        cycle = rng.permutation(nlines).astype(np.int64)
        return cycle[i % nlines] * spec.line_bytes

    raise ConfigError("unknown generator kind %r" % spec.kind)


def generate(spec: GeneratorSpec) -> list[TraceRecord]:
    """Synthesize ``spec.record_count`` records; a pure function of ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    offsets = _offsets(spec, rng)
    writes = _ops(spec, rng, spec.record_count)
    base, src, ic = spec.base_address, spec.source, spec.icount_per_access
    return [
        TraceRecord(src, Op.WRITE if w else Op.READ, base + int(off), ic)
        for off, w in zip(offsets.tolist(), writes.tolist())
    ]


def interleave(
    streams: Sequence[Sequence[TraceRecord]],
    weights: Sequence[int] | None = None,
    seed: int = 0,
) -> list[TraceRecord]:
    """Weighted round-robin merge: ``weights[i]`` records from stream i per turn.

    Exhausted streams are skipped.  The merge is deterministic; ``seed`` is
    accepted for manifest symmetry and echoed by callers.
    """
    if not streams:
        raise ConfigError("interleave needs at least one stream")
    if weights is None:
        weights = default_weights(streams)
    if len(weights) != len(streams):
        raise ConfigError("weights and streams differ in length")
    if any(w < 1 for w in weights):
        raise ConfigError("weights must be positive integers")
    if not any(len(s) for s in streams):
        raise ConfigError("all streams are empty")

    pos = [0] * len(streams)
    lens = [len(s) for s in streams]
    out: list[TraceRecord] = []
    remaining = sum(lens)
    while remaining:
        for k, stream in enumerate(streams):
            take = min(weights[k], lens[k] - pos[k])
            if take > 0:
                out.extend(stream[pos[k]:pos[k] + take])
                pos[k] += take
                remaining -= take
    return out


CPU_WEIGHT = 1
GPU_WEIGHT = 4


def default_weights(streams: Sequence[Sequence[TraceRecord]]) -> list[int]:
    """1 for CPU streams, 4 for GPU streams (keyed on each stream's first record)."""
    return [GPU_WEIGHT if s and is_gpu(s[0].source) else CPU_WEIGHT for s in streams]


@dataclass(frozen=True)
class MixSpec:
    """Several generator specs merged by :func:`interleave`."""

    streams: tuple
    weights: tuple | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "MixSpec":
        unknown = sorted(set(doc) - {"streams", "weights", "seed"})
        if unknown:
            raise ConfigError("unknown mix field %r" % unknown[0])
        raw = doc.get("streams")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("field 'streams' must be a non-empty list")
        specs = []
        for k, s in enumerate(raw):
            try:
                specs.append(GeneratorSpec.from_dict(s))
            except ConfigError as e:
                raise ConfigError("streams[%d]: %s" % (k, e)) from None
        weights = doc.get("weights")
        if weights is not None:
            weights = tuple(weights)
        return cls(tuple(specs), weights, int(doc.get("seed", 0)))

    def to_dict(self) -> dict:
        d = {"streams": [s.to_dict() for s in self.streams], "seed": self.seed}
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d

    def generate(self) -> list[TraceRecord]:
        return interleave([generate(s) for s in self.streams], self.weights, self.seed)


def load_workload(doc: dict) -> list[TraceRecord]:
    """Build a trace from a generator-spec or mix JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("workload spec must be a JSON object")
    if "streams" in doc:
        return MixSpec.from_dict(doc).generate()
    return generate(GeneratorSpec.from_dict(doc))


def data_path(name: str):
    """Path of a file shipped in the package's ``data`` directory."""
    from importlib.resources import files
    return files("reusesim").joinpath("data", name)


def reference_trace() -> list[TraceRecord]:
    """The deterministic cache-friendly CPU + streaming GPU reference mix."""
    return read_trace(data_path("reference_mix.trace.gz"))


def load_workload_file(path) -> list[TraceRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON in %s: %s" % (path, e)) from None
    return load_workload(doc)


MB = 1024 * 1024
KB = 1024

# One generator per benchmark class; the classifier maps each to its class
# against the default 1MB LLC.
PRESETS = {
    # Queens / SHA: a small, heavily reused footprint
    "cache_friendly": GeneratorSpec(
        GeneratorKind.WORKING_SET, footprint_bytes=64 * KB, record_count=40_000, seed=1,
    ),
    # blocked matmul / convolution: blocks of half the LLC swept repeatedly
    "cache_sensitive": GeneratorSpec(
        GeneratorKind.STRIDED_BLOCKED, footprint_bytes=4 * MB, stride_bytes=64,
        reuse_factor=8, record_count=65_536, seed=2,
    ),
    # Histogram: every line touched once
    "streaming": GeneratorSpec(
        GeneratorKind.STREAMING, footprint_bytes=64 * MB, stride_bytes=64,
        record_count=40_000, seed=3, source="gpu0",
    ),
    # BFS: a random walk over four LLCs worth of lines
    "large_working_set": GeneratorSpec(
        GeneratorKind.POINTER_CHASE, footprint_bytes=4 * MB, record_count=98_304, seed=4,
    ),
}

BENCHMARK_PRESET = {
    "queens": "cache_friendly",
    "sha": "cache_friendly",
    "mini-nbody": "cache_friendly",
    "matmul": "cache_sensitive",
    "convolution": "cache_sensitive",
    "floyd-warshall": "cache_sensitive",
    "recursive-gaussian": "cache_sensitive",
    "histogram": "streaming",
    "bfs": "large_working_set",
}
