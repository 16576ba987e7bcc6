import json

import pytest
from hypothesis import given, settings, strategies as st

from oracles import round_robin_positions
from reusesim.errors import ConfigError, TraceParseError
from reusesim.trace import (ADDRESS_LIMIT, PRESETS, GeneratorKind, GeneratorSpec, MixSpec, Op,
                            TraceRecord, default_weights, generate, interleave, load_workload,
                            parse_trace, parse_trace_line, read_trace, write_trace)


def test_parse_basic():
    assert parse_trace_line("cpu0 R 0x1040 3") == TraceRecord("cpu0", Op.READ, 0x1040, 3)


def test_parse_48bit_boundary():
    rec = parse_trace_line("gpu2 W 0xFFFFFFFFFFFF 1")
    assert rec == TraceRecord("gpu2", Op.WRITE, 2**48 - 1, 1)


def test_parse_ifetch():
    assert parse_trace_line("cpu1 I 0x0 1").op is Op.IFETCH


@pytest.mark.parametrize("line, field, msg", [
    ("cpu0 X 0x10 1", "op", "unknown op"),
    ("cpu0 R 0x10", "record", "expected 4 fields"),
    ("cpu0 R 0x10 1 9", "record", "expected 4 fields"),
    ("npu0 R 0x10 1", "source", "unknown source"),
    ("cpu0 R 1040 1", "address", "0x-prefixed"),
    ("cpu0 R 0xZZ 1", "address", "non-hex"),
    ("cpu0 R 0x1000000000000 1", "address", "48 bits"),
    ("cpu0 R 0x10 0", "icount", "icount must be >= 1"),
    ("cpu0 R 0x10 two", "icount", "not an integer"),
])
def test_parse_errors(line, field, msg):
    with pytest.raises(TraceParseError) as ei:
        parse_trace_line(line, lineno=7)
    assert ei.value.field == field
    assert ei.value.lineno == 7
    assert msg in str(ei.value)
    assert "line 7" in str(ei.value)


def test_parse_trace_skips_comments_and_counts_lines():
    lines = ["# header", "", "cpu0 R 0x40 1", "cpu0 Q 0x40 1"]
    with pytest.raises(TraceParseError) as ei:
        list(parse_trace(lines))
    assert ei.value.lineno == 4


@pytest.mark.parametrize("suffix", [".trace", ".trace.gz"])
def test_file_round_trip(tmp_path, suffix):
    recs = generate(GeneratorSpec("WorkingSet", footprint_bytes=4096, record_count=50,
                                  write_fraction=0.5, seed=3, source="gpu1"))
    path = tmp_path / ("t" + suffix)
    assert write_trace(path, recs, header="demo\nsecond") == 50
    assert read_trace(path) == recs


def test_gz_output_is_reproducible(tmp_path):
    recs = generate(GeneratorSpec("Streaming", record_count=20))
    write_trace(tmp_path / "a.gz", recs)
    write_trace(tmp_path / "b.gz", recs)
    assert (tmp_path / "a.gz").read_bytes() == (tmp_path / "b.gz").read_bytes()


def addrs(spec):
    return [r.address for r in generate(spec)]


def test_streaming_stride():
    assert addrs(GeneratorSpec("Streaming", base_address=0, stride_bytes=64, record_count=4)) == [0, 64, 128, 192]


def test_streaming_wraps_at_footprint():
    spec = GeneratorSpec("Streaming", base_address=0, footprint_bytes=128, stride_bytes=64, record_count=3)
    assert addrs(spec) == [0, 64, 0]


def test_working_set_range_and_alignment():
    spec = GeneratorSpec("WorkingSet", footprint_bytes=4096, record_count=10_000, seed=7)
    out = addrs(spec)
    assert len(out) == 10_000
    assert all(0 <= a < 4096 and a % 64 == 0 for a in out)
    # uniform over 64 lines: every line shows up
    assert len(set(out)) == 64


def test_strided_blocked_sweeps_block_before_advancing():
    spec = GeneratorSpec("StridedBlocked", footprint_bytes=1024, stride_bytes=64,
                         reuse_factor=2, record_count=40)
    out = addrs(spec)
    block = list(range(0, 512, 64))
    assert out[:16] == block * 2
    assert out[16:32] == [a + 512 for a in block] * 2
    assert out[32:40] == block


def test_pointer_chase_is_a_fixed_cycle():
    spec = GeneratorSpec("PointerChase", footprint_bytes=64 * 32, record_count=96, seed=5)
    out = addrs(spec)
    first = out[:32]
    assert sorted(first) == list(range(0, 64 * 32, 64))
    assert out[32:64] == first and out[64:] == first
    assert first != sorted(first)


def test_write_fraction_extremes():
    assert all(r.op is Op.WRITE for r in generate(GeneratorSpec("Streaming", write_fraction=1.0, record_count=20)))
    assert all(r.op is Op.READ for r in generate(GeneratorSpec("Streaming", write_fraction=0.0, record_count=20)))


def test_record_fields_from_spec():
    r = generate(GeneratorSpec("Streaming", record_count=1, icount_per_access=5, source="gpu3",
                               base_address=0x4000))[0]
    assert (r.source, r.address, r.icount) == ("gpu3", 0x4000, 5)


@pytest.mark.parametrize("kw", [
    dict(footprint_bytes=32),
    dict(record_count=0),
    dict(write_fraction=1.5),
    dict(stride_bytes=0),
    dict(reuse_factor=0),
    dict(seed=-1),
    dict(seed=1 << 64),
    dict(icount_per_access=0),
    dict(base_address=ADDRESS_LIMIT - 64, footprint_bytes=128),
    dict(source="tpu0"),
])
def test_spec_invariant_violations(kw):
    with pytest.raises(ConfigError):
        GeneratorSpec("Streaming", **kw)


spec_strategy = st.builds(
    GeneratorSpec,
    kind=st.sampled_from(list(GeneratorKind)),
    base_address=st.integers(0, 1 << 20).map(lambda x: x * 64),
    footprint_bytes=st.integers(1, 256).map(lambda x: x * 64),
    record_count=st.integers(1, 300),
    stride_bytes=st.sampled_from([64, 128, 192, 256]),
    reuse_factor=st.integers(1, 8),
    write_fraction=st.floats(0, 1),
    seed=st.integers(0, 2**64 - 1),
)


@settings(max_examples=150, deadline=None)
@given(spec_strategy)
def test_generate_properties(spec):
    a = generate(spec)
    assert a == generate(spec)  # pure
    assert len(a) == spec.record_count
    for r in a:
        assert spec.base_address <= r.address < spec.base_address + spec.footprint_bytes
        # stride is a multiple of the line size and base is aligned
        assert r.address % spec.line_bytes == 0


def test_generator_spec_from_json_field_names():
    doc = json.loads('{"kind": "Streaming", "base_address": 0, "footprint_bytes": 4096, '
                     '"record_count": 4, "stride_bytes": 64, "reuse_factor": 1, '
                     '"write_fraction": 0.0, "seed": 9, "icount_per_access": 2}')
    spec = GeneratorSpec.from_dict(doc)
    assert spec.seed == 9 and spec.icount_per_access == 2
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("doc, needle", [
    ({"kind": "Streaming", "footprnt_bytes": 4096}, "footprnt_bytes"),
    ({"footprint_bytes": 4096}, "kind"),
    ({"kind": "Random"}, "kind"),
    ({"kind": "Streaming", "record_count": "ten"}, "record_count"),
])
def test_generator_spec_bad_json(doc, needle):
    with pytest.raises(ConfigError, match=needle):
        GeneratorSpec.from_dict(doc)


def _recs(tag, n, source="cpu0"):
    return [TraceRecord(source, Op.READ, 64 * (tag * 100 + i), 1) for i in range(n)]


def test_interleave_round_robin():
    A, B = _recs(1, 2), _recs(2, 1)
    assert interleave([A, B], [1, 1]) == [A[0], B[0], A[1]]


def test_interleave_skips_exhausted():
    A = _recs(1, 3)
    assert interleave([A, []], [1, 1]) == A


def test_interleave_weighted_matches_replayed_rule():
    A, B = _recs(1, 1000), _recs(2, 1000, "gpu0")
    merged = interleave([A, B], [2, 1])
    ids = {id(r): 0 for r in A} | {id(r): 1 for r in B}
    assert [ids[id(r)] for r in merged] == round_robin_positions([1000, 1000], [2, 1])
    assert [ids[id(r)] for r in merged[:6]] == [0, 0, 1, 0, 0, 1]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=5).filter(any), st.data())
def test_interleave_preserves_order_and_length(lengths, data):
    weights = data.draw(st.lists(st.integers(1, 4), min_size=len(lengths), max_size=len(lengths)))
    streams = [_recs(k, n, "cpu%d" % k) for k, n in enumerate(lengths)]
    merged = interleave(streams, weights)
    assert len(merged) == sum(lengths)
    for k, s in enumerate(streams):
        assert [r for r in merged if r.source == "cpu%d" % k] == s


def test_interleave_errors():
    with pytest.raises(ConfigError):
        interleave([])
    with pytest.raises(ConfigError):
        interleave([_recs(1, 1)], [1, 1])
    with pytest.raises(ConfigError):
        interleave([[], []], [1, 1])


def test_default_weights_favour_gpu():
    assert default_weights([_recs(0, 1), _recs(1, 1, "gpu0")]) == [1, 4]


def test_mix_spec_round_trip():
    doc = {"streams": [PRESETS["cache_friendly"].to_dict(),
                       dict(PRESETS["streaming"].to_dict(), record_count=100)],
           "weights": [1, 4], "seed": 5}
    mix = MixSpec.from_dict(doc)
    assert MixSpec.from_dict(mix.to_dict()) == mix
    recs = load_workload(doc)
    assert len(recs) == 40_000 + 100


def test_mix_spec_names_bad_stream():
    with pytest.raises(ConfigError, match=r"streams\[1\].*stride"):
        MixSpec.from_dict({"streams": [{"kind": "Streaming"}, {"kind": "Streaming", "stride": 3}]})


def test_shipped_reference_trace_regenerates_from_its_manifest():
    from reusesim.trace import data_path, load_workload_file, reference_trace
    shipped = reference_trace()
    assert len(shipped) == 120_000
    assert load_workload_file(data_path("reference_mix.json")) == shipped
