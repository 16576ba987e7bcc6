import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import NaiveCache
from reusesim.cache import Cache, CacheGeometry, WriteMode
from reusesim.errors import ConfigError
from reusesim.policies import mask_from_ways
from reusesim.trace import Op

LINE = 64


def one_set(ways, **kw):
    return Cache(CacheGeometry(ways * LINE, ways, LINE), debug=True, **kw)


def test_geometry():
    g = CacheGeometry(32 * 1024, 4, 64)
    assert g.sets == 128 and g.lines == 512
    with pytest.raises(ConfigError):
        CacheGeometry(3 * 64 * 4, 4, 64)  # 3 sets
    with pytest.raises(ConfigError):
        CacheGeometry(4096, 4, 48)
    with pytest.raises(ConfigError):
        CacheGeometry(1000, 4, 64)


def test_cold_miss_then_hit():
    c = one_set(2)
    out = c.access(0, Op.READ)
    assert (out.hit, out.filled, out.evicted) == (False, True, None)
    assert c.access(0, Op.READ).hit


def test_lru_third_line_evicts_first():
    c = one_set(2)
    c.access(0 * LINE)
    c.access(1 * LINE)
    out = c.access(2 * LINE)
    assert out.evicted == (0, False)
    ref = NaiveCache(1, 2, LINE)
    assert [ref.access(a * LINE) for a in (0, 1, 2)][-1] == (False, (0, False))


def test_dirty_eviction_writeback_mode():
    c = one_set(1)
    c.access(0, Op.WRITE)
    assert c.access(LINE).evicted == (0, True)


def test_writethrough_never_dirty():
    c = one_set(1, write_mode=WriteMode.WRITETHROUGH)
    out = c.access(0, Op.WRITE)
    assert out.write_through and not out.hit
    assert c.access(0, Op.WRITE).write_through
    assert c.access(LINE).evicted == (0, False)


def test_invalidate():
    c = one_set(2)
    assert c.invalidate(0) is None
    c.access(0, Op.WRITE)
    assert c.invalidate(0) is True
    c.access(LINE)
    assert c.invalidate(LINE) is False
    c.access(0)
    c.invalidate(0)
    assert not c.access(0).hit


def test_mask_limits_allocation_but_not_hits():
    c = one_set(4)
    cpu, gpu = mask_from_ways([0, 1]), mask_from_ways([2, 3])
    c.access(0, mask=cpu)
    c.access(LINE, mask=cpu)
    for k in range(2, 12):
        c.access(k * LINE, mask=gpu)
    # cpu lines survive the GPU flood and hit even when probed with the GPU mask
    assert c.access(0, mask=gpu).hit and c.access(LINE, mask=gpu).hit
    assert sum(c.contains(k * LINE) for k in range(2, 12)) == 2


def _random_ops(rng, n, nlines, sets):
    for _ in range(n):
        yield rng.randrange(nlines) * LINE, rng.random() < 0.3


@pytest.mark.parametrize("policy", ["LRU", "TreePLRU"])
@pytest.mark.parametrize("sets, ways", [(1, 2), (2, 4), (4, 8), (4, 16), (1, 1)])
def test_matches_naive_model(policy, sets, ways):
    rng = random.Random(sets * 100 + ways)
    c = Cache(CacheGeometry(sets * ways * LINE, ways, LINE), policy, debug=True)
    ref = NaiveCache(sets, ways, LINE, policy)
    for addr, w in _random_ops(rng, 3000, sets * ways * 3, sets):
        op = Op.WRITE if w else Op.READ
        out = c.access(addr, op)
        assert (out.hit, out.evicted) == ref.access(addr, w)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2, 4]), st.sampled_from([2, 4, 8]), st.data())
def test_masked_matches_naive_model(sets, ways, data):
    c = Cache(CacheGeometry(sets * ways * LINE, ways, LINE), "LRU", debug=True)
    ref = NaiveCache(sets, ways, LINE, "LRU")
    split = data.draw(st.integers(1, ways - 1))
    masks = [list(range(split)), list(range(split, ways))]
    ops = data.draw(st.lists(st.tuples(st.integers(0, sets * ways * 2), st.booleans(), st.integers(0, 1)),
                             max_size=300))
    for line, w, who in ops:
        out = c.access(line * LINE, Op.WRITE if w else Op.READ, mask_from_ways(masks[who]))
        assert (out.hit, out.evicted) == ref.access(line * LINE, w, masks[who])


def test_writethrough_reports_every_write():
    rng = random.Random(3)
    c = Cache(CacheGeometry(4 * 4 * LINE, 4, LINE), write_mode="writethrough", debug=True)
    for addr, w in _random_ops(rng, 2000, 40, 4):
        out = c.access(addr, Op.WRITE if w else Op.READ)
        assert out.write_through == w
        assert out.evicted is None or out.evicted[1] is False


def test_address_reconstruction():
    c = Cache(CacheGeometry(1024 * 1024, 16, 64))
    for addr in (0, 64, 0x123440, (1 << 48) - 64):
        s, t = c.locate(addr)
        assert c.line_address(s, t) == addr
