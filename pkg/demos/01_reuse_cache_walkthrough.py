"""
A reuse cache, one access at a time
===================================

Tags and data live in separate arrays.  A line's tag is stored on its first
miss, its data only once the tag is hit again.  Lines touched once never
take a data slot.
"""

from reusesim import Cache, CacheGeometry, ReuseCache, ReuseGeometry
from reusesim.trace import Op

# one set, four tags, two data slots
rc = ReuseCache(ReuseGeometry(sets=1, tag_ways=4, data_ways=2, line_bytes=64))

A, B, C = 0x000, 0x040, 0x080


def show(label, out):
    print("%-10s tag_hit=%-5s data_hit=%-5s allocated=%-5s dram=%d" % (
        label, out.tag_hit, out.data_hit, out.data_allocated, out.dram_transfers))


# miss, miss with allocation, hit
for k in range(3):
    show("A #%d" % (k + 1), rc.access(A))

# a dirty writeback to a line with only a tag allocates data without a fetch
rc.access(B)
show("B writeback", rc.access(B, Op.WRITE))

# C's second touch needs a data slot; the LRU data entry (A) is dropped
rc.access(C)
out = rc.access(C)
show("C #2", out)
print("data evicted:", [(hex(a), dirty) for a, dirty in out.data_evicted])

# A's tag is still there, so the next touch re-allocates immediately
show("A again", rc.access(A))

# %%
# Streaming through both kinds of cache
# -------------------------------------
# Every GPU line below is touched once.  The conventional cache fills every
# line; the reuse cache stores tags only.

conv = Cache(CacheGeometry(64 * 1024, 16, 64), "LRU")
reuse = ReuseCache(ReuseGeometry(64, 16, 8, 64))
fills = sum(conv.access(i * 64).filled for i in range(50_000))
for i in range(50_000):
    reuse.access(i * 64)
print("conventional fills:", fills)
print("reuse data insertions:", reuse.data_insertions)
