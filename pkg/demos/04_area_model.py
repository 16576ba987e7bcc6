"""
Storage bits of a reuse cache
=============================

Counting every stored bit (data, tags, coherence state, replacement state
and the tag/data pointers) gives a first-order area estimate.
"""

from reusesim import CacheGeometry, ReuseGeometry, area_comparison

KB, MB = 1024, 1024 * 1024

conv, *reuse = area_comparison(CacheGeometry(1 * MB, 16, 64), [
    ReuseGeometry.from_sizes(1 * MB, 512 * KB),
    ReuseGeometry.from_sizes(2 * MB, 512 * KB),
    ReuseGeometry.from_sizes(2 * MB, 256 * KB),
])

fields = ("data_bits", "tag_bits", "pointer_bits", "state_bits", "replacement_bits")
print("%-32s" % "" + "".join("%18s" % f for f in fields) + "%12s" % "saved")
for r in [conv] + reuse:
    d = r.to_dict()
    saved = "" if r.reduction is None else "%.1f%%" % (100 * r.reduction)
    print("%-32s" % r.name + "".join("%18d" % d[f] for f in fields) + "%12s" % saved)

# %%
# Data bits dominate, so halving the data array saves almost half the
# storage even after paying for pointers.  Doubling the tags gives part of
# that back.
