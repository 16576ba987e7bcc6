"""
Reuse distance and workload classes
===================================

The stack distance of an access is the number of distinct lines touched
since the previous access to the same line.  Its histogram, read against
the LLC capacity, puts a trace into one of four classes.
"""

import numpy as np

from reusesim import HierarchyConfig, classify, reuse_distances
from reusesim.trace import PRESETS, generate

llc_lines = HierarchyConfig().llc.geometry.lines
print("LLC lines:", llc_lines)

for name, spec in PRESETS.items():
    hist = reuse_distances(generate(spec))
    finite = hist.finite()
    d = np.repeat(np.array(list(finite), dtype=float), list(finite.values()))
    median = "%8.0f" % np.median(d) if d.size else "%8s" % "-"
    print("%-18s %-16s cold=%5.1f%%  median=%s  within LLC=%5.1f%%" % (
        name, classify(hist, llc_lines).value, 100 * hist.cold / hist.total,
        median, 100 * (d < llc_lines).sum() / hist.total))
