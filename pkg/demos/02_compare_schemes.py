"""
Four LLC schemes on the shipped reference mix
=============================================

Two CPU cores with small working sets run next to four GPU compute units
that stream through memory.  The mix ships with the package, so the numbers
printed here are the same on every machine.
"""

from reusesim import ALL_SCHEMES, HierarchyConfig, simulate
from reusesim.trace import is_gpu, reference_trace

trace = reference_trace()
print(len(trace), "records")

reports = {s.value: simulate(trace, HierarchyConfig(llc_scheme=s)) for s in ALL_SCHEMES}

print("%-16s %10s %10s %10s %8s" % ("scheme", "cpu misses", "cpu mpki", "gpu mpki", "bus"))
for name, r in reports.items():
    cpu_misses = sum(s.llc_misses for k, s in r.sources.items() if not is_gpu(k))
    print("%-16s %10d %10.3f %10.3f %8.4f" % (
        name, cpu_misses, r.group_mpki("cpu"), r.group_mpki("gpu"), r.bus_utilization))

# %%
# The CPU footprints fit in the LLC, so every scheme ends up with the same
# CPU misses.  The GPU streams never hit, and sending them straight to DRAM
# costs the most bus time per cycle.

bypass = reports["GpuBypass"]
print("bypass transfers:", bypass.counters["bypass_transfers"])
print("reuse data insertions:", reports["ReuseCache"].counters["llc_insertions"])
print("shared LRU insertions:", reports["SharedLRU"].counters["llc_insertions"])
