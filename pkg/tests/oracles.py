"""Naive reference models used only by the tests.

These are written from the behavioural definitions, without sharing code
with the package: timestamps instead of recency lists, a brute-force tree
search for PLRU, and dictionaries of lines instead of way arrays for the
reuse cache.
"""

import math


class NaiveCache:
    """One list of way slots per set; each slot is [line, dirty, stamp] or None."""

    def __init__(self, sets, ways, line_bytes, policy="LRU", writeback=True):
        self.sets, self.ways, self.line_bytes = sets, ways, line_bytes
        self.policy = policy
        self.writeback = writeback
        self.slots = {s: [None] * ways for s in range(sets)}
        self.clock = 0
        self.levels = int(math.log2(ways)) if policy == "TreePLRU" else 0
        self.tree = {s: {} for s in range(sets)}  # (depth, prefix) -> bit

    def _touch(self, s, w):
        self.clock += 1
        self.slots[s][w][2] = self.clock
        L = self.levels
        for d in range(L):
            node = (d, w >> (L - d))
            went_right = (w >> (L - d - 1)) & 1
            self.tree[s][node] = 1 - went_right

    def _tree_victim(self, s):
        L = self.levels
        matches = []
        for w in range(self.ways):
            ok = all(
                self.tree[s].get((d, w >> (L - d)), 0) == (w >> (L - d - 1)) & 1
                for d in range(L)
            )
            if ok:
                matches.append(w)
        assert len(matches) == 1
        return matches[0]

    def access(self, address, write=False, allowed=None):
        """Return (hit, evicted (addr, dirty) or None)."""
        line = address // self.line_bytes
        s = line % self.sets
        slots = self.slots[s]
        for w, e in enumerate(slots):
            if e is not None and e[0] == line:
                if write and self.writeback:
                    e[1] = True
                self._touch(s, w)
                return True, None
        if allowed is None:
            allowed = list(range(self.ways))
        free = [w for w in allowed if slots[w] is None]
        if free:
            w = free[0]
        elif self.policy == "TreePLRU" and len(allowed) == self.ways:
            w = self._tree_victim(s)
        else:
            w = min(allowed, key=lambda k: (slots[k][2], k))
        evicted = None
        if slots[w] is not None:
            evicted = (slots[w][0] * self.line_bytes, slots[w][1])
        slots[w] = [line, write and self.writeback, 0]
        self._touch(s, w)
        return False, evicted


class NaiveReuseCache:
    """Reuse cache over dicts keyed by line number.

    tags[s]: line -> {"stamp", "count", "data"}; data[s]: line -> {"stamp", "dirty"}.
    """

    def __init__(self, sets, tag_ways, data_ways, line_bytes, hysteresis=1):
        self.sets, self.tag_ways, self.data_ways = sets, tag_ways, data_ways
        self.line_bytes, self.h = line_bytes, hysteresis
        self.tags = {s: {} for s in range(sets)}
        self.data = {s: {} for s in range(sets)}
        self.clock = 0

    def _tick(self):
        self.clock += 1
        return self.clock

    def _alloc(self, s, line, dirty, evicted):
        data = self.data[s]
        if len(data) == self.data_ways:
            old = min(data, key=lambda k: data[k]["stamp"])
            evicted.append((old * self.line_bytes, data.pop(old)["dirty"]))
            self.tags[s][old]["data"] = False
        data[line] = {"stamp": self._tick(), "dirty": dirty}
        self.tags[s][line]["data"] = True

    def access(self, address, write=False):
        """Return a dict with the same fields as ReuseOutcome."""
        line = address // self.line_bytes
        s = line % self.sets
        tags, data = self.tags[s], self.data[s]
        evicted = []
        tag_evicted = None
        if line not in tags:
            if len(tags) == self.tag_ways:
                old = min(tags, key=lambda k: tags[k]["stamp"])
                tag_evicted = old * self.line_bytes
                if tags.pop(old)["data"]:
                    evicted.append((tag_evicted, data.pop(old)["dirty"]))
            tags[line] = {"stamp": self._tick(), "count": 0, "data": False}
            alloc = self.h == 0
            if alloc:
                self._alloc(s, line, write, evicted)
            return dict(tag_hit=False, data_hit=False, data_allocated=alloc,
                        tag_evicted=tag_evicted, data_evicted=tuple(evicted),
                        dram_fetch=not write,
                        dram_writebacks=sum(d for _, d in evicted),
                        write_through=write and not alloc)
        t = tags[line]
        t["stamp"] = self._tick()
        if t["data"]:
            data[line]["stamp"] = self._tick()
            if write:
                data[line]["dirty"] = True
            return dict(tag_hit=True, data_hit=True, data_allocated=False, tag_evicted=None,
                        data_evicted=(), dram_fetch=False, dram_writebacks=0, write_through=False)
        t["count"] = min(self.h, t["count"] + 1)
        alloc = t["count"] >= self.h
        if alloc:
            self._alloc(s, line, write, evicted)
        return dict(tag_hit=True, data_hit=False, data_allocated=alloc, tag_evicted=None,
                    data_evicted=tuple(evicted), dram_fetch=not write,
                    dram_writebacks=sum(d for _, d in evicted),
                    write_through=write and not alloc)


def naive_stack_distances(lines):
    """O(N^2) rescan: distinct lines strictly between consecutive uses."""
    out = []
    for t, x in enumerate(lines):
        prev = None
        for k in range(t - 1, -1, -1):
            if lines[k] == x:
                prev = k
                break
        if prev is None:
            out.append(math.inf)
        else:
            out.append(len(set(lines[prev + 1:t])))
    return out


def round_robin_positions(lengths, weights):
    """Replay the weighted round-robin rule and return the stream index per slot."""
    left = list(lengths)
    order = []
    while any(left):
        for k, w in enumerate(weights):
            for _ in range(w):
                if left[k]:
                    order.append(k)
                    left[k] -= 1
    return order
