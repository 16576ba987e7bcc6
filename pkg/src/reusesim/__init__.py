"""Trace-driven CPU-GPU memory hierarchy simulator with a reuse-cache LLC.

Four shared-LLC schemes are modelled: shared LRU, static way partitioning,
GPU LLC bypass, and the decoupled tag/data reuse cache.
"""

from .analysis import (AreaReport, ReuseHistogram, WorkloadClass, area_bits, area_comparison,
                       classify, reuse_distances, stack_distances)
from .cache import AccessOutcome, Cache, CacheGeometry, WriteMode
from .errors import ConfigError, LogicError, MetricError, ReuseSimError, TraceParseError
from .hierarchy import (ALL_SCHEMES, Hierarchy, HierarchyConfig, LevelConfig, Latencies,
                        ReuseConfig, RoutedAccess, Scheme, simulate)
from .metrics import MetricsReport, bus_utilization, emit_report, ipc_proxy, mpki
from .policies import LRUState, PolicyKind, TreePLRUState, full_mask, mask_from_ways
from .reuse import ReuseCache, ReuseGeometry, ReuseOutcome
from .trace import (GeneratorKind, GeneratorSpec, MixSpec, Op, TraceRecord, generate,
                    interleave, parse_trace_line, read_trace, write_trace)

__version__ = "0.1.0"
