"""Static derivation of prefetching hints for persistent object stores, and a
virtual-time simulator to measure them against no prefetching and the
Referenced-Objects Predictor."""

from .benchgen import BenchmarkSpec, generate, trace_for
from .graphs import build_app_type_graph, build_augmented_graph, build_method_graph
from .hints import Hint, HintSet, analyze, dedup_hints, generate_hints, rop_hints
from .interp import oracle_accessed_paths
from .ir import ApplicationModel, parse_application, validate_model
from .simulator import RunMetrics, compare_policies, run_workload
from .store import ObjectRecord, StoreConfig, build_store
from .trace import WorkloadTrace

__all__ = [
    "ApplicationModel",
    "BenchmarkSpec",
    "Hint",
    "HintSet",
    "ObjectRecord",
    "RunMetrics",
    "StoreConfig",
    "WorkloadTrace",
    "analyze",
    "build_app_type_graph",
    "build_augmented_graph",
    "build_method_graph",
    "build_store",
    "compare_policies",
    "dedup_hints",
    "generate",
    "generate_hints",
    "oracle_accessed_paths",
    "parse_application",
    "rop_hints",
    "run_workload",
    "trace_for",
    "validate_model",
]
