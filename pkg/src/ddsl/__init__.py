"""Single-process simulator for partitioned, incremental subgraph listing."""

from __future__ import annotations

from .compression import CompressedMatch, cc_join, compress, decompress, r_lower
from .engine import run_tree
from .estimator import DegreeDistribution, expected_matches
from .graph import Graph, UpdateBatch
from .incremental import maintain
from .matcher import oracle_list
from .pattern import Pattern, corpus_pattern, decompose
from .planner import optimal_join_tree, plan
from .storage import NPStorage, PartitionFunction, build

__all__ = [
    "CompressedMatch",
    "DegreeDistribution",
    "Graph",
    "NPStorage",
    "PartitionFunction",
    "Pattern",
    "UpdateBatch",
    "build",
    "cc_join",
    "compress",
    "corpus_pattern",
    "decompose",
    "decompress",
    "expected_matches",
    "maintain",
    "optimal_join_tree",
    "oracle_list",
    "plan",
    "r_lower",
    "run_tree",
]
