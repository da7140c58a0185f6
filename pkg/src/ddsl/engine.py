"""Round-based executor for join trees over NP storage.

Every round reads its inputs, runs independent tasks (per partition or per
join key), and writes one output store; counters are kept per round in
storage units.  Tasks may run on a thread pool; outputs are merged in sorted
order so results never depend on scheduling.
"""

from __future__ import annotations

import os
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .compression import CompressedMatch, cc_join, decompress_all, store_units, tighten, write_records
from .costs import CostReport, sum_reports
from .errors import JoinKeyError
from .graph import Graph
from .matcher import Match, list_unit_compressed
from .pattern import Pattern, R1Unit
from .planner import JoinTree, SizeModel
from .storage import NPStorage


@dataclass
class Round:
    kind: str
    label: str
    cost: CostReport

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.label, **self.cost.to_dict()}


def parallel_map(fn, items: Sequence, workers: int = 1) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _merge(chunks: Iterable[Iterable[CompressedMatch]]) -> list[CompressedMatch]:
    out: set[CompressedMatch] = set()
    for c in chunks:
        out.update(c)
    return sorted(out)


def run_leaves(storage: NPStorage, units: Sequence[R1Unit], cover: Iterable[int],
               workers: int = 1) -> tuple[dict[R1Unit, list[CompressedMatch]], Round]:
    """List every unit in one shared round; each partition task handles all units."""
    cov = frozenset(cover)
    distinct = list(dict.fromkeys(units))

    def task(part):
        return [list_unit_compressed(q, part, cov) for q in distinct]

    per_part = parallel_map(task, list(storage.partitions), workers)
    stores = {q: _merge(res[i] for res in per_part) for i, q in enumerate(distinct)}
    cost = CostReport(map_in=storage.size(), map_out=sum(store_units(stores[q]) for q in units))
    return stores, Round("leaf-listing", f"{len(distinct)} units", cost)


def run_join(left: Sequence[CompressedMatch], right: Sequence[CompressedMatch], left_frag: Pattern,
             right_frag: Pattern, result_frag: Pattern, cover: Iterable[int], d: Graph | None = None,
             workers: int = 1) -> tuple[list[CompressedMatch], Round]:
    """Group both sides by the images of the shared cover vertices and cc-join each group."""
    cov = frozenset(cover)
    key = sorted(set(left_frag.vertices) & set(right_frag.vertices) & cov)
    if not key:
        raise JoinKeyError(f"{left_frag!r} and {right_frag!r} share no cover vertex")
    groups: dict[tuple, tuple[list, list]] = defaultdict(lambda: ([], []))
    for side, records in ((0, left), (1, right)):
        for r in records:
            s = r.skel
            groups[tuple(s[v] for v in key)][side].append(r)

    def task(k):
        ls, rs = groups[k]
        out = []
        for a in ls:
            for b in rs:
                c = cc_join(a, b, left_frag, right_frag, result_frag, cov, d)
                if c is not None:
                    out.append(c)
        return out

    out = _merge(parallel_map(task, sorted(groups), workers))
    s_in = store_units(left) + store_units(right)
    cost = CostReport(map_in=s_in, map_out=s_in, shuffle=2 * s_in, reduce_in=s_in, reduce_out=store_units(out))
    return out, Round("join", f"key {key}", cost)


@dataclass
class RunResult:
    pattern: Pattern
    records: list[CompressedMatch]
    matches: set[Match] | None
    rounds: list[Round]
    sizes: dict[JoinTree, int]
    phi_size: int
    stores: dict[JoinTree, list[CompressedMatch]] = field(default_factory=dict)

    @property
    def cost(self) -> CostReport:
        return sum_reports(r.cost for r in self.rounds)

    def size_model(self) -> SizeModel:
        """Measured sizes by edge mask (nodes sharing a mask have equal match sets)."""
        return SizeModel({node.mask: s for node, s in self.sizes.items()})

    def closed_form(self, tree: JoinTree) -> int:
        """The closed-form tree cost evaluated with the measured node sizes."""
        n = len(self.matches) if self.matches is not None else 0
        nonroot = sum(6 * s for node, s in self.sizes.items() if node is not tree)
        return nonroot + self.phi_size + 2 * self.sizes[tree] + self.pattern.num_vertices * n


def run_tree(storage: NPStorage, tree: JoinTree, cover: Iterable[int], d: Graph | None = None,
             decompress: bool = True, workers: int = 1,
             workspace: str | os.PathLike | None = None) -> RunResult:
    """Leaf round, then one join round per internal node bottom-up, then optional decompression.

    The root's records are tightened (candidates that occur in no match are
    dropped) inside its reduce step.
    """
    cov = frozenset(cover)
    if d is None:
        d = storage.reconstruct()
    p = tree.fragment
    leaves = tree.leaves()
    unit_stores, leaf_round = run_leaves(storage, leaves, cov, workers)
    rounds = [leaf_round]
    stores: dict[JoinTree, list[CompressedMatch]] = {}
    sizes: dict[JoinTree, int] = {}
    for node in tree.nodes():
        if node.is_leaf:
            recs = unit_stores[node.unit]
        else:
            recs, rnd = run_join(stores[node.left], stores[node.right], node.left.fragment,
                                 node.right.fragment, node.fragment, cov, d, workers)
            if node is tree:
                recs = sorted(t for t in (tighten(r, p, d) for r in recs) if t is not None)
                rnd.cost.reduce_out = store_units(recs)
            rounds.append(rnd)
        stores[node] = recs
        sizes[node] = store_units(recs)
    root = stores[tree]
    matches = None
    if decompress:
        matches = decompress_all(root, p, d)
        rounds.append(Round("decompress", "root",
                            CostReport(map_in=store_units(root), map_out=p.num_vertices * len(matches))))
    if workspace is not None:
        ws = Path(workspace)
        ws.mkdir(parents=True, exist_ok=True)
        for i, node in enumerate(tree.nodes()):
            with open(ws / f"node-{i}.cm", "w", encoding="utf-8") as fh:
                write_records(stores[node], fh)
    return RunResult(p, root, matches, rounds, sizes, storage.size(), stores)
