"""Command-line entry point: ``ddsl build|plan|estimate|list|update|verify``.

A match store is a directory holding ``matches.cm`` (compressed records),
``pattern.txt``, ``plan.json`` and ``costs.json``; ``--plain`` adds
``matches.txt``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .compression import decompress_all, read_records, write_matches, write_records
from .engine import run_tree
from .errors import DDSLError
from .estimator import DegreeDistribution, estimate
from .graph import Graph, read_batch, read_edge_list
from .incremental import maintain
from .matcher import oracle_list
from .pattern import Pattern, decompose, read_pattern, write_pattern
from .planner import plan
from .storage import PartitionFunction, build, extra_edge_cost, load_storage, save_storage


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    pattern: str | None = None
    storage: str | None = None
    m: int = 1
    partition: str = "mod"
    batch: str | None = None
    store: str | None = None
    out: str | None = None
    storage_out: str | None = None
    workspace: str | None = None
    cover: list[int] | None = None
    plain: bool = False
    seed: int = 0
    workers: int = 1


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _parse_cover(text: str | None) -> list[int] | None:
    if text is None:
        return None
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def _load_pattern_and_cover(store: Path) -> tuple[Pattern, list[int]]:
    p = read_pattern(store / "pattern.txt")
    meta = json.loads((store / "plan.json").read_text(encoding="utf-8"))
    return p, meta["cover"]


def cmd_build(cfg: RunConfig) -> int:
    d = read_edge_list(cfg.graph)
    h = PartitionFunction.parse(cfg.partition, m=cfg.m, seed=cfg.seed)
    s = build(d, h=h, workers=cfg.workers)
    save_storage(s, cfg.out, d.num_vertices, d.num_edges)
    extra = extra_edge_cost(s, d)
    print(_dump({"storage": str(cfg.out), "m": s.m, "partition": h.spec, "size": s.size(),
                 "stored_edges": extra.stored, "closing_edges": extra.closing,
                 "triangles": extra.triangles}))
    return 0


def _graph_for(cfg: RunConfig) -> Graph:
    if cfg.graph:
        return read_edge_list(cfg.graph)
    if cfg.storage:
        return load_storage(cfg.storage).reconstruct()
    raise DDSLError("either --graph or --storage is required")


def cmd_plan(cfg: RunConfig) -> int:
    d = _graph_for(cfg)
    p = read_pattern(cfg.pattern)
    pl = plan(p, DegreeDistribution.from_graph(d), cfg.cover)
    out = pl.to_dict()
    out["tree_text"] = pl.tree.render()
    print(_dump(out))
    return 0


def cmd_estimate(cfg: RunConfig) -> int:
    d = _graph_for(cfg)
    p = read_pattern(cfg.pattern)
    rep = estimate(p, DegreeDistribution.from_graph(d)).to_dict()
    rep["n"] = d.num_vertices
    rep["e"] = d.num_edges
    print(_dump(rep))
    return 0


def _write_store(out: Path, p: Pattern, records, cover, plan_info: dict, costs: dict,
                 matches=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "matches.cm", "w", encoding="utf-8") as fh:
        write_records(records, fh)
    with open(out / "pattern.txt", "w", encoding="utf-8") as fh:
        write_pattern(p, fh)
    info = dict(plan_info)
    info["cover"] = sorted(cover)
    (out / "plan.json").write_text(_dump(info) + "\n", encoding="utf-8")
    (out / "costs.json").write_text(_dump(costs) + "\n", encoding="utf-8")
    if matches is not None:
        with open(out / "matches.txt", "w", encoding="utf-8") as fh:
            write_matches(matches, fh)


def cmd_list(cfg: RunConfig) -> int:
    s = load_storage(cfg.storage)
    d = s.reconstruct()
    p = read_pattern(cfg.pattern)
    pl = plan(p, DegreeDistribution.from_graph(d), cfg.cover)
    res = run_tree(s, pl.tree, pl.cover, d, decompress=True, workers=cfg.workers, workspace=cfg.workspace)
    costs = {
        "rounds": [r.to_dict() for r in res.rounds],
        "total": res.cost.to_dict(),
        "closed_form": res.closed_form(pl.tree),
        "estimated_cost": pl.cost,
        "matches": len(res.matches),
    }
    _write_store(Path(cfg.out), p, res.records, pl.cover, pl.to_dict(), costs,
                 res.matches if cfg.plain else None)
    print(_dump({"store": str(cfg.out), "matches": len(res.matches), "records": len(res.records),
                 "cost": res.cost.total}))
    return 0


def cmd_update(cfg: RunConfig) -> int:
    store = Path(cfg.store)
    s = load_storage(cfg.storage)
    d = s.reconstruct()
    p, cover = _load_pattern_and_cover(store)
    batch = read_batch(cfg.batch)
    records = read_records(store / "matches.cm")
    res = maintain(records, s, d, batch, decompose(p, cover), workers=cfg.workers)
    save_storage(res.storage, cfg.storage_out or cfg.storage, res.graph.num_vertices, res.graph.num_edges)
    out = Path(cfg.out) if cfg.out else store
    out.mkdir(parents=True, exist_ok=True)
    if out != store:
        for name in ("pattern.txt", "plan.json", "costs.json"):
            (out / name).write_bytes((store / name).read_bytes())
    with open(out / "matches.cm", "w", encoding="utf-8") as fh:
        write_records(res.records, fh)
    if cfg.plain or (store / "matches.txt").exists():
        with open(out / "matches.txt", "w", encoding="utf-8") as fh:
            write_matches(decompress_all(res.records, p, res.graph), fh)
    (out / "patch-stats.json").write_text(_dump(res.stats()) + "\n", encoding="utf-8")
    print(_dump({"store": str(out), "records": len(res.records), "patch_records": len(res.patch.merged)}))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    store = Path(cfg.store)
    s = load_storage(cfg.storage)
    d = s.reconstruct()
    p, _ = _load_pattern_and_cover(store)
    got = decompress_all(read_records(store / "matches.cm"), p, d)
    want = oracle_list(p, d)
    if got == want:
        print(f"PASS {len(want)} matches")
        return 0
    missing = sorted(want - got)
    extra = sorted(got - want)
    if missing:
        print(f"FAIL missing match {' '.join(map(str, missing[0]))} ({len(missing)} missing, {len(extra)} spurious)")
    else:
        print(f"FAIL spurious match {' '.join(map(str, extra[0]))} ({len(extra)} spurious)")
    return 1


COMMANDS = {
    "build": cmd_build,
    "plan": cmd_plan,
    "estimate": cmd_estimate,
    "list": cmd_list,
    "update": cmd_update,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddsl", description="Partitioned subgraph listing simulator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for hashing and sampling (default 0)")
    common.add_argument("--workers", type=int, default=1, help="worker threads per round")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="partition a graph into NP storage")
    b.add_argument("--graph", required=True)
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--partition", default="mod", help="mod, hash, or a full spec like hash:4:7")
    b.add_argument("--out", required=True, help="storage directory")

    for name, helptext in (("plan", "print the chosen cover and join tree"),
                           ("estimate", "print match-count estimates")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--graph")
        g.add_argument("--storage")
        sp.add_argument("--pattern", required=True, help="pattern file or corpus name")
        if name == "plan":
            sp.add_argument("--cover", help="comma-separated cover to plan for")

    ls = sub.add_parser("list", parents=[common], help="list all matches into a store")
    ls.add_argument("--storage", required=True)
    ls.add_argument("--pattern", required=True)
    ls.add_argument("--out", required=True, help="match store directory")
    ls.add_argument("--cover")
    ls.add_argument("--plain", action="store_true", help="also write decompressed matches.txt")
    ls.add_argument("--workspace", help="directory for per-node intermediate stores")

    up = sub.add_parser("update", parents=[common], help="apply an update batch to storage and store")
    up.add_argument("--storage", required=True)
    up.add_argument("--store", required=True)
    up.add_argument("--batch", required=True)
    up.add_argument("--storage-out", help="write the updated storage here instead of in place")
    up.add_argument("--out", help="write the updated store here instead of in place")
    up.add_argument("--plain", action="store_true")

    ve = sub.add_parser("verify", parents=[common], help="compare a store against the oracle")
    ve.add_argument("--storage", required=True)
    ve.add_argument("--store", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fields = vars(args)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    cfg = RunConfig(
        command=args.command,
        graph=fields.get("graph"),
        pattern=fields.get("pattern"),
        storage=fields.get("storage"),
        m=fields.get("m", 1),
        partition=fields.get("partition", "mod"),
        batch=fields.get("batch"),
        store=fields.get("store"),
        out=fields.get("out"),
        storage_out=fields.get("storage_out"),
        workspace=fields.get("workspace"),
        cover=_parse_cover(fields.get("cover")),
        plain=fields.get("plain", False),
        seed=args.seed,
        workers=args.workers,
    )
    if cfg.m < 1:
        print("error: --m must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[cfg.command](cfg)
    except (DDSLError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
