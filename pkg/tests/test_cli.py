from __future__ import annotations

import json
import random
import subprocess
import sys

import pytest

from ddsl.cli import main
from ddsl.compression import read_matches
from ddsl.graph import Graph, write_batch, write_edge_list, UpdateBatch
from ddsl.matcher import oracle_list
from ddsl.pattern import corpus_pattern
from ddsl.storage import build, load_storage

from instances import er_graph, random_batch


def write_graph(path, g):
    with open(path, "w", encoding="utf-8") as fh:
        write_edge_list(g, fh)
    return str(path)


def write_batch_file(path, b):
    with open(path, "w", encoding="utf-8") as fh:
        write_batch(b, fh)
    return str(path)


@pytest.fixture
def toy(tmp_path):
    g = write_graph(tmp_path / "toy.edges", Graph([(1, 2), (2, 3), (1, 3), (3, 4)]))
    return tmp_path, g


def run(*argv):
    return main([str(a) for a in argv])


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_build_single_partition(toy, capsys):
    tmp, g = toy
    assert run("build", "--graph", g, "--m", 1, "--out", tmp / "s") == 0
    assert sorted(p.name for p in (tmp / "s").iterdir()) == ["meta.json", "nav.bits", "part-0.edges"]
    out = json.loads(capsys.readouterr().out)
    assert out["m"] == 1 and out["triangles"] == 1


def test_build_round_trips_bit_exact(tmp_path):
    d = er_graph(random.Random(1), 25, 0.2)
    g = write_graph(tmp_path / "g.edges", d)
    assert run("build", "--graph", g, "--m", 4, "--partition", "hash", "--seed", 3, "--out", tmp_path / "s") == 0
    s = load_storage(tmp_path / "s")
    assert s == build(d, h=s.h)
    assert s.h.spec == "hash:4:3"


def test_build_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.edges"
    bad.write_text("1 2\n2 x\n", encoding="utf-8")
    assert run("build", "--graph", bad, "--out", tmp_path / "s") == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and ":2:" in err


def test_list_triangle_toy_and_verify(toy, capsys):
    tmp, g = toy
    run("build", "--graph", g, "--m", 2, "--out", tmp / "s")
    assert run("list", "--storage", tmp / "s", "--pattern", "triangle", "--out", tmp / "m", "--plain") == 0
    assert read_matches(tmp / "m" / "matches.txt") == {(1, 2, 3)}
    costs = json.loads((tmp / "m" / "costs.json").read_text())
    assert costs["total"]["total"] == costs["closed_form"]
    capsys.readouterr()
    assert run("verify", "--storage", tmp / "s", "--store", tmp / "m") == 0
    assert capsys.readouterr().out.strip() == "PASS 1 matches"


def test_list_empty_graph(tmp_path):
    g = tmp_path / "empty.edges"
    g.write_text("# nothing\n", encoding="utf-8")
    run("build", "--graph", g, "--m", 2, "--out", tmp_path / "s")
    assert run("list", "--storage", tmp_path / "s", "--pattern", "edge", "--out", tmp_path / "m", "--plain") == 0
    assert (tmp_path / "m" / "matches.txt").read_text() == ""


def test_list_partition_invariance(tmp_path):
    d = er_graph(random.Random(5), 20, 0.3)
    g = write_graph(tmp_path / "g.edges", d)
    for m in (1, 8):
        run("build", "--graph", g, "--m", m, "--out", tmp_path / f"s{m}")
        run("list", "--storage", tmp_path / f"s{m}", "--pattern", "cycle4", "--out", tmp_path / f"m{m}", "--plain")
    a = (tmp_path / "m1" / "matches.txt").read_bytes()
    assert a == (tmp_path / "m8" / "matches.txt").read_bytes()
    assert read_matches(tmp_path / "m1" / "matches.txt") == oracle_list(corpus_pattern("cycle4"), d)


def test_update_empty_batch_is_byte_identical(toy):
    tmp, g = toy
    run("build", "--graph", g, "--m", 2, "--out", tmp / "s")
    run("list", "--storage", tmp / "s", "--pattern", "tailed_triangle", "--out", tmp / "m")
    before = snapshot(tmp / "m")
    batch = tmp / "empty.batch"
    batch.write_text("", encoding="utf-8")
    assert run("update", "--storage", tmp / "s", "--store", tmp / "m", "--batch", batch, "--out", tmp / "m2") == 0
    after = snapshot(tmp / "m2")
    after.pop("patch-stats.json")
    assert after == before


def test_update_single_insert_equals_rerun(tmp_path, capsys):
    rng = random.Random(8)
    d = er_graph(rng, 18, 0.3)
    b = random_batch(rng, d, 1, extra_vertices=0)
    g = write_graph(tmp_path / "g.edges", d)
    run("build", "--graph", g, "--m", 4, "--out", tmp_path / "s")
    run("list", "--storage", tmp_path / "s", "--pattern", "triangle", "--out", tmp_path / "m", "--plain")
    bf = write_batch_file(tmp_path / "u.batch", b)
    assert run("update", "--storage", tmp_path / "s", "--store", tmp_path / "m", "--batch", bf) == 0
    d2 = d.apply_update(b)
    assert read_matches(tmp_path / "m" / "matches.txt") == oracle_list(corpus_pattern("triangle"), d2)
    assert json.loads((tmp_path / "m" / "patch-stats.json").read_text())["records"] >= 0
    capsys.readouterr()
    assert run("verify", "--storage", tmp_path / "s", "--store", tmp_path / "m") == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_update_conflict_names_edge(toy, capsys):
    tmp, g = toy
    run("build", "--graph", g, "--out", tmp / "s")
    run("list", "--storage", tmp / "s", "--pattern", "edge", "--out", tmp / "m")
    bf = write_batch_file(tmp / "bad.batch", UpdateBatch.of(add=[(1, 2)]))
    capsys.readouterr()
    assert run("update", "--storage", tmp / "s", "--store", tmp / "m", "--batch", bf) == 1
    assert "(1, 2)" in capsys.readouterr().err


def test_verify_detects_corruption(toy, capsys):
    tmp, g = toy
    run("build", "--graph", g, "--out", tmp / "s")
    run("list", "--storage", tmp / "s", "--pattern", "edge", "--out", tmp / "m")
    lines = (tmp / "m" / "matches.cm").read_text().splitlines()
    (tmp / "m" / "matches.cm").write_text("\n".join(lines[1:]) + "\n", encoding="utf-8")
    capsys.readouterr()
    assert run("verify", "--storage", tmp / "s", "--store", tmp / "m") == 1
    assert capsys.readouterr().out.startswith("FAIL missing match 1 ")


def test_plan_and_estimate_json(toy, capsys):
    tmp, g = toy
    assert run("plan", "--graph", g, "--pattern", "cycle4", "--cover", "1,2,3") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["cover"] == [1, 2, 3] and "tree_text" in out
    assert run("estimate", "--graph", g, "--pattern", "edge") == 0
    est = json.loads(capsys.readouterr().out)
    assert est["n"] == 4 and est["e"] == 4 and 0 <= est["epsilon"] <= 1


def test_argument_errors_exit_2(toy, capsys):
    tmp, g = toy
    with pytest.raises(SystemExit) as info:
        run("build", "--graph", g)
    assert info.value.code == 2
    assert run("build", "--graph", g, "--m", 0, "--out", tmp / "s") == 2
    assert run("list", "--storage", tmp / "nope", "--pattern", "edge", "--out", tmp / "m") == 1
    assert "error:" in capsys.readouterr().err


def test_console_script_entry_point(toy):
    tmp, g = toy
    proc = subprocess.run([sys.executable, "-m", "ddsl.cli", "estimate", "--graph", g, "--pattern", "triangle"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "expected_matches" in proc.stdout
