import json

import pytest

from galloc import InvariantViolation, make_ring_instance
from galloc.cli import main

from conftest import two_swaps

X0 = {"a1": 0, "c1": 2, "d1": 2, "a2": 0, "c2": 2, "d2": 2, "a3": 0, "c3": 2, "d3": 2}
X4 = {"a1": 4, "c1": 0, "d1": 0, "a2": 4, "c2": 0, "d2": 0, "a3": 4, "c3": 0, "d3": 0}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def ring_file(tmp_path):
    return write_json(tmp_path / "ring.json", make_ring_instance(4).to_dict())


@pytest.fixture
def swaps_file(tmp_path):
    return write_json(tmp_path / "swaps.json", two_swaps().to_dict())


def run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_gen_appendix_solve_check_round_trip(tmp_path, capsys):
    inst_path = str(tmp_path / "inst.json")
    rc, out, _ = run(capsys, ["gen", "--appendix", "4", "-o", inst_path])
    assert rc == 0 and out == ""
    rc, out, _ = run(capsys, ["solve", inst_path, "--mode", "min", "--verify"])
    assert rc == 0
    doc = json.loads(out)
    assert doc == {"assignment": X0, "stable": True}
    sol_path = write_json(tmp_path / "sol.json", doc)
    rc, out, _ = run(capsys, ["check", inst_path, sol_path])
    assert rc == 0
    assert json.loads(out) == {"stable": True, "unacceptable": [], "blocking": []}


def test_solve_max_matches_the_top(ring_file, capsys):
    rc, out, _ = run(capsys, ["solve", ring_file, "--mode", "max", "--verify"])
    assert rc == 0
    assert json.loads(out)["assignment"] == X4


def test_check_reports_blocking_edges(ring_file, tmp_path, capsys):
    zero = write_json(tmp_path / "zero.json", {"assignment": {}})
    rc, out, _ = run(capsys, ["check", ring_file, zero])
    assert rc == 0
    doc = json.loads(out)
    assert doc["stable"] is False
    assert len(doc["blocking"]) == 9


def test_route_lists_the_four_steps(ring_file, capsys):
    rc, out, _ = run(capsys, ["route", ring_file, "--verify"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["start"] == X0
    assert doc["end"] == X4
    assert [s["weight"] for s in doc["steps"]] == [1, 1, 1, 1]
    rc, seeded, _ = run(capsys, ["route", ring_file, "--seed", "3"])
    assert rc == 0
    counts = {}
    for s in json.loads(seeded)["steps"]:
        key = (tuple(s["cycle"]), s["weight"])
        counts[key] = counts.get(key, 0) + 1
    assert sorted(counts.values()) == [2, 2]


def test_rotations_json_and_dot(ring_file, tmp_path, capsys):
    x1 = write_json(
        tmp_path / "x1.json",
        {eid: 1 if eid.startswith("a") else (2 if eid.startswith("c") else 1)
         for eid in X0},
    )
    rc, out, _ = run(capsys, ["rotations", ring_file, x1])
    assert rc == 0
    doc = json.loads(out)
    assert doc == {
        "rotations": [
            {"cycle": ["a1", "c3", "a3", "c2", "a2", "c1"], "weight": 1}
        ]
    }
    rc, out, _ = run(capsys, ["rotations", ring_file, x1, "--dot"])
    assert rc == 0
    assert out.startswith("digraph active {")
    assert '"w1" -> "f1" [label="a1"];' in out


def test_poset_needs_general_on_the_ring(ring_file, capsys):
    rc, _, err = run(capsys, ["poset", ring_file])
    assert rc == 1
    assert "galloc: error:" in err
    rc, out, _ = run(capsys, ["poset", ring_file, "--general", "--verify"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["mode"] == "general"
    assert [el["occurrence"] for el in doc["elements"]] == [0, 1, 0, 1]
    assert doc["hasse"] == [[0, 3], [2, 0], [3, 1]]
    rc, out, _ = run(capsys, ["poset", ring_file, "--general", "--dot"])
    assert rc == 0
    assert out.startswith("digraph poset {")
    assert "#1" in out


def test_poset_plain_on_a_gapless_instance(swaps_file, capsys):
    rc, out, _ = run(capsys, ["poset", swaps_file, "--verify"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["mode"] == "gapless"
    assert doc["hasse"] == []
    assert len(doc["elements"]) == 2


def test_mincost_prints_exact_costs(swaps_file, tmp_path, capsys):
    costs = write_json(tmp_path / "c.json", {"a1": -1.5})
    rc, out, _ = run(capsys, ["mincost", swaps_file, costs])
    assert rc == 0
    doc = json.loads(out)
    assert doc["cost"] == "-1.5"
    assert doc["stable"] is True
    assert doc["assignment"] == {"a1": 1, "a2": 0, "b1": 0, "b2": 1}


def test_missing_files_exit_one(tmp_path, capsys):
    rc, _, err = run(capsys, ["solve", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "galloc: error:" in err


def test_mincost_refuses_the_ring(ring_file, tmp_path, capsys):
    costs = write_json(tmp_path / "c.json", {"a1": 1})
    rc, _, err = run(capsys, ["mincost", ring_file, costs])
    assert rc == 1
    assert "galloc: error:" in err


def test_brute_counts_the_chain(ring_file, capsys):
    rc, out, _ = run(capsys, ["brute", ring_file])
    assert rc == 0
    doc = json.loads(out)
    assert doc["count"] == 5
    assert doc["xmin"] == X0
    assert doc["xmax"] == X4
    assert doc["properties_ok"] is True
    assert doc["problems"] == []


def test_brute_respects_the_limit(ring_file, capsys, monkeypatch):
    rc, _, err = run(capsys, ["brute", ring_file, "--limit", "10"])
    assert rc == 1
    assert "over the limit" in err
    monkeypatch.setenv("GALLOC_LIMIT", "10")
    rc, _, err = run(capsys, ["brute", ring_file])
    assert rc == 1
    monkeypatch.setenv("GALLOC_LIMIT", "banana")
    rc, _, err = run(capsys, ["brute", ring_file])
    assert rc == 1
    assert "GALLOC_LIMIT" in err


def test_gen_is_deterministic(capsys):
    args = ["gen", "--seed", "7", "--family", "mixed", "--workers", "2"]
    rc, first, _ = run(capsys, args)
    assert rc == 0
    rc, second, _ = run(capsys, args)
    assert first == second
    doc = json.loads(first)
    assert doc["meta"]["seed"] == 7


def test_gen_needs_a_seed(capsys):
    rc, _, err = run(capsys, ["gen"])
    assert rc == 1
    assert "needs --seed" in err


def test_bench_reports_timings(ring_file, capsys):
    rc, out, _ = run(capsys, ["bench", ring_file])
    assert rc == 0
    doc = json.loads(out)
    assert doc["command"] == "bench"
    assert set(doc["timings"]) == {"capacity_reduction", "stages", "full_route"}
    assert doc["results"]["route_length"] == 4
    assert doc["results"]["capacity_reduction_rounds"] >= 1
    assert doc["oracle_calls_total"] > 0


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1


def test_internal_failures_exit_two(ring_file, capsys, monkeypatch):
    import galloc.cli as cli_mod

    def boom(inst):
        raise InvariantViolation("forced")

    monkeypatch.setattr(cli_mod, "xmin_by_capacity_reduction", boom)
    rc, _, err = run(capsys, ["solve", ring_file])
    assert rc == 2
    assert "invariant violation" in err
