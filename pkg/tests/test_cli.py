import json

import pytest

from msotree.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


@pytest.fixture
def tree_file(tmp_path):
    return write(tmp_path / "tree.json",
                 {"kind": "tree", "elements": ["a", "b", "c", "d", "e"],
                  "order": {"b": "a", "c": "a", "d": "b", "e": "b"},
                  "predicates": []})


@pytest.fixture
def set3_file(tmp_path):
    return write(tmp_path / "set3.json",
                 {"kind": "set", "elements": ["x", "y", "z"], "order": None,
                  "predicates": [{"name": "P0", "members": ["x"]}]})


def run(tmp_path, *argv, out="out.json"):
    out_path = tmp_path / out
    code = main(list(argv) + ["--out", str(out_path)])
    report = json.loads(out_path.read_text()) if out_path.exists() else None
    return code, report


class TestClassify:
    def test_fullbinary(self, tmp_path):
        term = write(tmp_path / "t.term", "(fullbinary)")
        code, rep = run(tmp_path, "classify", "--term", term)
        assert code == 0
        assert rep["report"]["verdict"] == "embeds_binary"

    def test_wild_ii(self, tmp_path):
        term = write(tmp_path / "t.term", "(spine (rational))")
        code, rep = run(tmp_path, "classify", "--term", term)
        assert rep["report"] == {"verdict": "wild", "reason": "ii",
                                 "witness_path": [0], "n_star": None, "k_star": None}


class TestSynthRoundTrip:
    def test_tree_then_verify(self, tmp_path, tree_file):
        code, rep = run(tmp_path, "synth", "tree", "--structure", tree_file,
                        out="cert.json")
        assert code == 0
        code2, rep2 = run(tmp_path, "verify-cert", "--structure", tree_file,
                          "--cert", str(tmp_path / "cert.json"))
        assert code2 == 0
        assert rep2["report"]["accepted"]

    def test_verify_rejects_corruption(self, tmp_path, tree_file):
        run(tmp_path, "synth", "tree", "--structure", tree_file, out="cert.json")
        cert = json.loads((tmp_path / "cert.json").read_text())
        branches = cert["certificate"]["transcript"]["branches"]
        key = sorted(branches)[0]
        if branches[key]:
            branches[key] = branches[key][:-1]
        (tmp_path / "cert.json").write_text(json.dumps(cert))
        code, rep = run(tmp_path, "verify-cert", "--structure", tree_file,
                        "--cert", str(tmp_path / "cert.json"))
        assert code == 1
        assert not rep["report"]["accepted"]


class TestFalsify:
    def test_pair_witness_json(self, tmp_path, set3_file):
        code, rep = run(tmp_path, "falsify", "pair", "--structure", set3_file,
                        "--depth", "2")
        assert code == 1  # witness found while checking
        w = rep["witness"]
        assert w["pair"] == ["y", "z"] and w["depth"] == 2
        assert len(w["theory_sha256"]) == 64

    def test_pair_none_exit_zero(self, tmp_path):
        chain = write(tmp_path / "c.json",
                      {"kind": "chain", "elements": ["a", "b"],
                       "order": {"a": 0, "b": 1}, "predicates": []})
        code, rep = run(tmp_path, "falsify", "pair", "--structure", chain,
                        "--depth", "1")
        assert code == 0 and rep["witness"] is None

    def test_choice(self, tmp_path):
        chain = write(tmp_path / "c.json",
                      {"kind": "chain", "elements": ["a", "b", "c"],
                       "order": {"a": 0, "b": 1, "c": 2}, "predicates": []})
        good = write(tmp_path / "min.formula",
                     "(and (sing P0) (and (member P0 P1) (forall Y (or "
                     "(not (and (sing Y) (member Y P1))) (le P0 Y)))))")
        code, rep = run(tmp_path, "falsify", "choice", "--structure", chain,
                        "--formula", good)
        assert code == 0 and rep["report"]["defines_choice"]

    def test_mono(self, tmp_path):
        chain = write(tmp_path / "c.json",
                      {"kind": "chain", "elements": ["a", "b", "c", "d"],
                       "order": {"a": 0, "b": 1, "c": 2, "d": 3}, "predicates": []})
        code, rep = run(tmp_path, "falsify", "mono", "--structure", chain,
                        "--depth", "0", "--size", "3")
        assert code == 0 and rep["monochromatic"] == ["a", "b", "c"]


class TestTheoryCommands:
    def test_compute_and_reduce(self, tmp_path, tree_file):
        code, rep = run(tmp_path, "theory", "compute", "--structure", tree_file,
                        "--depth", "2", out="t2.json")
        assert code == 0
        (tmp_path / "just_theory.json").write_text(json.dumps(rep["theory"]))
        code2, rep2 = run(tmp_path, "theory", "reduce",
                          "--theory", str(tmp_path / "just_theory.json"),
                          "--depth", "1", out="t1.json")
        assert code2 == 0 and rep2["theory"]["rank"] == 1

    def test_sum(self, tmp_path):
        for name, ids in (("c1.json", ["a"]), ("c2.json", ["a", "b"])):
            write(tmp_path / name,
                  {"kind": "chain", "elements": ids,
                   "order": {e: i for i, e in enumerate(ids)}, "predicates": []})
        _, rep1 = run(tmp_path, "theory", "compute",
                      "--structure", str(tmp_path / "c1.json"), "--depth", "1",
                      out="o1.json")
        (tmp_path / "t1.json").write_text(json.dumps(rep1["theory"]))
        code, rep = run(tmp_path, "theory", "sum",
                        "--left", str(tmp_path / "t1.json"),
                        "--right", str(tmp_path / "t1.json"), out="sum.json")
        assert code == 0
        _, rep2 = run(tmp_path, "theory", "compute",
                      "--structure", str(tmp_path / "c2.json"), "--depth", "1",
                      out="o2.json")
        assert rep["theory"] == rep2["theory"]

    def test_realized_labeled(self, tmp_path):
        code, rep = run(tmp_path, "theory", "realized", "--depth", "1",
                        "--arity", "0", "--size-bound", "2", "--kind", "chain")
        assert code == 0 and rep["realized_only"] is True

    def test_guard_rails(self, tmp_path):
        big = write(tmp_path / "big.json",
                    {"kind": "set", "elements": [f"e{i}" for i in range(6)],
                     "order": None, "predicates": []})
        code = main(["theory", "compute", "--structure", big, "--depth", "3",
                     "--out", str(tmp_path / "never.json")])
        assert code == 2


class TestComposeAndDeterminism:
    def test_compose_verify_and_byte_identical_reruns(self, tmp_path):
        argv = ["compose", "verify", "--theorem", "1.12", "--seed", "5",
                "--pairs", "12", "--max-elements", "4", "-n", "1", "-m", "2"]
        code1 = main(argv + ["--out", str(tmp_path / "r1.json")])
        code2 = main(argv + ["--out", str(tmp_path / "r2.json")])
        assert code1 == code2 == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
        rep = json.loads((tmp_path / "r1.json").read_text())
        assert rep["fd_report"]["ok"] and rep["seed"] == 5

    def test_seed_required(self, tmp_path):
        code = main(["compose", "verify", "--theorem", "1.8",
                     "--out", str(tmp_path / "x.json")])
        assert code == 2

    def test_eval_direct(self, tmp_path, tree_file):
        f = write(tmp_path / "f.formula", "(exists X (sing X))")
        code, rep = run(tmp_path, "eval", "--formula", f, "--structure", tree_file)
        assert code == 0 and rep["value"] is True

    def test_scattered_pipeline(self, tmp_path):
        code, rep = run(tmp_path, "scattered", "catalog", "-n", "2", out="cat.json")
        term = write(tmp_path / "c2.term", rep["term"])
        code2, rep2 = run(tmp_path, "scattered", "hdeg", "--term", term)
        assert rep2["display"] == "2" and rep2["exactness"] == "exact"
        code3, rep3 = run(tmp_path, "scattered", "realize", "--term", term,
                          "--budget", "9", out="real.json")
        assert code3 == 0 and len(rep3["structure"]["elements"]) == 9

    def test_malformed_structure_exit_2(self, tmp_path):
        bad = write(tmp_path / "bad.json", {"kind": "chain", "elements": ["a"],
                                            "order": {"a": 0}, "oops": 1})
        code = main(["falsify", "pair", "--structure", bad, "--depth", "0",
                     "--out", str(tmp_path / "x.json")])
        assert code == 2

    def test_unknown_subcommand_exit_2(self):
        assert main(["frobnicate"]) == 2
