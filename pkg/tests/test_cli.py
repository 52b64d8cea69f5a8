import subprocess
import sys

import pytest

from conftest import DATA, read
from oracles import nx_isomorphic, tree_oracle
from pwidth.chase.rules import parse_rules
from pwidth.chase.tm import gen_tm_ruleset, parse_tm
from pwidth.cli import instance_dot, main
from pwidth.core.instance import Instance, parse_instance
from pwidth.core.terms import Atom
from pwidth.cw import parse_cw
from pwidth.pwtree.dsl import parse_tree
from pwidth.pwtree.evaluate import unfold

GOLDEN = DATA / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def body(text: str) -> str:
    return "".join(ln + "\n" for ln in text.splitlines() if not ln.startswith("#"))


def comments(text: str) -> list[str]:
    return [ln[2:] for ln in text.splitlines() if ln.startswith("# ")]


# eval-tree

def test_eval_fig1(capsys):
    code, out, _ = run(capsys, "eval-tree", "--tree", DATA / "fig1.tree")
    assert code == 0
    inst = parse_instance(out)
    assert len(inst.relation("E")) == 8 and len(inst.adom) == 4
    assert nx_isomorphic(inst, parse_instance(read("fig1.atoms")))
    assert "width_upper: 3" in comments(out)


def test_eval_void_root(tmp_path, capsys):
    f = tmp_path / "void.tree"
    f.write_text("(void)\n")
    code, out, _ = run(capsys, "eval-tree", "--tree", f)
    assert code == 0 and parse_instance(out) == Instance()


def test_eval_itern_star_golden(tmp_path, capsys):
    out_file = tmp_path / "out.atoms"
    code, out, _ = run(capsys, "eval-tree", "--tree", DATA / "itern_star.tree", "--depth", 5, "--out", out_file)
    assert code == 0
    assert out_file.read_text() == (GOLDEN / "itern_star_d5.atoms").read_text()
    assert out == (GOLDEN / "itern_star_d5.summary").read_text()
    # the golden file agrees with the reference evaluator
    ref, _ = tree_oracle(unfold(parse_tree(read("itern_star.tree")), 5))
    assert parse_instance(out_file.read_text()) == ref


def test_eval_regular_tree_needs_depth(capsys):
    code, _, err = run(capsys, "eval-tree", "--tree", DATA / "itern_star.tree")
    assert code == 2 and "--depth" in err


def test_eval_dot_format(capsys):
    code, out, _ = run(capsys, "eval-tree", "--tree", DATA / "fig1.tree", "--format", "dot")
    assert code == 0 and out.startswith("digraph instance {")


def test_parse_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.tree"
    f.write_text("(node [] (const a)\n")
    assert run(capsys, "eval-tree", "--tree", f)[0] == 1
    assert run(capsys, "eval-tree", "--tree", tmp_path / "missing.tree")[0] == 1


def test_validation_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.tree"
    f.write_text("@colors k/2 m/2\n(node [(cadd o1 o1 (1) k) (cadd o1 o1 (1) m)] (star) (star))\n")
    assert run(capsys, "eval-tree", "--tree", f)[0] == 2


# transform

@pytest.mark.parametrize("extra", [
    ["--op", "equality"],
    ["--op", "varintro", "--pred", "E"],
    ["--op", "permute", "--pred", "E", "--perm", "2,1"],
    ["--op", "permute", "--pred", "E", "--perm", "1,2"],
    ["--op", "complement", "--pred", "E"],
    ["--op", "union", "--pred", "E", "--pred2", "E"],
    ["--op", "project", "--pred", "E", "--pos", "1"],
    ["--op", "fo", "--formula", "exists ?z . E(?x,?z) & E(?z,?y)", "--vars", "?x,?y"],
    ["--op", "rpe", "--rpe", "(E>)*"],
], ids=lambda a: "-".join(a[1:4:2]))
def test_transform_verified(tmp_path, capsys, extra):
    out_file = tmp_path / "out.tree"
    code, out, _ = run(capsys, "transform", "--tree", DATA / "fig1.tree", "--fresh", "New", "--verify",
                       "--out", out_file, *extra)
    assert code == 0
    assert comments(out) == ["verified: isomorphic to the semantic extension"]
    assert "New" in parse_tree(out_file.read_text()).signature


def test_transform_identity_permutation_is_copy(tmp_path, capsys):
    out_file = tmp_path / "out.tree"
    run(capsys, "transform", "--tree", DATA / "fig1.tree", "--fresh", "New", "--op", "permute", "--pred", "E",
        "--perm", "1,2", "--out", out_file)
    code, out, _ = run(capsys, "eval-tree", "--tree", out_file)
    inst = parse_instance(out)
    assert inst.relation("New") == inst.relation("E")


def test_transform_missing_argument(capsys):
    assert run(capsys, "transform", "--tree", DATA / "fig1.tree", "--op", "union", "--pred", "E",
               "--fresh", "N")[0] == 1


# chase and friends

def test_chase_empty_database_echoed(tmp_path, capsys):
    db = tmp_path / "empty.atoms"
    db.write_text("")
    code, out, _ = run(capsys, "chase", "--db", db, "--rules", DATA / "rbio.rules", "--fixpoint")
    assert code == 0
    assert parse_instance(out).atoms == frozenset()
    assert "status: fixpoint" in comments(out)


def test_chase_budget_and_strata(tmp_path, capsys):
    db = tmp_path / "d.atoms"
    db.write_text("Individual(a).\n")
    code, out, _ = run(capsys, "chase", "--db", db, "--rules", DATA / "rbio.rules", "--steps", 3)
    assert code == 0 and "status: budget-exhausted" in comments(out)
    assert Atom("Mother", ("a", "_z0_y_" + out.split("Mother(a,_z0_y_")[1].split(")")[0])) in parse_instance(out)
    code, out2, _ = run(capsys, "chase", "--db", db, "--rules", DATA / "rbio.rules", "--steps", 3, "--strata")
    assert code == 0


def test_chase_output_is_byte_identical(tmp_path):
    db = tmp_path / "d.atoms"
    db.write_text("A(0).\n")
    rules = tmp_path / "grid.rules"
    rules.write_text("A(?x) -> exists ?y . E(?x,?y).\nE(?x,?y) -> A(?y).\nA(?x), A(?y) -> exists ?z . R(?x,?y,?z).\n")
    outs = [subprocess.run([sys.executable, "-m", "pwidth.cli", "chase", "--db", str(db), "--rules", str(rules),
                            "--steps", "6"], capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1] and len(outs[0]) > 100


def test_entail_yes_with_certificate(tmp_path, capsys):
    db = tmp_path / "d.atoms"
    db.write_text("Individual(a).\n")
    q = tmp_path / "q.txt"
    q.write_text("exists ?y . Ancestor(a,?y), Female(?y)\n")
    cert = tmp_path / "cert.atoms"
    code, out, _ = run(capsys, "entail", "--db", db, "--rules", DATA / "rbio.rules", "--query", q,
                       "--certificate", cert)
    assert code == 0 and out.splitlines()[0] == "YES"
    assert any(c.startswith("certificate (chase prefix)") for c in comments(out))
    assert parse_instance(cert.read_text()).relation("Ancestor")


def test_entail_no_and_unknown(tmp_path, capsys):
    db = tmp_path / "d.atoms"
    db.write_text("A(a).\n")
    rules = tmp_path / "r.rules"
    rules.write_text("A(?x) -> exists ?y . E(?x,?y).\nE(?x,?y) -> A(?y).\n")
    q = tmp_path / "q.txt"
    q.write_text("exists ?x . E(?x,?x)\n")
    code, out, _ = run(capsys, "entail", "--db", db, "--rules", rules, "--query", q)
    assert code == 0 and out.splitlines()[0] == "NO"
    code, out, _ = run(capsys, "entail", "--db", db, "--rules", rules, "--query", q, "--max-steps", 1,
                       "--max-fresh", 0)
    assert code == 0 and out.splitlines()[0] == "UNKNOWN"


def test_cut_rbio(capsys):
    code, out, _ = run(capsys, "cut", "--rules", DATA / "rbio.rules", "--partition", "1,2,3,4,5,6,7,8,9|10,11|12|13,14")
    assert (code, out.splitlines()[0]) == (0, "true")
    assert run(capsys, "cut", "--rules", DATA / "rbio.rules")[1].startswith("true")
    code, out, _ = run(capsys, "cut", "--rules", DATA / "rbio.rules", "--partition", "13,14|12|10,11|1,2,3,4,5,6,7,8,9")
    assert (code, out.splitlines()[0]) == (2, "false")
    code, out, _ = run(capsys, "cut", "--rules", DATA / "rbio.rules", "--layering")
    assert out == "1,2,3,4,5,6,7,8,9|10|11|12|13,14\n"
    assert run(capsys, "cut", "--rules", DATA / "rbio.rules", "--partition", "1,2|3")[0] == 2
    assert run(capsys, "cut", "--rules", DATA / "rbio.rules", "--partition", "a|b")[0] == 1


def test_gen_tm_golden(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-tm", "--tm", DATA / "halting.tm")
    assert code == 0
    assert out == (GOLDEN / "halting.rules").read_text()
    rs = parse_rules(out)
    assert len(rs) == 12
    assert rs.rules == gen_tm_ruleset(parse_tm(read("halting.tm"))).rules


def test_pw2cw(capsys):
    code, out, _ = run(capsys, "pw2cw", "--tree", DATA / "fig1.tree", "--verify")
    assert code == 0
    parse_cw(body(out))
    assert "cw colors: 7" in comments(out)


def test_core(tmp_path, capsys):
    db = tmp_path / "d.atoms"
    db.write_text("E(a,_1).\nE(a,_2).\nE(_2,_3).\n")
    code, out, _ = run(capsys, "core", "--db", db)
    assert code == 0
    assert parse_instance(out) == parse_instance("E(a,_2).\nE(_2,_3).\n")


def test_dot(capsys):
    code, out, _ = run(capsys, "dot", "--tree", DATA / "itern_star.tree")
    assert code == 0 and out.startswith("digraph tree {") and "peripheries=2" in out
    code, out, _ = run(capsys, "dot", "--db", DATA / "fig1.atoms")
    assert code == 0 and out.count("->") == 8
    assert run(capsys, "dot")[0] == 1


def test_dot_hyperedges():
    text = instance_dot(parse_instance("R(a,b,_1).\nA(a).\n"))
    assert 'h0 [shape=box, label="R"];' in text
    assert 'h0 -> "_1" [label="3"];' in text
    assert '"a" [shape=box, label="a\\nA"];' in text


def test_unknown_flag_rejected(capsys):
    assert run(capsys, "core", "--db", DATA / "fig1.atoms", "--bogus")[0] == 1
    assert run(capsys)[0] == 1
