import random

import pytest

from oracles import tree_oracle
from pwidth.core.homs import is_isomorphic
from pwidth.core.terms import Atom
from pwidth.errors import ParseError, PreconditionError, ValidationError
from pwidth.pwtree.dsl import format_tree, parse_tree
from pwidth.pwtree.evaluate import (color_map_at, color_warnings, eval_tree, nonempty_colors, unfold,
                                    used_colors, validate_well_decorated, width_upper)
from pwidth.pwtree.generate import random_tree
from pwidth.pwtree.model import CAdd, Const, Node, PwTree, Recol, Star, URAdd
from pwidth.pwtree.normal import add_root_streak, is_normal, substitute_streak, to_normal, to_prenormal


def iso(a, b):
    return is_isomorphic(a, b) is not None


# parsing

def test_single_leaf():
    t = parse_tree("(const a)")
    assert len(t.nodes) == 1 and eval_tree(t).instance.atoms == {Atom("Top", ("a",))}


def test_fig1_structure(fig1):
    assert len(fig1.reachable()) == 7 and fig1.is_finite
    assert parse_tree(format_tree(fig1)) == fig1


def test_itern_star_structure(itern_star):
    inner = [n for n in itern_star.reachable() if not itern_star.nodes[n].is_pseudoleaf]
    assert len(inner) == 2 and not itern_star.is_finite
    assert parse_tree(format_tree(itern_star)) == itern_star


@pytest.mark.parametrize("text", [
    "(node [] (ref X) (star))",
    "(node [(cadd o1 o1 (1) o1)] (star) (star))",
    "@colors k/1\n(node [(recol 0 k o2)] (star) (star))",
    "(node [(radd o1 o1 (1 2) E)] (star) (star))",
])
def test_rejected_trees(text):
    with pytest.raises((ParseError, ValidationError)):
        parse_tree(text)


def test_parse_error_has_location():
    with pytest.raises(ParseError) as exc:
        parse_tree("(node [(cadd o1 o1 (1) o2)]\n  (star) (star")
    assert exc.value.line is not None


# validation

def test_fig1_valid(fig1):
    assert validate_well_decorated(fig1) == []
    assert color_warnings(fig1) == []


def test_pseudoleaf_with_instruction():
    t = PwTree({"r": Node({CAdd("o1", "o1", (1,), "o2"), Const("a")})}, "r")
    assert [v.kind for v in validate_well_decorated(t)] == ["pseudoleaf"]


def test_incompatible_pair():
    t = parse_tree("@colors k/2 m/2\n(node [(cadd o1 o1 (1) k) (cadd o1 o1 (1) m)] (star) (star))")
    assert [v.kind for v in validate_well_decorated(t)] == ["incompatible"]
    with pytest.raises(ValidationError):
        eval_tree(t)


def test_repeated_constant():
    t = parse_tree("(node [] (const a) (const a))")
    assert [v.kind for v in validate_well_decorated(t)] == ["constant"]


def test_constant_below_cycle():
    t = parse_tree("(def X (node [] (const a) (ref X)))\n(ref X)")
    assert "constant" in [v.kind for v in validate_well_decorated(t)]


def test_decorated_below_pseudoleaf():
    t = PwTree({"r": Node({Star()}, "c", None),
                "c": Node({URAdd(0, "o1", "A")}, None, None)}, "r")
    assert [v.kind for v in validate_well_decorated(t)] == ["descendant"]


# evaluation

def test_fig1_instance(fig1, fig1_instance):
    inst = eval_tree(fig1).instance
    assert len(inst.relation("E")) == 8
    assert iso(inst, fig1_instance)


def test_single_star():
    res = eval_tree(parse_tree("(star)"))
    assert res.instance.atoms == {Atom("Top", ("_ε",))}
    assert res.colormap == {"o1": {("_ε",)}}


def test_void_root():
    t = PwTree({}, None)
    assert eval_tree(t).instance.atoms == frozenset()


@pytest.mark.parametrize("depth", range(1, 7))
def test_itern_star_prefix(itern_star, depth):
    inst = eval_tree(unfold(itern_star, depth)).instance
    e = lambda n: "_" + "1" * n + "0"  # noqa: E731
    want = {Atom("R", ("_0", e(n), e(m))) for n in range(1, depth) for m in range(n, depth)}
    assert {a for a in inst.atoms if a.pred == "R"} == want
    assert inst == tree_oracle(unfold(itern_star, depth))[0]


def test_unfold_cases(fig1, itern_star):
    assert unfold(fig1, 5) is fig1
    u = unfold(itern_star, 4)
    inner = [n for n in u.reachable() if not u.nodes[n].is_pseudoleaf]
    assert len(inner) == 4 and u.node_at("1111") is None
    root_only = unfold(itern_star, 0)
    assert root_only.root is None


def test_unfold_monotone(itern_star):
    prev = set()
    for d in range(8):
        atoms = eval_tree(unfold(itern_star, d)).instance.atoms
        assert prev <= atoms
        prev = atoms


def test_color_maps(fig1):
    assert set(color_map_at(fig1, "00")) == {"o1", "o2"}
    assert color_map_at(fig1, "1") == {"lam": {("c",), ("_11",)}, "o2": {("c", "c"), ("_11", "_11")}}
    root = color_map_at(fig1, "")
    assert "o1" in root and ("c",) not in root["o1"]
    with pytest.raises(PreconditionError):
        color_map_at(fig1, "0000")


def test_recolour_exclusion():
    t = parse_tree("@colors k/1\n(node [(recol 0 o1 k)] (star) (star))")
    cmap = color_map_at(t, "")
    assert cmap["o1"] == {("_1",)} and cmap["k"] == {("_0",)}


def test_nonempty_colors(fig1, itern_star):
    leaf = fig1.node_at("00")
    assert nonempty_colors(fig1, leaf) == {"o1", "o2"}
    assert nonempty_colors(fig1, None) == set()
    e_node = itern_star.node_at("1")
    got = nonempty_colors(itern_star, e_node)
    assert {"kappa", "lam", "o3"} <= got
    u = unfold(itern_star, 8)
    assert got == set(color_map_at(u, "1"))


def test_used_colors(fig1, itern_star):
    assert used_colors(fig1) == {"o1", "o2", "lam"} and width_upper(fig1) == 3
    assert used_colors(parse_tree("(star)")) == {"o1"}
    assert used_colors(itern_star) == {"o1", "o2", "kappa", "lam"}


@pytest.mark.parametrize("seed", range(80))
def test_eval_against_reference(seed):
    t = random_tree(random.Random(seed))
    inst, root = tree_oracle(t)
    res = eval_tree(t)
    assert res.instance == inst
    assert {c: set(v) for c, v in res.colormap.items()} == root


@pytest.mark.parametrize("seed", range(30))
def test_parse_determinism(seed):
    t = random_tree(random.Random(seed))
    text = format_tree(t)
    assert iso(eval_tree(parse_tree(text)).instance, eval_tree(parse_tree(text)).instance)
    assert parse_tree(text) == t


# streaks

def test_trivial_streak(fig1):
    name = fig1.root
    t = substitute_streak(fig1, name, [set(fig1.nodes[name].instructions)])
    assert eval_tree(t).instance == eval_tree(fig1).instance


def test_equality_streak_at_leaf():
    t = parse_tree("(const a)")
    s = substitute_streak(t, t.root, [t.nodes[t.root].decorators, {URAdd(0, "o2", "B")}], signature={"B": 2})
    assert len(s.nodes) == 2
    assert eval_tree(s).instance.atoms == {Atom("Top", ("a",)), Atom("B", ("a", "a"))}


def random_streak(rng, tree):
    cols = sorted(tree.colors)
    out = []
    for _ in range(rng.randint(1, 3)):
        ins = set()
        used = set()
        for _ in range(rng.randint(1, 3)):
            a = rng.choice(cols)
            same = [c for c in cols if tree.colors[c] == tree.colors[a] and c != a]
            if rng.random() < 0.6 and same and (0, a) not in used:
                ins.add(Recol(0, a, rng.choice(same)))
                used.add((0, a))
            else:
                preds = [p for p, k in tree.signature.items() if k == tree.colors[a]]
                if preds:
                    ins.add(URAdd(0, a, rng.choice(preds)))
        out.append(ins)
    return out


@pytest.mark.parametrize("seed", range(60))
def test_streak_matches_sequential_oracle(seed):
    rng = random.Random(seed)
    t = random_tree(rng)
    inner = [n for n in t.reachable() if not t.nodes[n].is_pseudoleaf]
    if not inner:
        return
    n = rng.choice(inner)
    streak = [set(t.nodes[n].instructions)] + random_streak(rng, t)
    got = eval_tree(substitute_streak(t, n, streak)).instance
    want = tree_oracle(t, {n: streak})[0]
    assert iso(got, want)


def test_streak_errors(fig1):
    with pytest.raises(PreconditionError):
        substitute_streak(fig1, "nope", [set()])
    with pytest.raises(PreconditionError):
        substitute_streak(fig1, fig1.root, [])


def test_root_streak_keeps_semantics(fig1):
    t = add_root_streak(fig1, [set(), {URAdd(0, "lam", "A")}], signature={"A": 1})
    inst = eval_tree(t).instance
    assert len(inst.relation("A")) == 2 and ("c",) in inst.relation("A")
    assert iso(inst.restrict(set(fig1.signature)), eval_tree(fig1).instance)


# normal forms

def test_fig1_already_normal(fig1):
    assert to_prenormal(fig1) is fig1
    assert to_normal(fig1) is fig1 and is_normal(fig1)


def test_high_uradd_prenormalised():
    t = parse_tree("@colors k/2\n@sig R/2\n(node [(uradd 0 k R)] (node [(recol 0 o2 k)] (const a) (void)) (const b))")
    pre = to_prenormal(t)
    assert pre is not t
    assert eval_tree(pre).instance == eval_tree(t).instance
    norm = to_normal(t)
    assert is_normal(norm)
    assert eval_tree(norm).instance == eval_tree(t).instance
    assert not any(isinstance(d, URAdd) and d.source == "k" for n in norm.nodes.values() for d in n.decorators)


def test_redundant_uradd_dropped():
    t = parse_tree("@sig R/2\n(node [(radd o1 o1 (1) R) (uradd 0 o2 R)] (node [(uradd 0 o2 R)] (const a) (void)) (const b))")
    norm = to_normal(t)
    assert eval_tree(norm).instance == eval_tree(t).instance
    assert is_normal(norm)


@pytest.mark.parametrize("seed", range(120))
def test_normal_form_invariance(seed):
    t = random_tree(random.Random(seed))
    norm = to_normal(t)
    assert is_normal(norm)
    assert iso(eval_tree(norm).instance, eval_tree(t).instance)


def test_atoms_are_permanent(fig1):
    from pwidth.pwtree.evaluate import all_color_maps

    inst, maps = all_color_maps(fig1)
    assert Atom("E", ("a", "b")) in inst.atoms
    assert set(maps) == {a for a, _ in fig1.addresses()}
