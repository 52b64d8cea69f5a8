import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_core_size, brute_homs, closure, nx_isomorphic, relational
from pwidth.core import fo
from pwidth.core.homs import apply_subst, core, find_homomorphisms, has_homomorphism, is_isomorphic
from pwidth.core.instance import Instance, parse_instance, serialize_instance, unary_replace
from pwidth.core.rpe import Backward, Concat, Forward, Star, Union_, parse_rpe, rpe_eval, rpe_extend
from pwidth.core.terms import TOP, Atom, Var
from pwidth.errors import ParseError, PreconditionError

x, y, z = Var("x"), Var("y"), Var("z")


def inst(text):
    return parse_instance(text)


# instances

def test_top_is_materialised():
    i = inst("E(a,_1).")
    assert Atom(TOP, ("a",)) in i and Atom(TOP, ("_1",)) in i
    assert i.adom == {"a", "_1"} and i.constants == {"a"} and i.nulls == {"_1"}


def test_arity_enforced():
    with pytest.raises(PreconditionError):
        Instance([Atom("E", ("a", "b")), Atom("E", ("a",))])


def test_parse_serialize_round_trip():
    text = "@sig E/2 F/1\nE(a,_1).\nE(b,c).\n# comment\n"
    i = inst(text)
    assert "F" in i.signature
    assert parse_instance(serialize_instance(i)) == i


def test_parse_error_location():
    with pytest.raises(ParseError) as exc:
        inst("E(a,b).\nE(a b).")
    assert exc.value.line == 2


# homomorphisms

def test_single_atom_match():
    assert find_homomorphisms({Atom("E", (x, y))}, inst("E(a,b).")) == [{x: "a", y: "b"}]


def test_transitivity_body():
    body = {Atom("Ancestor", (x, y)), Atom("Ancestor", (y, z))}
    homs = find_homomorphisms(body, inst("Ancestor(a,b).\nAncestor(b,c)."))
    assert homs == [{x: "a", y: "b", z: "c"}]
    assert len(brute_homs(body, inst("Ancestor(a,b).\nAncestor(b,c)."))) == 1


def test_unmatched_constant():
    assert find_homomorphisms({Atom("E", ("a", x))}, inst("E(b,c).")) == []


def test_seed_respected():
    homs = find_homomorphisms({Atom("E", (x, y))}, inst("E(a,b).\nE(c,d)."), {x: "c"})
    assert homs == [{x: "c", y: "d"}]


def random_instance(rng, n_terms=4, n_atoms=6, nulls=True):
    terms = [f"c{i}" for i in range(n_terms)]
    if nulls:
        terms += [f"_n{i}" for i in range(rng.randint(0, 3))]
    atoms = set()
    for _ in range(n_atoms):
        if rng.random() < 0.7:
            atoms.add(Atom("E", (rng.choice(terms), rng.choice(terms))))
        else:
            atoms.add(Atom("A", (rng.choice(terms),)))
    return Instance(atoms, {"E": 2, "A": 1})


@pytest.mark.parametrize("seed", range(40))
def test_hom_enumeration_matches_brute_force(seed):
    rng = random.Random(seed)
    dst = random_instance(rng, 3, 6, nulls=False)
    vs = [Var(f"v{i}") for i in range(3)]
    src = {Atom("E", (rng.choice(vs), rng.choice(vs))) for _ in range(rng.randint(1, 3))}
    if rng.random() < 0.5:
        src.add(Atom("A", (rng.choice(vs),)))
    got = find_homomorphisms(src, dst)
    want = brute_homs(src, dst)
    key = lambda h: sorted((str(k), v) for k, v in h.items())  # noqa: E731
    assert sorted(map(key, got)) == sorted(map(key, want))
    assert len({tuple(key(h)) for h in got}) == len(got)


@pytest.mark.parametrize("seed", range(20))
def test_hom_composition(seed):
    rng = random.Random(seed)
    i1, i2, i3 = (random_instance(rng, 3, 5) for _ in range(3))
    for h in find_homomorphisms(i1.atoms, i2)[:5]:
        img = apply_subst(i1.atoms, h)
        assert img <= i2.atoms
        for g in find_homomorphisms(i2.atoms, i3)[:5]:
            assert apply_subst(img, g) <= i3.atoms


# isomorphism

def test_iso_identity():
    i = inst("E(a,_1).\nE(_1,_2).")
    assert is_isomorphic(i, i) == {"a": "a", "_1": "_1", "_2": "_2"}


def test_iso_null_renaming():
    h = is_isomorphic(inst("E(_1,_2)."), inst("E(_7,_8)."))
    assert h == {"_1": "_7", "_2": "_8"}


def test_iso_constants_differ():
    assert is_isomorphic(inst("E(a,_1)."), inst("E(b,_1).")) is None


@pytest.mark.parametrize("seed", range(60))
def test_iso_matches_networkx(seed):
    rng = random.Random(seed)
    i1 = random_instance(rng, 2, 6)
    perm = list(i1.nulls)
    shuffled = perm[:]
    rng.shuffle(shuffled)
    i2 = i1.rename({a: "_r" + b[1:] for a, b in zip(perm, shuffled)})
    if rng.random() < 0.5:
        i2 = random_instance(rng, 2, 6)
    got = is_isomorphic(i1, i2)
    assert (got is not None) == nx_isomorphic(i1, i2)
    if got is not None:
        assert apply_subst(i1.atoms, got) == i2.atoms


# cores

def test_core_without_nulls():
    i = inst("E(a,b).\nE(b,a).")
    assert core(i) == i


def test_core_folds_null():
    assert core(inst("E(a,_1).\nE(a,a).")) == inst("E(a,a).")


def test_core_full_constant_part():
    full = "\n".join(f"Halt({p},{q})." for p in "ab" for q in "ab")
    i = inst(full + "\nHalt(a,_1).\nHalt(_1,_2).")
    assert core(i) == inst(full)


@pytest.mark.parametrize("seed", range(30))
def test_core_against_endomorphism_oracle(seed):
    rng = random.Random(seed)
    i = random_instance(rng, 2, 6)
    c = core(i)
    assert c.atoms <= i.atoms
    assert has_homomorphism(i.atoms, c) and has_homomorphism(c.atoms, i)
    assert len(c.atoms) == brute_core_size(i)
    assert is_isomorphic(core(c), c) is not None


# unary replacement

def test_unary_replace_cases():
    i = inst("A(a).\nE(a,b).")
    assert unary_replace(i, "A", {"a"}) == i
    assert unary_replace(i, "A", set()) == Instance([Atom("E", ("a", "b"))], i.signature)
    j = unary_replace(i, "A", {"b"})
    assert j.atoms == (i.atoms - {Atom("A", ("a",))}) | {Atom("A", ("b",))}
    with pytest.raises(PreconditionError):
        unary_replace(i, "A", {"zz"})


# path expressions

def test_rpe_steps():
    i = inst("P(a,b).")
    assert rpe_eval(Forward("P"), i) == {("a", "b")}
    assert rpe_eval(Backward("P"), i) == {("b", "a")}


def test_rpe_star_chain():
    i = inst("P(a,b).\nP(b,c).")
    got = rpe_eval(Star(Forward("P")), i)
    assert got == closure({("a", "b"), ("b", "c")}, i.adom)
    assert len(got) == 6


def test_rpe_transitivity_pattern():
    i = inst("P(a,b).\nP(b,c).\nP(c,d).")
    e = parse_rpe("P> P> (P>)*")
    out = rpe_extend(i, "P", e)
    assert out.relation("P") == closure(i.relation("P"), i.adom, reflexive=False)


def test_rpe_friend_enemy():
    i = inst("Friend(a,b).\nEnemy(b,c).\nFriend(c,a).")
    out = rpe_extend(i, "Enemy", parse_rpe("Friend> Enemy>"))
    assert out.atoms - i.atoms == {Atom("Enemy", ("a", "c"))}


def test_rpe_empty_and_binary_check():
    i = inst("P(a,b).")
    assert rpe_extend(i, "Q", parse_rpe("Q>")).atoms == i.atoms
    with pytest.raises(PreconditionError):
        rpe_extend(inst("A(a)."), "A", Forward("P"))


def test_rpe_star_is_least_fixpoint():
    rng = random.Random(5)
    for _ in range(20):
        i = random_instance(rng, 4, 7)
        base = rpe_eval(Union_(Forward("E"), Backward("E")), i)
        star = rpe_eval(Star(Union_(Forward("E"), Backward("E"))), i)
        assert star == closure(base, i.adom)
        composed = {(a, c) for a, b in star for b2, c in star if b == b2}
        assert composed == star


# first-order formulas

def test_fo_atomic_and_exists():
    i = inst("E(a,b).")
    assert fo.eval_fo(i, fo.parse_fo("E(?x,?y)"), {x: "a", y: "b"})
    assert fo.eval_fo(i, fo.parse_fo("exists ?x . Top(?x)"), {})
    with pytest.raises(PreconditionError):
        fo.eval_fo(i, fo.parse_fo("E(?x,?y)"), {x: "a"})


def test_defined_relation_examples():
    i = inst("A(a).\nE(a,b).\nE(b,c).")
    x1 = Var("x1")
    assert fo.defined_relation(i, fo.parse_fo("?x1 = ?x1"), [x1]) == {(t,) for t in i.adom}
    assert fo.defined_relation(i, fo.parse_fo("~A(?x1)"), [x1]) == {("b",), ("c",)}


def test_worked_rewriting_formula():
    i = inst("R(a,b,a).\nR(b,b,b).\nR(a,c,b).\nR(c,a,c).\nR(b,a,c).")
    f = fo.parse_fo("exists ?x3 . R(?x1,?x2,?x3) & ?x1 = ?x3")
    got = fo.defined_relation(i, f, [Var("x1"), Var("x2")])
    assert got == {("a", "b"), ("b", "b"), ("c", "a")}


def test_fo_extend_cases():
    i = inst("A(a).\nA(b).\nB(c).\nB(d).")
    assert fo.fo_extend(i, "F", fo.parse_fo("false & A(?x)"), [x]).atoms == i.atoms
    out = fo.fo_extend(i, "P", fo.parse_fo("A(?x) & B(?y)"))
    assert len(out.relation("P")) == 4
    with pytest.raises(PreconditionError):
        fo.fo_extend(i, "A", fo.parse_fo("E(?x,?y)"))


def random_formula(rng, vs, depth):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.5:
            return fo.FAtom("E", (rng.choice(vs), rng.choice(vs)))
        if r < 0.8:
            return fo.FAtom("A", (rng.choice(vs),))
        return fo.Eq(rng.choice(vs), rng.choice(vs))
    r = rng.random()
    if r < 0.2:
        return fo.Not(random_formula(rng, vs, depth - 1))
    if r < 0.45:
        return fo.And(random_formula(rng, vs, depth - 1), random_formula(rng, vs, depth - 1))
    if r < 0.7:
        return fo.Or(random_formula(rng, vs, depth - 1), random_formula(rng, vs, depth - 1))
    q = fo.Exists if r < 0.85 else fo.Forall
    return q(rng.choice(vs), random_formula(rng, vs, depth - 1))


@pytest.mark.parametrize("seed", range(60))
def test_fo_against_relational_oracle(seed):
    rng = random.Random(seed)
    i = random_instance(rng, rng.randint(1, 4), 6)
    vs = [Var("x1"), Var("x2"), Var("x3")]
    f = random_formula(rng, vs, 3)
    rel, fv = relational(i, f)
    got = fo.defined_relation(i, f, fv)
    assert {frozenset(zip(fv, t)) for t in got} == rel


@pytest.mark.parametrize("seed", range(20))
def test_fo_respects_isomorphism(seed):
    rng = random.Random(seed)
    i = random_instance(rng, 3, 6)
    ren = {n: "_m" + n[2:] for n in i.nulls}
    j = i.rename(ren)
    sigma = is_isomorphic(i, j)
    f = random_formula(rng, [Var("x1"), Var("x2")], 3)
    fv = fo.free_vars(f)
    for t in fo.defined_relation(i, f, fv):
        assert fo.eval_fo(j, f, {v: sigma[a] for v, a in zip(fv, t)})


def test_fo_parse_round_trip():
    for text in ["exists ?x3 . R(?x1,?x2,?x3) & ?x1 = ?x3", "forall ?y . A(?y) -> B(?y)", "~(A(?x) | true)"]:
        f = fo.parse_fo(text)
        assert fo.parse_fo(fo.format_fo(f)) == f


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc_1"), st.sampled_from("abc_2")), min_size=1, max_size=6))
def test_extensions_never_remove_atoms(pairs):
    i = Instance([Atom("E", (p, q)) for p, q in pairs])
    assert i.atoms <= rpe_extend(i, "E", Star(Concat(Forward("E"), Backward("E")))).atoms
    assert i.atoms <= fo.fo_extend(i, "F", fo.parse_fo("~E(?x,?y)")).atoms
