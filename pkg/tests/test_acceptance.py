"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line with its wall time."""
import functools
import itertools
import random
import time

from chase_fixtures import (BOUNDED, DOVETAIL, GRID, HALTING_TM, LAYERED, LOOPER_TM, PHI_H, boolean, db,
                            dovetail_case, random_db)
from conftest import read
from gen import random_formula, random_rpe
from oracles import closure, fo_extension, nx_isomorphic, path_extension, tree_oracle
from pwidth.chase.deps import YES, validate_cut
from pwidth.chase.engine import EXHAUSTED, FIXPOINT, chase, chase_iter, layered_chase
from pwidth.chase.entail import Countermodel, entail_bcq_chase, entail_dovetail, verify_certificate
from pwidth.chase.rewrite import datalog_rewrite
from pwidth.chase.rules import parse_rules
from pwidth.chase.tm import all_atoms_instance, gen_tm_ruleset, halt_atoms, parse_tm, state_pred
from pwidth.core import fo
from pwidth.core.homs import core, has_homomorphism, is_isomorphic
from pwidth.core.instance import Instance, parse_instance
from pwidth.core.rpe import Concat, Forward, Star, rpe_eval, rpe_extend, star_depth
from pwidth.core.terms import Atom, Var, shuffle
from pwidth.cw import cw_colors, eval_cw, parse_cw, pw_to_cw
from pwidth.pwtree.dsl import parse_tree
from pwidth.pwtree.evaluate import address_tree, color_map_at, eval_tree, validate_well_decorated
from pwidth.pwtree.generate import random_tree
from pwidth.pwtree.normal import is_normal, to_normal
from pwidth.queries import eval_mddl, eval_query, eval_ucq, parse_query
from pwidth.transforms.closure import lambda_star, rpe_extend_tree
from pwidth.transforms.compile import compile_fo_to_tree
from pwidth.transforms.perm import all_perms, cut, identity, remove_position
from test_cw import SECTION_EXPR
from test_queries import NON3COL, graph, random_mddl, three_colourable
from test_shuffle import all_cases, place_then_fill
from test_transforms import _primitive_cases

RESULTS: list = []
X1, X2, X3 = Var("x1"), Var("x2"), Var("x3")


def criterion(number: int, title: str, limit: float):
    """Record PASS/FAIL and elapsed time; a run over ``limit`` seconds fails."""
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            start = time.perf_counter()
            ok = False
            try:
                fn()
                elapsed = time.perf_counter() - start
                assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
                ok = True
            finally:
                elapsed = time.perf_counter() - start
                line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {elapsed:7.2f}s  {title}"
                RESULTS.append(line)
                print(line)
        return run
    return wrap


def iso(a, b):
    return is_isomorphic(a, b) is not None


def inst(tree):
    return eval_tree(tree).instance


@criterion(1, "shuffling: worked example and exhaustive oracle, |a|+|b| <= 5", 1)
def test_c01_shuffle():
    assert shuffle(("a1", "a2"), ("b1", "b2", "b3"), {2, 5}) == ("b1", "a1", "b2", "b3", "a2")
    count = 0
    for a, b, pos in all_cases(5):
        assert shuffle(a, b, pos) == place_then_fill(a, b, pos)
        count += 1
    assert count == 57


@criterion(2, "fig1 example round trip through the tree, the cw expression and pw_to_cw", 1)
def test_c02_fig1_round_trip():
    tree = parse_tree(read("fig1.tree"))
    figure = parse_instance(read("fig1.atoms"))
    assert len(figure.relation("E")) == 8
    got = inst(tree)
    assert iso(got, figure) and nx_isomorphic(got, figure)
    assert iso(eval_cw(parse_cw(SECTION_EXPR)), figure)
    r = pw_to_cw(tree)
    unary = [c for c, k in tree.colors.items() if k == 1]
    assert len(r.colors) == 3 * len(unary) + 1
    assert cw_colors(r.expr) <= set(r.colors)
    assert iso(eval_cw(r.expr), figure)


@criterion(3, "FO transforms: six primitives and compile_fo_to_tree on 200 random trees", 300)
def test_c03_fo_transforms():
    checked = 0
    for seed in range(200):
        rng = random.Random(seed)
        t = random_tree(rng, max_colors=4, max_height=5, max_preds=3, max_arity=3)
        base = inst(t)
        names = set()
        for name, out, f, xs in _primitive_cases(t, rng):
            assert not validate_well_decorated(out), (seed, name)
            assert iso(inst(out), fo_extension(base, "B", f, xs)), (seed, name)
            names.add(name)
            checked += 1
        assert names >= {"equality", "varintro", "complement", "union", "permute"}
        vs = [X1, X2, X3]
        f = random_formula(rng, dict(t.signature), vs, 3)
        xs = tuple(v for v in vs if v in set(fo.free_vars(f))) or (X1,)
        assert iso(inst(compile_fo_to_tree(t, f, xs, "B")), fo_extension(base, "B", f, xs)), (seed, "compile")
        checked += 1
    assert checked >= 200 * 6


@criterion(4, "remove_position identity for every permutation and position, n <= 5", 10)
def test_c04_remove_position():
    for n in range(2, 6):
        t = tuple(f"t{j}" for j in range(1, n + 1))
        perms = list(all_perms(n))
        assert len(perms) == len(list(itertools.permutations(range(n))))
        for pi in perms:
            for i in range(1, n + 1):
                assert remove_position(pi, i).apply(cut(t, i)) == cut(pi.apply(t), pi(i))
    assert remove_position(identity(3), 2) == identity(2)


@criterion(5, "2RPE: lambda_star on 100 trees and rpe_extend_tree at star depth <= 2", 300)
def test_c05_rpe():
    for seed in range(100):
        rng = random.Random(seed)
        t = random_tree(rng, binary_color="lam")
        base = inst(t)
        lam = color_map_at(address_tree(t), "").get("lam", set())
        marked = Instance(base.atoms | {Atom("Lam", p) for p in lam}, {**base.signature, "Lam": 2})
        plus = rpe_eval(Concat(Forward("Lam"), Star(Forward("Lam"))), marked)
        assert plus == closure(lam, base.adom, reflexive=False)
        assert iso(inst(lambda_star(t, "lam", "S")), path_extension(base, "S", plus)), seed
        e = random_rpe(rng, t.signature, 3)
        assert star_depth(e) <= 2
        assert iso(inst(rpe_extend_tree(t, "Q", e)), rpe_extend(base, "Q", e)), (seed, str(e))


@criterion(6, "normal forms preserve the denoted instance on the random tree corpus", 60)
def test_c06_normal_forms():
    for seed in range(200):
        t = random_tree(random.Random(seed))
        norm = to_normal(t)
        assert is_normal(norm)
        assert iso(inst(norm), inst(t)), seed
        assert inst(t) == tree_oracle(t)[0], seed


@criterion(7, "layered chase equals the chase on 10 stratified fixtures", 60)
def test_c07_layered_chase():
    assert len(LAYERED) == 10 and LAYERED[0][0] == "rbio-fragment"
    for name, text, data in LAYERED:
        rs = parse_rules(text)
        blocks = [[i for i, s in enumerate(rs.strata) if s == k] for k in sorted(set(rs.strata))]
        assert validate_cut(rs, blocks)[0], name
        a = chase(db(data), rs)
        b = layered_chase(db(data), rs.partition(blocks))
        assert a.status == b.status == FIXPOINT, name
        assert a.instance.atoms == b.instance.atoms, name


def grid_instance(n: int) -> Instance:
    atoms = [Atom("A", (str(i),)) for i in range(n)] + [Atom("E", (str(i), str(i + 1))) for i in range(n - 1)]
    atoms += [Atom("R", (str(i), str(j), f"p{i}_{j}")) for i in range(n) for j in range(n)]
    return Instance(atoms)


@criterion(8, "grid ruleset: 200-atom prefix embeds into the grid, phi_H entailed", 10)
def test_c08_grid():
    rs = parse_rules(GRID)
    r = chase(db("A(0)."), rs, max_steps=None, max_atoms=200)
    assert r.status == EXHAUSTED and len(r.instance.atoms) >= 200
    assert has_homomorphism(r.instance.atoms, grid_instance(r.steps + 2))
    assert eval_query(r.instance, boolean(PHI_H))
    e = entail_bcq_chase(db("A(0)."), rs, boolean(PHI_H), max_steps=None, max_atoms=200)
    assert e.verdict == YES and verify_certificate(db("A(0)."), rs, boolean(PHI_H), e)


@criterion(9, "UCQ rewriting agrees with the chase fixpoint on 50 random databases", 60)
def test_c09_rewriting():
    mismatches = 0
    for name, text, queries, sig in BOUNDED:
        rng = random.Random(name)
        rs = parse_rules(text)
        for qt in queries:
            q = parse_query(qt)
            u, bounded = datalog_rewrite(q, rs)
            assert bounded, (name, qt)
            for _ in range(50):
                data = random_db(rng, sig)
                assert len(data.adom) <= 4
                full = chase(data, rs, max_steps=None, max_atoms=None)
                assert full.status == FIXPOINT
                for tup in itertools.product(sorted(data.adom | rs.constants), repeat=q.arity):
                    mismatches += eval_ucq(full.instance, q, tup) != eval_ucq(data, u, tup)
    assert mismatches == 0


@criterion(10, "TM reduction: halting core and looper grid within 500 atoms", 30)
def test_c10_tm():
    m = parse_tm(HALTING_TM)
    final = n = None
    for st in chase_iter(db("Top(d)."), gen_tm_ruleset(m), max_steps=8):
        now = st.instance
        if final is None and any(a.pred == state_pred("qf") for a in now.atoms):
            final = st.step
        if n is None and any(set(halt_atoms(m, t, t)) <= now.atoms for t in now.adom):
            n = st.step
        if n is not None and st.step == n + 1:
            break
    assert final is not None and n is not None
    assert core(now) == Instance(all_atoms_instance(m, {"c", "d"}))

    loop = parse_tm(LOOPER_TM)
    r = chase(db("Top(d)."), gen_tm_ruleset(loop), max_steps=None, max_atoms=500)
    assert r.status == EXHAUSTED
    assert not any(a.pred == state_pred("qf") for a in r.instance.atoms)
    assert not any(set(halt_atoms(loop, t, t)) <= r.instance.atoms for t in r.instance.adom)
    assert eval_query(r.instance, boolean("exists ?a,?b,?c,?d . H(?a,?b), H(?c,?d), V(?a,?c), V(?b,?d)"))


@criterion(11, "MDDL: non-3-colourability on K4 and C5 minus an edge, hom-closedness on 100 pairs", 60)
def test_c11_mddl():
    k4 = graph([(a, b) for a, b in itertools.combinations("abcd", 2)])
    c5 = [(f"v{i}", f"v{(i + 1) % 5}") for i in range(5)]
    path = graph(c5[1:])
    assert eval_mddl(k4, NON3COL) is True and not three_colourable(k4)
    assert eval_mddl(path, NON3COL) is False and three_colourable(path)
    assert eval_mddl(graph(c5), NON3COL) == (not three_colourable(graph(c5)))
    rng = random.Random(11)
    for _ in range(100):
        nodes = [f"_v{i}" for i in range(4)]
        i = graph({(rng.choice(nodes), rng.choice(nodes)) for _ in range(rng.randint(1, 8))})
        target = [f"w{k}" for k in range(rng.randint(2, 4))]
        h = {t: rng.choice(target) for t in sorted(i.adom)}
        extra = {(rng.choice(target), rng.choice(target)) for _ in range(rng.randint(0, 2))}
        j = graph({(h[a], h[b]) for a, b in i.relation("E")} | extra)
        assert all(Atom(a.pred, tuple(h[t] for t in a.args)) in j for a in i.atoms if a.pred == "E")
        assert has_homomorphism(i.atoms, j, seed=h)
        assert eval_mddl(i, NON3COL) <= eval_mddl(j, NON3COL)
        q = random_mddl(rng)
        assert eval_mddl(i, q) <= eval_mddl(j, q)


@criterion(12, "dovetail harness: 20 cases with verified certificates", 120)
def test_c12_dovetail():
    assert len(DOVETAIL) == 20
    assert sum(c[5] == "yes" for c in DOVETAIL) == 10
    for case in DOVETAIL:
        data, rs, q = dovetail_case(case)
        r = entail_dovetail(data, rs, q)
        assert r.verdict == case[5], case[0]
        assert verify_certificate(data, rs, q, r), case[0]
        if r.verdict != YES:
            assert isinstance(r.certificate, Countermodel)
            assert len(r.certificate.instance.adom) <= 3, case[0]
