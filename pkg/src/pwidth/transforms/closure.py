"""Transitive closure of binary relations and 2RPE-extensions on trees."""
from __future__ import annotations

import itertools
from collections import defaultdict

from ..core import fo
from ..core.rpe import Backward, Concat, Forward, Star, Union_
from ..core.terms import Var
from ..errors import PreconditionError
from ..pwtree.evaluate import address_tree, all_color_maps, require_valid
from ..pwtree.model import CAdd, Node, PwTree, RAdd, Recol, URAdd, original
from ..pwtree.normal import pathmaps, to_normal
from .compile import compile_fo_to_tree
from .engine import Config, needed_arity, refine
from .perm import Perm
from .primitives import (arity_of, declare, drop_predicates, mirror, require_fresh, t_equality, t_permute,
                         t_union)
from .tidy import compact, prune


def _binary_color(tree: PwTree, lam: str) -> None:
    if tree.colors.get(lam) != 2:
        raise PreconditionError(f"{lam} is not a binary colour")


def root_maps(tree: PwTree) -> dict:
    """For an address tree: node name -> function sending a colour there to its colour at the root."""
    up = pathmaps(tree)
    out = {}
    for name in tree.nodes:
        chain = []
        cur = name
        while cur in up:
            parent, side = up[cur]
            chain.append({i.source: i.target for i in tree.nodes[parent].instructions
                          if isinstance(i, Recol) and i.side == side})
            cur = parent

        def f(c, chain=chain):
            for m in chain:
                c = m.get(c, c)
            return c

        out[name] = f
    return out


def lambda_copy(tree: PwTree, lam: str, copy: str) -> PwTree:
    """Emit copy(t, t') for exactly the pairs coloured ``lam`` at the root.

    Copies are emitted where the pair is created: by an RAdd next to every
    CAdd whose target ends up as ``lam``, and above leaves for diagonal pairs.
    """
    _binary_color(tree, lam)
    require_fresh(tree, copy)
    require_valid(tree)
    t = address_tree(tree)
    to_root = root_maps(t)
    nodes = {}
    for name, node in t.nodes.items():
        extra = set()
        if not node.is_pseudoleaf:
            for ins in node.instructions:
                if isinstance(ins, CAdd) and t.colors[ins.target] == 2 and to_root[name](ins.target) == lam:
                    extra.add(RAdd(ins.left, ins.right, ins.positions, copy))
            for side, child in enumerate((node.left, node.right)):
                if child is not None and t.nodes[child].is_pseudoleaf and to_root[child](original(2)) == lam:
                    extra.add(URAdd(side, original(2), copy))
        nodes[name] = node.with_decorators(node.decorators | extra) if extra else node
    out = PwTree(nodes, t.root, dict(t.colors), {**t.signature, copy: 2})
    if out.root is not None and out.nodes[out.root].is_pseudoleaf and lam == original(2):
        out = PwTree({**nodes, "@^": Node(frozenset({URAdd(0, lam, copy)}), out.root, None)}, "@^",
                     dict(t.colors), {**t.signature, copy: 2})
    return out


def compute_expressibility(tree: PwTree, address: str, lam: str, positions: tuple = (1,)) -> frozenset:
    """Profiles (left colours, right colours) of the cross pairs at a node that
    end up coloured ``lam`` at the root.

    ``positions`` fixes the orientation: (1,) for pairs (left entity, right
    entity), (2,) for (right entity, left entity).  Profiles are the exact
    unary colour sets of the two entities at the children of the node.
    """
    _binary_color(tree, lam)
    t = address_tree(tree)
    name = t.node_at(address)
    if name is None or t.nodes[name].is_pseudoleaf:
        raise PreconditionError(f"no inner node at {address!r}")
    node = t.nodes[name]
    if node.left is None or node.right is None:
        raise PreconditionError("both children must be present")
    _, maps = all_color_maps(t)
    profiles = [_profiles(maps.get(address + s, {}), t) for s in "01"]
    f = root_maps(t)[name]
    good = {(i.left, i.right) for i in node.instructions
            if isinstance(i, CAdd) and i.positions == tuple(positions) and t.colors[i.target] == 2
            and f(i.target) == lam}
    out = set()
    for pl in set(profiles[0].values()):
        for pr in set(profiles[1].values()):
            if any((k, m) in good for k in pl for m in pr):
                out.add((pl, pr))
    return frozenset(out)


def _profiles(cmap: dict, tree: PwTree) -> dict:
    prof = defaultdict(set)
    for c, ts in cmap.items():
        if tree.colors.get(c) == 1:
            for (e,) in ts:
                prof[e].add(c)
    ents = {e for c, ts in cmap.items() for t in ts for e in t}
    return {e: frozenset(prof.get(e, ())) for e in ents}


def closure_tree(tree: PwTree, pred: str, out: str) -> PwTree:
    """Add out(t, t') whenever a path of pred-edges of length at least 1 leads from t to t'."""
    if arity_of(tree, pred) != 2:
        raise PreconditionError(f"{pred} is not binary")
    require_fresh(tree, out)
    if not tree.is_finite:
        raise PreconditionError("closure needs a finite tree")
    t = to_normal(tree)
    cfg = Config(needed_arity(t, 2), closure=pred)
    res, *_ = refine(t, cfg, [(out, 2, lambda eng, s: eng.states[s].clo[2])])
    return compact(prune(res))


def lambda_star(tree: PwTree, lam: str, out: str) -> PwTree:
    """Add out(t, t') for every lam-path of length at least 1 in the root colouring."""
    copy = _fresh_name(tree, out + "_copy")
    t = lambda_copy(tree, lam, copy)
    t = closure_tree(t, copy, out)
    return compact(prune(drop_predicates(t, [copy])))


def _fresh_name(tree: PwTree, stem: str) -> str:
    name, k = stem, 1
    while name in tree.signature:
        k += 1
        name = f"{stem}{k}"
    return name


class _RpeCompiler:
    def __init__(self, tree: PwTree, stem: str):
        self.tree = tree
        self.stem = stem
        self.created: list[str] = []
        self.counter = itertools.count(1)

    def fresh(self) -> str:
        while True:
            name = f"{self.stem}{next(self.counter)}"
            if name not in self.tree.signature:
                self.created.append(name)
                return name

    def done(self, *used) -> None:
        drop = [u for u in used if u in self.created]
        self.tree = prune(drop_predicates(self.tree, drop)) if drop else prune(self.tree)

    def compile(self, e) -> str:
        if isinstance(e, Forward):
            if e.pred not in self.tree.signature:
                self.tree = declare(self.tree, e.pred, 2)
            if arity_of(self.tree, e.pred) != 2:
                raise PreconditionError(f"step predicate {e.pred} is not binary")
            return e.pred
        if isinstance(e, Backward):
            p = self.compile(Forward(e.pred))
            q = self.fresh()
            self.tree = t_permute(self.tree, p, Perm((2, 1)), q)
            self.done()
            return q
        if isinstance(e, Concat):
            a, b = self.compile(e.left), self.compile(e.right)
            x, y, z = Var("x"), Var("y"), Var("z")
            f = fo.Exists(y, fo.And(fo.FAtom(a, (x, y)), fo.FAtom(b, (y, z))))
            q = self.fresh()
            self.tree = compile_fo_to_tree(self.tree, f, (x, z), q)
            self.done(a, b)
            return q
        if isinstance(e, Union_):
            a, b = self.compile(e.left), self.compile(e.right)
            q = self.fresh()
            self.tree = t_union(self.tree, a, b, q)
            self.done(a, b)
            return q
        if isinstance(e, Star):
            a = self.compile(e.body)
            c = self.fresh()
            self.tree = closure_tree(self.tree, a, c)
            self.done(a)
            eq = self.fresh()
            self.tree = t_equality(self.tree, eq)
            q = self.fresh()
            self.tree = t_union(self.tree, c, eq, q)
            self.done(c, eq)
            return q
        raise PreconditionError(f"unexpected expression {e!r}")


def rpe_extend_tree(tree: PwTree, pred: str, expr) -> PwTree:
    """Tree denoting I^T plus pred(t, t') for every pair in the relation of ``expr``."""
    if not tree.is_finite:
        raise PreconditionError("2RPE-extensions need a finite tree")
    require_valid(tree)
    t = tree
    if pred not in t.signature:
        t = declare(t, pred, 2)
    if arity_of(t, pred) != 2:
        raise PreconditionError(f"{pred} is not binary")
    comp = _RpeCompiler(t, pred + "_r")
    q = comp.compile(expr)
    t = comp.tree
    if q != pred:
        t = mirror(t, {q}, pred)
    return compact(prune(drop_predicates(t, comp.created)))
