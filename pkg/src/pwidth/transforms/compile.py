"""Compile an FO formula into a sequence of primitive tree transformations."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..core import fo
from ..core.terms import TOP, Var
from ..errors import PreconditionError
from ..pwtree.model import PwTree
from .perm import Perm
from .primitives import (declare, drop_predicates, mirror, require_fresh, t_complement, t_equality,
                         t_permute, t_projection, t_union, t_varintro)
from .tidy import compact, prune


@dataclass(frozen=True)
class Rel:
    """A predicate holding exactly the satisfying tuples of ``vars``.

    With no variables the predicate is unary and holds for all entities or
    for none, according to the truth value of a closed formula.
    """

    pred: str
    vars: tuple


class _Compiler:
    def __init__(self, tree: PwTree, order: dict, stem: str):
        self.tree = tree
        self.order = order
        self.stem = stem
        self.created: list[str] = []
        self.counter = itertools.count(1)

    def apply(self, op, *args) -> None:
        """Run a transformation, then forget the consumed intermediate predicates."""
        self.tree = op(self.tree, *args)
        used = [a for a in args[:-1] if isinstance(a, str) and a in self.created and a != args[-1]]
        if used:
            self.tree = prune(drop_predicates(self.tree, used))
        else:
            self.tree = prune(self.tree)

    def fresh(self) -> str:
        while True:
            name = f"{self.stem}{next(self.counter)}"
            if name not in self.tree.signature and name != TOP:
                self.created.append(name)
                return name

    def key(self, v: Var) -> int:
        return self.order[v]

    def sort(self, vs) -> tuple:
        return tuple(sorted(set(vs), key=self.key))

    # primitives
    def permute(self, pred: str, current: tuple, target: tuple) -> str:
        """Predicate over ``target`` order holding the tuples of pred over ``current``."""
        if current == target:
            return pred
        pi = Perm(tuple(target.index(v) + 1 for v in current))
        q = self.fresh()
        self.apply(t_permute, pred, pi, q)
        return q

    def align(self, rel: Rel, target: tuple) -> str:
        pred, cur = rel.pred, rel.vars
        if not cur and target:
            cur = (target[0],)
        for w in target:
            if w in cur:
                continue
            q = self.fresh()
            self.apply(t_varintro, pred, q)
            pred, cur = q, cur + (w,)
            want = self.sort(cur)
            pred, cur = self.permute(pred, cur, want), want
        return pred

    def compile(self, f) -> Rel:
        if isinstance(f, fo.FAtom):
            if any(not isinstance(t, Var) for t in f.args):
                raise PreconditionError("constants in formulas are not supported by the tree compiler")
            if f.pred != TOP and f.pred not in self.tree.signature:
                raise PreconditionError(f"predicate {f.pred} is not in the signature")
            target = self.sort(f.args)
            return Rel(self.permute(f.pred, tuple(f.args), target), target)
        if isinstance(f, fo.Eq):
            if f.left == f.right:
                return Rel(TOP, (f.left,))
            q = self.fresh()
            self.apply(t_equality, q)
            return Rel(q, self.sort((f.left, f.right)))
        if isinstance(f, fo.Truth):
            if f.value:
                return Rel(TOP, ())
            q = self.fresh()
            self.tree = declare(self.tree, q, 1)
            return Rel(q, ())
        if isinstance(f, fo.Not):
            inner = self.compile(f.body)
            q = self.fresh()
            self.apply(t_complement, inner.pred, q)
            return Rel(q, inner.vars)
        if isinstance(f, fo.Or):
            a, b = self.compile(f.left), self.compile(f.right)
            target = self.sort(a.vars + b.vars)
            pa, pb = self.align(a, target), self.align(b, target)
            q = self.fresh()
            self.apply(t_union, pa, pb, q)
            return Rel(q, target)
        if isinstance(f, fo.Exists):
            inner = self.compile(f.body)
            if f.var not in inner.vars:
                return inner
            if inner.vars == (f.var,):
                q = self.fresh()
                self.apply(t_varintro, inner.pred, q)
                c = self.fresh()
                self.apply(t_projection, q, 1, c)
                return Rel(c, ())
            q = self.fresh()
            self.apply(t_projection, inner.pred, inner.vars.index(f.var) + 1, q)
            return Rel(q, tuple(v for v in inner.vars if v != f.var))
        raise PreconditionError(f"unexpected formula {f!r}")


def normalize(f, xs: tuple):
    """Rename bound variables apart, split repeated atom arguments, and reduce
    to negation, disjunction and existential quantification."""
    counter = itertools.count(1)
    taken = set(xs) | set(_all_vars(f))

    def new_var() -> Var:
        while True:
            v = Var(f"v{next(counter)}")
            if v not in taken:
                taken.add(v)
                return v

    def go(g, env):
        if isinstance(g, fo.FAtom):
            args = [env.get(t, t) if isinstance(t, Var) else t for t in g.args]
            seen, new_args, eqs = set(), [], []
            for t in args:
                if isinstance(t, Var) and t in seen:
                    v = new_var()
                    new_args.append(v)
                    eqs.append((v, t))
                else:
                    seen.add(t)
                    new_args.append(t)
            out = fo.FAtom(g.pred, tuple(new_args))
            for v, t in eqs:
                out = fo.Exists(v, _and(out, fo.Eq(v, t)))
            return out
        if isinstance(g, fo.Eq):
            return fo.Eq(env.get(g.left, g.left), env.get(g.right, g.right))
        if isinstance(g, fo.Truth):
            return g
        if isinstance(g, fo.Not):
            return _not(go(g.body, env))
        if isinstance(g, fo.And):
            return _and(go(g.left, env), go(g.right, env))
        if isinstance(g, fo.Or):
            return fo.Or(go(g.left, env), go(g.right, env))
        v = new_var()
        body = go(g.body, {**env, g.var: v})
        if isinstance(g, fo.Exists):
            return fo.Exists(v, body)
        return _not(fo.Exists(v, _not(body)))

    return go(f, {})


def _not(g):
    return g.body if isinstance(g, fo.Not) else fo.Not(g)


def _and(a, b):
    return _not(fo.Or(_not(a), _not(b)))


def _all_vars(f) -> set:
    if isinstance(f, fo.FAtom):
        return {t for t in f.args if isinstance(t, Var)}
    if isinstance(f, fo.Eq):
        return {t for t in (f.left, f.right) if isinstance(t, Var)}
    if isinstance(f, fo.Truth):
        return set()
    if isinstance(f, fo.Not):
        return _all_vars(f.body)
    if isinstance(f, (fo.And, fo.Or)):
        return _all_vars(f.left) | _all_vars(f.right)
    return {f.var} | _all_vars(f.body)


def compile_fo_to_tree(tree: PwTree, f, xs, pred: str) -> PwTree:
    """Tree denoting I^T plus pred(t) for every tuple t of entities satisfying f(xs)."""
    xs = tuple(xs)
    if not xs:
        raise PreconditionError("the defined predicate needs at least one variable")
    if len(set(xs)) != len(xs):
        raise PreconditionError("answer variables must be distinct")
    missing = set(fo.free_vars(f)) - set(xs)
    if missing:
        raise PreconditionError(f"free variables {sorted(map(str, missing))} not among the answer variables")
    require_fresh(tree, pred)
    if not tree.is_finite:
        raise PreconditionError("compiling formulas needs a finite tree")
    g = normalize(f, xs)
    order = {v: k for k, v in enumerate(xs)}
    for v in sorted(_all_vars(g) - set(xs), key=lambda v: v.name):
        order[v] = len(order)
    comp = _Compiler(tree, order, pred + "_")
    rel = comp.compile(g)
    final = comp.align(rel, xs)
    t = comp.tree.replace(signature={**comp.tree.signature, pred: len(xs)})
    t = mirror(t, {final}, pred)
    t = drop_predicates(t, comp.created)
    return compact(prune(t))
