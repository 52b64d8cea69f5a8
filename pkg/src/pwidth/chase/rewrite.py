"""Backward-resolution rewriting of conjunctive queries under datalog rules."""
from __future__ import annotations

import itertools

from ..core.homs import iter_homomorphisms
from ..core.instance import Instance
from ..core.terms import TOP, Atom, Var, atom_key
from ..errors import PreconditionError
from ..queries import Cq, Ucq
from .deps import single_headify
from .rules import Ruleset
from .unify import mgu, rename_apart


def _freeze(t):
    return "?" + t.name if isinstance(t, Var) else t


def subsumes(general: Cq, specific: Cq) -> bool:
    """True iff every answer of ``specific`` is an answer of ``general`` on every instance."""
    if general.arity != specific.arity:
        return False
    frozen = Instance([Atom(a.pred, tuple(_freeze(t) for t in a.args)) for a in specific.body])
    seed: dict = {}
    for g, s in zip(general.answer, specific.answer):
        s = _freeze(s)
        if isinstance(g, Var):
            if seed.setdefault(g, s) != s:
                return False
        elif g != s:
            return False
    return next(iter_homomorphisms(general.body, frozen, seed), None) is not None


def canonical(q: Cq) -> Cq:
    """Rename variables to v0, v1, ... in order of appearance (answer first, then sorted body)."""
    names: dict = {}
    for t in q.answer:
        if isinstance(t, Var):
            names.setdefault(t, Var(f"v{len(names)}"))
    shape = sorted(q.body, key=lambda a: (a.pred, tuple(0 if isinstance(t, Var) else 1 for t in a.args),
                                          tuple("" if isinstance(t, Var) else t for t in a.args)))
    for a in shape:
        for t in a.args:
            if isinstance(t, Var):
                names.setdefault(t, Var(f"v{len(names)}"))

    def r(t):
        return names.get(t, t)

    return Cq(tuple(Atom(a.pred, tuple(r(t) for t in a.args)) for a in q.body), tuple(r(t) for t in q.answer))


def _resolve(q: Cq, i: int, rule, tag: str) -> Cq | None:
    atom = q.body[i]
    head = rename_apart(rule.head, tag)[0]
    body = rename_apart(rule.body, tag)
    u = mgu([(atom, head)])
    if u is None:
        return None
    rest = [a for k, a in enumerate(q.body) if k != i]
    new_body = u.apply(rest + body)
    if not new_body:
        # an empty rule body fires on every nonempty instance
        new_body = [Atom(TOP, (Var("w" + tag),))]
    answer = tuple(u.subst(t) for t in q.answer)
    return canonical(Cq(tuple(new_body), answer))


def datalog_rewrite(q: Cq, rules: Ruleset, depth: int = 8) -> tuple[Ucq, bool]:
    """UCQ rewriting of ``q`` by breadth-first resolution against rule heads.

    Subsumed disjuncts are dropped.  ``bounded`` is True iff a round produced
    no new disjunct, in which case the rewriting is complete.
    """
    if not rules.is_datalog:
        raise PreconditionError("rewriting is implemented for datalog rules")
    rs = single_headify(rules)
    start = canonical(q)
    result = [start]
    frontier = [start]
    counter = itertools.count()
    for _ in range(depth):
        new: list = []
        for cq in frontier:
            if cq not in result:
                continue
            for i in range(len(cq.body)):
                for rule in rs:
                    if rule.head[0].pred != cq.body[i].pred:
                        continue
                    cand = _resolve(cq, i, rule, f"~{next(counter)}")
                    if cand is None or any(subsumes(d, cand) for d in result):
                        continue
                    result = [d for d in result if not subsumes(cand, d)]
                    new = [d for d in new if not subsumes(cand, d)]
                    result.append(cand)
                    new.append(cand)
        if not new:
            return _ucq(result), True
        frontier = new
    return _ucq(result), False


def _ucq(ds: list) -> Ucq:
    return Ucq(tuple(sorted(ds, key=lambda d: (len(d.body), [atom_key(a) for a in d.body], str(d.answer)))))


def rewrite_ucq(q, rules: Ruleset, depth: int = 8) -> tuple[Ucq, bool]:
    """Rewrite every disjunct of a CQ or UCQ and merge the results."""
    ds = q.disjuncts if isinstance(q, Ucq) else (q,)
    out: list = []
    bounded = True
    for d in ds:
        u, b = datalog_rewrite(d, rules, depth)
        bounded &= b
        for c in u.disjuncts:
            if not any(subsumes(e, c) for e in out):
                out = [e for e in out if not subsumes(c, e)] + [c]
    return _ucq(out), bounded
