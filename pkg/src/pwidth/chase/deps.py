"""Rule dependencies, cuts, layerings and single-head normalisation."""
from __future__ import annotations

import itertools
from typing import Sequence

import networkx as nx

from ..core.homs import iter_homomorphisms
from ..core.instance import Instance
from ..core.terms import TOP, Atom, Var
from ..errors import PreconditionError
from .engine import apply_trigger
from .rules import Rule, Ruleset
from .unify import mgu, rename_apart

YES, NO, UNKNOWN = "yes", "no", "unknown"


def _extended_head(rule: Rule) -> list[Atom]:
    """Head atoms plus Top of every head term: applying a rule can create new Top atoms."""
    terms = sorted({t for a in rule.head for t in a.args}, key=str)
    return list(rule.head) + [Atom(TOP, (t,)) for t in terms]


def _predicates_meet(rho: Rule, rho2: Rule) -> bool:
    heads = _extended_head(rho)
    for b in rho2.body:
        for h in heads:
            if mgu([(b, h)]) is not None:
                return True
    return False


def dependency_witness(rho: Rule, rho2: Rule, bound: int | None = None):
    """Search for an instance on which applying ``rho`` creates a new trigger of ``rho2``.

    Candidates are built from the frozen rule atoms: a nonempty part of the
    body of ``rho2`` is unified with head atoms of ``rho`` and the remaining
    atoms of both bodies form the instance.  Returns ``(witness, truncated)``
    where ``truncated`` tells whether some candidate exceeded ``bound``
    distinct terms.
    """
    if not rho2.body:
        return None, False
    if bound is None:
        bound = len(rho.variables) + len(rho2.variables)
    body2 = rename_apart(rho2.body, "'")
    heads = _extended_head(rho)
    ex = set(rho.existentials)
    body_vars = {t for a in rho.body for t in a.args if isinstance(t, Var)}
    truncated = False
    for k in range(1, len(body2) + 1):
        for part in itertools.combinations(range(len(body2)), k):
            options = [[h for h in heads if h.pred == body2[i].pred and len(h.args) == len(body2[i].args)]
                       for i in part]
            for choice in itertools.product(*options):
                u = mgu([(body2[i], h) for i, h in zip(part, choice)])
                if u is None:
                    continue
                w = _candidate(rho, rho2, body2, part, u, ex, body_vars, bound)
                if w == "truncated":
                    truncated = True
                elif w is not None:
                    return w, truncated
    return None, truncated


def _candidate(rho, rho2, body2, part, u, ex, body_vars, bound):
    classes = u.classes()
    ex_roots = set()
    for root, members in classes.items():
        exs = members & ex
        if exs:
            # a fresh null equals no other null, constant or body term of rho
            if len(exs) > 1 or not isinstance(root, Var) or members & body_vars:
                return None
            ex_roots.add(root)
    for i, a in enumerate(body2):
        if i not in part and any(u.subst(t) in ex_roots for t in a.args):
            return None
    names: dict = {}

    def freeze(t):
        r = u.subst(t)
        if not isinstance(r, Var):
            return r
        return names.setdefault(r, f"w{len(names)}'")

    inst_atoms = [Atom(a.pred, tuple(freeze(t) for t in a.args))
                  for a in list(rho.body) + [b for i, b in enumerate(body2) if i not in part]]
    if len(names) > bound:
        return "truncated"
    inst = Instance(inst_atoms, {**rho.preds(), **rho2.preds()})
    if not inst.adom:
        inst = Instance([Atom(TOP, ("w'",))], inst.signature)
    return inst if _verify(rho, rho2, inst) else None


def _verify(rho: Rule, rho2: Rule, inst: Instance) -> bool:
    """Semantic check: some application of rho creates a body match of rho2 not inside inst."""
    for h in _body_homs(rho, inst):
        after = apply_trigger(inst, rho, h, rid=0)
        if after == inst:
            continue
        for h2 in _body_homs(rho2, after):
            img = {Atom(a.pred, tuple(h2.get(t, t) for t in a.args)) for a in rho2.body}
            if not img <= inst.atoms:
                return True
    return False


def _body_homs(rule: Rule, inst: Instance):
    if not rule.body:
        return [{}] if inst.adom else []
    return iter_homomorphisms(rule.body, inst)


def depends_on(rho: Rule, rho2: Rule, bound: int | None = None) -> str:
    """Whether applying ``rho`` can create a new trigger for ``rho2``.

    ``no`` when no body atom of ``rho2`` unifies with a head atom of ``rho``
    or when the unifier search is exhaustive without a witness; ``yes`` with a
    verified witness instance; ``unknown`` when candidates were cut off by
    ``bound``.
    """
    if not _predicates_meet(rho, rho2):
        return NO
    w, truncated = dependency_witness(rho, rho2, bound)
    if w is not None:
        return YES
    return UNKNOWN if truncated else NO


def dependency_graph(rules: Ruleset, bound: int | None = None) -> nx.DiGraph:
    """Edge i -> j (list positions) when rule j depends on rule i, unknown counted as yes."""
    g = nx.DiGraph()
    g.add_nodes_from(range(len(rules)))
    for i, j in itertools.product(range(len(rules)), repeat=2):
        if depends_on(rules[i], rules[j], bound) != NO:
            g.add_edge(i, j)
    return g


def validate_cut(rules: Ruleset, partition: Sequence[Sequence[int]], bound: int | None = None):
    """(ok, offending) where offending lists (i, j) with rule i in an earlier block depending on rule j in a later one."""
    flat = [i for b in partition for i in b]
    if sorted(flat) != list(range(len(rules))):
        raise PreconditionError("the partition does not cover the ruleset exactly once")
    block = {i: k for k, b in enumerate(partition) for i in b}
    bad = []
    for i, j in itertools.product(range(len(rules)), repeat=2):
        if block[i] < block[j] and depends_on(rules[j], rules[i], bound) != NO:
            bad.append((i, j))
    return not bad, bad


def compute_layering(rules: Ruleset, bound: int | None = None) -> list[list[int]]:
    """Strongly connected components of the dependency graph in a topological order."""
    g = dependency_graph(rules, bound)
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    comp = {c: sorted(i for i, k in members.items() if k == c) for c in cond.nodes}
    order = nx.lexicographical_topological_sort(cond, key=lambda c: comp[c][0])
    return [comp[c] for c in order]


def single_headify(rules: Ruleset) -> Ruleset:
    """Split every head of a datalog ruleset into one rule per head atom."""
    if not rules.is_datalog:
        raise PreconditionError("single-head splitting is only equivalent for datalog rules")
    out, strata = [], []
    for r, s in zip(rules.rules, rules.strata):
        for h in r.head:
            out.append(Rule(r.body, (h,), ()))
            strata.append(s)
    return Ruleset(tuple(out), strata=tuple(strata))

