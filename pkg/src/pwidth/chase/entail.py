"""Query entailment: chase semi-decision, rewriting reduction, finite countermodels, dovetailing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..core.homs import iter_homomorphisms
from ..core.instance import Instance
from ..core.terms import Atom
from ..errors import PreconditionError, ValidationError
from ..queries import Cq, MddlQuery, Ucq, eval_query
from .deps import validate_cut
from .engine import FIXPOINT, chase, chase_iter, is_model, violations
from .rewrite import rewrite_ucq
from .rules import Ruleset

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass
class ChaseCertificate:
    """A chase prefix satisfying the query.

    ``plan`` lists (ruleset, steps) pairs whose layered replay contains
    ``instance``; ``match`` is a homomorphism of a disjunct for CQs and UCQs.
    """

    instance: Instance
    plan: list
    match: dict | None = None


@dataclass
class Countermodel:
    """A finite model of the knowledge base violating the query."""

    instance: Instance


@dataclass
class EntailResult:
    verdict: str
    certificate: object = None
    lane: str = ""
    note: str = ""
    rounds: int = 0


def query_match(inst: Instance, q) -> dict | None:
    """A homomorphism witnessing a Boolean CQ/UCQ, or None."""
    for d in (q.disjuncts if isinstance(q, Ucq) else (q,)):
        h = next(iter_homomorphisms(d.body, inst), None)
        if h is not None:
            return h
    return None


def _holds(inst: Instance, q) -> bool:
    if isinstance(q, (Cq, Ucq)) and q.arity:
        raise PreconditionError("entailment is checked for Boolean queries")
    return eval_query(inst, q)


def _chase_lane(db: Instance, rules: Ruleset, q, max_steps, max_atoms) -> Iterator:
    """Yields None while running, then an EntailResult."""
    for st in chase_iter(db, rules, max_steps, max_atoms):
        if _holds(st.instance, q):
            match = None if isinstance(q, MddlQuery) else query_match(st.instance, q)
            yield EntailResult(YES, ChaseCertificate(st.instance, [(rules, st.step)], match), "chase",
                               f"matched after step {st.step}")
            return
        if st.done:
            if st.status == FIXPOINT:
                yield EntailResult(NO, Countermodel(st.instance), "chase", f"fixpoint after step {st.step}")
            else:
                yield EntailResult(UNKNOWN, None, "chase", f"budget exhausted after step {st.step}")
            return
        yield None


def entail_bcq_chase(db: Instance, rules: Ruleset, q, max_steps: int | None = 50,
                     max_atoms: int | None = 20_000) -> EntailResult:
    """Check ``q`` on every chase prefix; a fixpoint without a match answers no."""
    for r in _chase_lane(db, rules, q, max_steps, max_atoms):
        if r is not None:
            return r
    raise AssertionError("the chase lane always ends with a result")


def entail_via_rewriting(db: Instance, pre: Ruleset, fus: Ruleset, q, depth: int = 8,
                         max_steps: int | None = 50, max_atoms: int | None = 20_000) -> EntailResult:
    """Chase with ``pre`` and evaluate the rewriting of ``q`` under the datalog ruleset ``fus``.

    ``pre`` followed by ``fus`` must be a cut.
    """
    if not fus.is_datalog:
        raise PreconditionError("the rewritten stratum must be datalog")
    whole = pre + fus
    ok, bad = validate_cut(whole, [list(range(len(pre))), list(range(len(pre), len(whole)))])
    if not ok:
        raise ValidationError("the two rulesets do not form a cut", bad)
    rq, bounded = rewrite_ucq(q, fus, depth)
    if not bounded:
        return EntailResult(UNKNOWN, None, "rewriting", f"rewriting not saturated within depth {depth}")
    pre_rs, fus_rs = whole.select(range(len(pre))), whole.select(range(len(pre), len(whole)))
    r = entail_bcq_chase(db, pre_rs, rq, max_steps, max_atoms)
    r.lane = "rewriting"
    if r.verdict == YES:
        inner = r.certificate
        closed = chase(inner.instance, fus_rs, max_steps=None, max_atoms=None).instance
        r.certificate = ChaseCertificate(closed, inner.plan + [(fus_rs, None)], query_match(closed, q))
    elif r.verdict == NO:
        r.certificate = Countermodel(chase(r.certificate.instance, fus_rs, max_steps=None, max_atoms=None).instance)
    return r


# finite countermodels

def _search(db: Instance, rules: Ruleset, q, fresh: int, visited: set) -> Iterator:
    """Depth-first repair search over ``adom(db)``, rule constants and ``fresh`` nulls.

    Yields None after each expanded node and finally a model violating ``q``
    if one is found.  Fresh nulls are introduced in order, so isomorphic
    branches that only permute them are not explored.
    """
    base = sorted(db.adom | rules.constants)
    names = [f"_m{i}" for i in range(fresh)]
    sig = {**rules.signature, **db.signature}
    stack = [(Instance(db.atoms, sig), 0)]
    while stack:
        inst, used = stack.pop()
        if inst.atoms in visited:
            continue
        visited.add(inst.atoms)
        yield None
        if _holds(inst, q):
            continue
        broken = None
        for rule in rules:
            vs = violations(inst, rule)
            if vs:
                broken = (rule, vs[0])
                break
        if broken is None:
            yield inst
            return
        rule, h = broken
        children = []
        for values, n_used in _witnesses(len(rule.existentials), base, names, used):
            full = {**h, **dict(zip(rule.existentials, values))}
            atoms = {Atom(a.pred, tuple(full.get(t, t) for t in a.args)) for a in rule.head}
            children.append((Instance(inst.atoms | atoms, sig), n_used))
        # explore existing terms first
        stack.extend(reversed(children))


def _witnesses(k: int, base: list, names: list, used: int):
    """Tuples of k values: existing terms or fresh nulls introduced in order."""
    def rec(i, used, acc):
        if i == k:
            yield tuple(acc), used
            return
        for v in base + names[:used]:
            yield from rec(i + 1, used, acc + [v])
        if used < len(names):
            yield from rec(i + 1, used + 1, acc + [names[used]])
    yield from rec(0, used, [])


def verify_countermodel(db: Instance, rules: Ruleset, q, inst: Instance) -> bool:
    return db.atoms <= inst.atoms and is_model(inst, rules) and not _holds(inst, q)


def _countermodel_lane(db, rules, q, max_fresh: int) -> Iterator:
    for k in range(max_fresh + 1):
        visited: set = set()
        for r in _search(db, rules, q, k, visited):
            if r is not None:
                if not verify_countermodel(db, rules, q, r):
                    raise AssertionError("countermodel search produced an invalid certificate")
                yield EntailResult(NO, Countermodel(r), "countermodel", f"{k} fresh nulls")
                return
            yield None
    yield EntailResult(UNKNOWN, None, "countermodel", f"no countermodel with up to {max_fresh} fresh nulls")


def finite_countermodel_search(db: Instance, rules: Ruleset, q, size_bound: int) -> Instance | None:
    """Smallest-first search for a finite model of (db, rules) violating q."""
    for r in _countermodel_lane(db, rules, q, size_bound):
        if r is not None:
            return r.certificate.instance if r.verdict == NO else None
    return None


# dovetailing

@dataclass
class Budgets:
    max_steps: int = 30
    max_atoms: int = 5_000
    max_fresh: int = 3
    quantum: int = 25
    max_rounds: int = 100_000


def entail_dovetail(db: Instance, rules: Ruleset, q, budgets: Budgets | None = None) -> EntailResult:
    """Alternate the chase lane (one step per round) with the countermodel lane
    (``quantum`` search nodes per round) until one of them answers."""
    b = budgets or Budgets()
    lanes = [_chase_lane(db, rules, q, b.max_steps, b.max_atoms),
             _countermodel_lane(db, rules, q, b.max_fresh)]
    quota = [1, b.quantum]
    open_ = [True, True]
    notes = ["", ""]
    for rnd in range(1, b.max_rounds + 1):
        if not any(open_):
            break
        for i, lane in enumerate(lanes):
            for _ in range(quota[i]):
                if not open_[i]:
                    break
                r = next(lane, None)
                if r is None:
                    continue
                if r.verdict in (YES, NO):
                    r.rounds = rnd
                    return r
                open_[i] = False
                notes[i] = r.note
    return EntailResult(UNKNOWN, None, "dovetail", "; ".join(n for n in notes if n) or "round budget exhausted",
                        rounds=rnd)


def verify_certificate(db: Instance, rules: Ruleset, q, result: EntailResult) -> bool:
    """Independent re-check of a yes/no certificate."""
    cert = result.certificate
    if result.verdict == NO:
        return isinstance(cert, Countermodel) and verify_countermodel(db, rules, q, cert.instance)
    if result.verdict != YES or not isinstance(cert, ChaseCertificate):
        return False
    replay = db
    for rs, steps in cert.plan:
        replay = chase(replay, rs, max_steps=steps, max_atoms=None).instance
    if not cert.instance.atoms <= replay.atoms or not _holds(cert.instance, q):
        return False
    if cert.match is not None:
        ds = q.disjuncts if isinstance(q, Ucq) else (q,)
        return any({Atom(a.pred, tuple(cert.match.get(t, t) for t in a.args)) for a in d.body}
                   <= cert.instance.atoms for d in ds)
    return True
