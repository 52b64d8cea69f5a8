"""Breadth-first Skolem chase with deterministic null names."""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..core.homs import has_homomorphism, iter_homomorphisms
from ..core.instance import Instance
from ..core.terms import Atom, Var, term_key
from .rules import Rule, Ruleset

FIXPOINT = "fixpoint"
EXHAUSTED = "budget-exhausted"


def skolem_null(rid: int, var: Var, image: tuple) -> str:
    """Name of the null for ``var`` when rule ``rid`` fires with frontier ``image``."""
    digest = hashlib.sha1("\x1f".join(image).encode()).hexdigest()[:12]
    return f"_z{rid}_{var.name}_{digest}"


def _frontier_image(rule: Rule, h: dict) -> tuple:
    return tuple(h[v] for v in rule.frontier)


def _seeds(body: tuple, atom: Atom) -> Iterator[dict]:
    """Bindings sending one body atom onto ``atom``."""
    for b in body:
        if b.pred != atom.pred or len(b.args) != len(atom.args):
            continue
        seed: dict = {}
        ok = True
        for t, v in zip(b.args, atom.args):
            if isinstance(t, Var):
                if seed.setdefault(t, v) != v:
                    ok = False
                    break
            elif t != v:
                ok = False
                break
        if ok:
            yield seed


def find_triggers(inst: Instance, rule: Rule, delta=None) -> list[dict]:
    """Body homomorphisms into ``inst``, one per frontier image, in a fixed order.

    With ``delta`` only homomorphisms using at least one atom of ``delta``
    are searched (semi-naive evaluation).  An empty body has the single
    trivial homomorphism on any nonempty instance.
    """
    if not rule.body:
        return [{}] if inst.adom else []
    seen: dict = {}
    if delta is None:
        homs = iter_homomorphisms(rule.body, inst)
        for h in homs:
            seen.setdefault(_frontier_image(rule, h), h)
    else:
        for a in sorted(delta, key=lambda x: (x.pred, tuple(term_key(t) for t in x.args))):
            for seed in _seeds(rule.body, a):
                for h in iter_homomorphisms(rule.body, inst, seed):
                    seen.setdefault(_frontier_image(rule, h), h)
    return [seen[k] for k in sorted(seen, key=lambda img: tuple(term_key(t) for t in img))]


def head_atoms(rule: Rule, rid: int, h: dict) -> set[Atom]:
    image = tuple(h[v] for v in rule.frontier)
    full = dict(h)
    for z in rule.existentials:
        full[z] = skolem_null(rid, z, image)
    return {Atom(a.pred, tuple(full.get(t, t) for t in a.args)) for a in rule.head}


def apply_trigger(inst: Instance, rule: Rule, h: dict, rid: int = 0) -> Instance:
    """inst together with the head of ``rule`` under ``h`` extended by Skolem nulls."""
    return Instance(inst.atoms | head_atoms(rule, rid, h), {**inst.signature, **rule.preds()})


def _signature(inst: Instance, rules: Ruleset) -> dict:
    return {**rules.signature, **inst.signature}


def chase_step(inst: Instance, rules: Ruleset) -> Instance:
    """All triggers of all rules applied in parallel to ``inst``."""
    new = set()
    for rid, rule in zip(rules.ids, rules.rules):
        for h in find_triggers(inst, rule):
            new |= head_atoms(rule, rid, h)
    return Instance(inst.atoms | new, _signature(inst, rules))


@dataclass
class ChaseResult:
    instance: Instance
    status: str
    steps: int
    nulls: Counter = field(default_factory=Counter)
    birth: dict = field(default_factory=dict)

    @property
    def census(self) -> int:
        """Number of nulls created."""
        return sum(self.nulls.values())

    def prefix(self, step: int) -> Instance:
        """The atoms present after ``step`` steps."""
        return Instance((a for a, s in self.birth.items() if s <= step), self.instance.signature)


@dataclass
class ChaseState:
    """One breadth-first step of a running chase."""

    instance: Instance
    step: int
    added: frozenset
    done: bool
    status: str | None


def chase_iter(db: Instance, rules: Ruleset, max_steps: int | None = 100,
               max_atoms: int | None = 100_000, birth: dict | None = None,
               nulls: Counter | None = None, step0: int = 0) -> Iterator[ChaseState]:
    """Yield the chase sequence one step at a time, starting with ``db`` itself.

    Triggers are applied in the order (rule position, frontier image); once
    the atom budget (Top atoms included) is reached no further trigger is
    applied.
    """
    birth = {} if birth is None else birth
    nulls = Counter() if nulls is None else nulls
    cur = Instance(db.atoms, _signature(db, rules))
    for a in cur.atoms:
        birth.setdefault(a, step0)
    delta = None
    fired: set = set()
    step = 0
    yield ChaseState(cur, step0, frozenset(cur.atoms), False, None)
    while True:
        if max_steps is not None and step >= max_steps:
            yield ChaseState(cur, step0 + step, frozenset(), True, EXHAUSTED)
            return
        new: set = set()
        new_terms: set = set()
        full = False
        for rid, rule in zip(rules.ids, rules.rules):
            for h in find_triggers(cur, rule, delta):
                key = (rid, _frontier_image(rule, h))
                if key in fired:
                    continue
                if max_atoms is not None and len(cur.atoms) + len(new) + len(new_terms) >= max_atoms:
                    full = True
                    break
                fired.add(key)
                for a in head_atoms(rule, rid, h):
                    if a in cur.atoms or a in new:
                        continue
                    new.add(a)
                    for t in a.args:
                        if t not in cur.adom and t not in new_terms:
                            new_terms.add(t)
                            if t.startswith("_"):
                                nulls[rid] += 1
            if full:
                break
        step += 1
        added: frozenset = frozenset()
        if new:
            nxt = Instance(cur.atoms | new, cur.signature)
            added = nxt.atoms - cur.atoms
            for a in added:
                birth[a] = step0 + step
            cur = nxt
        if full:
            yield ChaseState(cur, step0 + step, added, True, EXHAUSTED)
            return
        if not added:
            yield ChaseState(cur, step0 + step - 1, added, True, FIXPOINT)
            return
        delta = added
        yield ChaseState(cur, step0 + step, added, False, None)


def chase(db: Instance, rules: Ruleset, max_steps: int | None = 100,
          max_atoms: int | None = 100_000) -> ChaseResult:
    """Run the chase until a fixpoint or until a budget is used up.

    ``steps`` counts the steps that added atoms; on a fixpoint the instance
    is Ch_steps = Ch_(steps+1).
    """
    birth: dict = {}
    nulls: Counter = Counter()
    last = None
    for last in chase_iter(db, rules, max_steps, max_atoms, birth, nulls):
        pass
    return ChaseResult(last.instance, last.status, last.step, nulls, birth)


def layered_chase(db: Instance, strata: Sequence[Ruleset], max_steps: int | None = 100,
                  max_atoms: int | None = 100_000) -> ChaseResult:
    """Chase each stratum in turn on the result of the previous ones.

    The budgets apply per stratum.
    """
    birth: dict = {}
    nulls: Counter = Counter()
    cur = db
    steps = 0
    status = FIXPOINT
    for rs in strata:
        last = None
        for last in chase_iter(cur, rs, max_steps, max_atoms, birth, nulls, steps):
            pass
        cur, steps = last.instance, last.step
        if last.status == EXHAUSTED:
            status = EXHAUSTED
            break
    return ChaseResult(cur, status, steps, nulls, birth)


# model checking

def violations(inst: Instance, rule: Rule) -> list[dict]:
    """Body homomorphisms whose head has no extension into ``inst``."""
    out = []
    for h in find_triggers(inst, rule):
        seed = {v: h[v] for v in rule.frontier}
        if not has_homomorphism(rule.head, inst, seed):
            out.append(h)
    return out


def is_model(inst: Instance, rules: Ruleset) -> bool:
    return all(not violations(inst, r) for r in rules)

