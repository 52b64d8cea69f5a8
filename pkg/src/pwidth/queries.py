"""Conjunctive queries, their unions, and monadic disjunctive datalog queries."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

from lark import Transformer

from . import _lark
from .core.homs import iter_homomorphisms
from .core.instance import Instance
from .core.terms import Atom, Var, atom_key, term_key
from .errors import ParseError, PreconditionError


def _vars_in(atoms) -> list[Var]:
    out: list[Var] = []
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var) and t not in out:
                out.append(t)
    return out


@dataclass(frozen=True)
class Cq:
    """A conjunctive query; ``answer`` lists the answer terms in order.

    Answer terms are usually the free variables, but rewritings may bind them
    to constants or identify two of them.
    """

    body: tuple
    answer: tuple = ()

    def __post_init__(self):
        body = tuple(sorted(set(self.body), key=atom_key))
        if not body:
            raise PreconditionError("a CQ needs a nonempty body")
        object.__setattr__(self, "body", body)
        vs = set(_vars_in(body))
        for t in self.answer:
            if isinstance(t, Var) and t not in vs:
                raise PreconditionError(f"answer variable {t} does not occur in the body")

    @property
    def free_vars(self) -> tuple[Var, ...]:
        out: list[Var] = []
        for t in self.answer:
            if isinstance(t, Var) and t not in out:
                out.append(t)
        return tuple(out)

    @property
    def existential_vars(self) -> tuple[Var, ...]:
        free = set(self.free_vars)
        return tuple(v for v in _vars_in(self.body) if v not in free)

    @property
    def arity(self) -> int:
        return len(self.answer)

    def __str__(self) -> str:
        return format_query(self)


@dataclass(frozen=True)
class Ucq:
    disjuncts: tuple

    def __post_init__(self):
        ds = tuple(self.disjuncts)
        if not ds:
            raise PreconditionError("a UCQ needs at least one disjunct")
        if len({d.arity for d in ds}) != 1:
            raise PreconditionError("UCQ disjuncts must share the answer arity")
        object.__setattr__(self, "disjuncts", ds)

    @property
    def arity(self) -> int:
        return self.disjuncts[0].arity

    def __str__(self) -> str:
        return format_query(self)


@dataclass(frozen=True)
class MddlRule:
    body: tuple
    head: tuple


@dataclass(frozen=True)
class MddlQuery:
    fresh: tuple
    rules: tuple = field(default=())

    def __post_init__(self):
        fresh = set(self.fresh)
        for r in self.rules:
            for h in r.head:
                if h.pred not in fresh or len(h.args) != 1:
                    raise PreconditionError(f"head atom {h} is not over a fresh unary predicate")
            for b in r.body:
                if b.pred in fresh and len(b.args) != 1:
                    raise PreconditionError(f"fresh predicate {b.pred} used with arity {len(b.args)}")

    def __str__(self) -> str:
        return format_query(self)


Query = Union[Cq, Ucq, MddlQuery]


def boolean_cq(*atoms: Atom) -> Cq:
    return Cq(tuple(atoms), ())


# evaluation

def _answer_seed(answer: Sequence, values: Sequence) -> dict | None:
    seed: dict = {}
    for a, v in zip(answer, values):
        if isinstance(a, Var):
            if seed.setdefault(a, v) != v:
                return None
        elif a != v:
            return None
    return seed


def eval_cq(inst: Instance, q: Cq, values: Sequence = ()) -> bool:
    values = tuple(values)
    if len(values) != q.arity:
        raise PreconditionError(f"answer tuple of length {len(values)} for a query of arity {q.arity}")
    seed = _answer_seed(q.answer, values)
    if seed is None:
        return False
    return next(iter_homomorphisms(q.body, inst, seed), None) is not None


def eval_bcq(inst: Instance, q: Cq) -> bool:
    if q.arity:
        raise PreconditionError("eval_bcq needs a Boolean query")
    return eval_cq(inst, q, ())


def eval_ucq(inst: Instance, q: Ucq | Cq, values: Sequence = ()) -> bool:
    if isinstance(q, Cq):
        return eval_cq(inst, q, values)
    if len(tuple(values)) != q.arity:
        raise PreconditionError("answer tuple arity mismatch")
    return any(eval_cq(inst, d, values) for d in q.disjuncts)


def answers(inst: Instance, q: Ucq | Cq) -> set[tuple]:
    """All answer tuples of ``q`` over ``inst``."""
    ds = q.disjuncts if isinstance(q, Ucq) else (q,)
    out = set()
    for d in ds:
        for h in iter_homomorphisms(d.body, inst):
            out.add(tuple(h.get(t, t) for t in d.answer))
    return {t for t in out if all(x in inst.adom for x in t)}


def ground_mddl(inst: Instance, q: MddlQuery) -> list[tuple[tuple, tuple]]:
    """Ground clauses ``(negative fresh atoms, positive fresh atoms)``."""
    fresh = set(q.fresh)
    dom = sorted(inst.adom)
    clauses = []
    for r in q.rules:
        fixed = [a for a in r.body if a.pred not in fresh]
        mentioned = set(_vars_in(r.body)) | set(_vars_in(r.head))
        for h in iter_homomorphisms(fixed, inst):
            rest = sorted(mentioned - set(h), key=term_key)
            for combo in itertools.product(dom, repeat=len(rest)):
                full = dict(h)
                full.update(zip(rest, combo))
                neg = tuple(sorted({(a.pred, full.get(a.args[0], a.args[0])) for a in r.body if a.pred in fresh}))
                pos = tuple(sorted({(a.pred, full.get(a.args[0], a.args[0])) for a in r.head}))
                clauses.append((neg, pos))
    return clauses


def _dpll(clauses: list[tuple[tuple, tuple]]) -> dict | None:
    """Find a truth assignment satisfying all clauses, or None."""
    lits = [[(v, False) for v in neg] + [(v, True) for v in pos] for neg, pos in clauses]
    assign: dict = {}

    def value(lit):
        v = assign.get(lit[0])
        return None if v is None else v == lit[1]

    def propagate(trail: list) -> bool:
        changed = True
        while changed:
            changed = False
            for clause in lits:
                unassigned = None
                count = 0
                sat = False
                for lit in clause:
                    val = value(lit)
                    if val is True:
                        sat = True
                        break
                    if val is None:
                        count += 1
                        unassigned = lit
                if sat:
                    continue
                if count == 0:
                    return False
                if count == 1:
                    assign[unassigned[0]] = unassigned[1]
                    trail.append(unassigned[0])
                    changed = True
        return True

    def solve() -> bool:
        trail: list = []
        if not propagate(trail):
            for v in trail:
                del assign[v]
            return False
        pick = None
        for clause in lits:
            if not any(value(lit) is True for lit in clause):
                pick = next(lit for lit in clause if value(lit) is None)
                break
        if pick is None:
            return True
        for choice in (pick[1], not pick[1]):
            assign[pick[0]] = choice
            if solve():
                return True
            del assign[pick[0]]
        for v in trail:
            del assign[v]
        return False

    return dict(assign) if solve() else None


def mddl_model(inst: Instance, q: MddlQuery) -> dict | None:
    """An assignment of the fresh predicates satisfying every rule, if any."""
    return _dpll(ground_mddl(inst, q))


def eval_mddl(inst: Instance, q: MddlQuery) -> bool:
    """True iff no interpretation of the fresh predicates satisfies the rules."""
    return mddl_model(inst, q) is None


def eval_query(inst: Instance, q: Query) -> bool:
    """Boolean evaluation of any query class."""
    if isinstance(q, MddlQuery):
        return eval_mddl(inst, q)
    return eval_ucq(inst, q, ())


# DSL

_GRAMMAR = r"""
start: mddl | ucq
ucq: cq ("|" cq)*
cq: [answer "<-"] [exists] atoms
answer: "(" [term ("," term)*] ")"
exists: "exists" VAR ("," VAR)* "."
atoms: atom ("," atom)*
atom: NAME "(" term ("," term)* ")"
?term: VAR -> var
     | CONST -> const
mddl: "fresh" NAME* ";" mrule*
mrule: [atoms] "->" [heads] ";"
heads: atom ("|" atom)*
"""


class _ToQuery(Transformer):
    def start(self, c):
        return c[0]

    def var(self, c):
        return Var(str(c[0])[1:])

    def const(self, c):
        return str(c[0])

    def atom(self, c):
        return Atom(str(c[0]), tuple(c[1:]))

    def atoms(self, c):
        return tuple(c)

    def heads(self, c):
        return tuple(c)

    def answer(self, c):
        return tuple(x for x in c if x is not None)

    def exists(self, c):
        return [Var(str(v)[1:]) for v in c]

    def cq(self, c):
        answer, ex, body = c
        if answer is None:
            bound = set(ex or [])
            answer = tuple(v for v in _vars_in(body) if v not in bound)
        elif ex:
            clash = set(ex) & set(answer)
            if clash:
                raise ParseError(f"variables {sorted(str(v) for v in clash)} are both free and quantified")
        return Cq(body, answer)

    def ucq(self, c):
        return c[0] if len(c) == 1 else Ucq(tuple(c))

    def mrule(self, c):
        return MddlRule(c[0] or (), c[1] or ())

    def mddl(self, c):
        fresh = tuple(str(x) for x in c if not isinstance(x, MddlRule))
        rules = tuple(x for x in c if isinstance(x, MddlRule))
        return MddlQuery(fresh, rules)


def parse_query(text: str) -> Query:
    try:
        return _lark.run(_GRAMMAR, text, _ToQuery())
    except PreconditionError as exc:
        raise ParseError(str(exc)) from None


def _fmt_atoms(atoms) -> str:
    return ", ".join(str(a) for a in atoms)


def _fmt_cq(q: Cq) -> str:
    default = tuple(v for v in _vars_in(q.body) if v in set(q.free_vars))
    prefix = ""
    if q.answer != default or len(set(q.answer)) != len(q.answer):
        prefix = "(" + ",".join(str(t) for t in q.answer) + ") <- "
    ex = q.existential_vars
    quant = f"exists {','.join(str(v) for v in ex)} . " if ex else ""
    return prefix + quant + _fmt_atoms(q.body)


def format_query(q: Query) -> str:
    if isinstance(q, Cq):
        return _fmt_cq(q)
    if isinstance(q, Ucq):
        return " | ".join(_fmt_cq(d) for d in q.disjuncts)
    parts = ["fresh " + " ".join(q.fresh) + ";"]
    for r in q.rules:
        body = _fmt_atoms(r.body)
        head = " | ".join(str(a) for a in r.head)
        parts.append(" ".join(x for x in (body, "->", head) if x) + (";" if head else " ;"))
    return " ".join(parts)
