"""Existential rules, rulesets and their text syntax."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from lark import Transformer, v_args

from .. import _lark
from ..core.terms import TOP, Atom, Var, is_constant
from ..errors import ParseError, PreconditionError


def _vars(atoms) -> list[Var]:
    out: list[Var] = []
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var) and t not in out:
                out.append(t)
    return out


@dataclass(frozen=True)
class Rule:
    """body -> exists existentials . head"""

    body: tuple
    head: tuple
    existentials: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "existentials", tuple(self.existentials))
        if not self.head:
            raise PreconditionError("a rule needs a nonempty head")
        for a in self.head:
            if a.pred == TOP:
                raise PreconditionError("Top cannot occur in a rule head")
        body_vars = set(_vars(self.body))
        ex = set(self.existentials)
        if len(ex) != len(self.existentials):
            raise PreconditionError("an existential variable is declared twice")
        if ex & body_vars:
            raise PreconditionError(f"existential variables {sorted(v.name for v in ex & body_vars)} occur in the body")
        for v in _vars(self.head):
            if v not in body_vars and v not in ex:
                raise PreconditionError(f"head variable {v} is neither in the body nor existential")

    @cached_property
    def frontier(self) -> tuple:
        """Variables shared by body and head, in order of first body occurrence."""
        hv = set(_vars(self.head))
        return tuple(v for v in _vars(self.body) if v in hv)

    @property
    def is_datalog(self) -> bool:
        return not self.existentials

    @property
    def variables(self) -> tuple:
        return tuple(_vars(self.body)) + self.existentials

    @property
    def constants(self) -> set:
        return {t for a in self.body + self.head for t in a.args if is_constant(t)}

    def preds(self) -> dict:
        return {a.pred: len(a.args) for a in self.body + self.head if a.pred != TOP}

    def __str__(self) -> str:
        return format_rule(self)


@dataclass(frozen=True)
class Ruleset:
    """An ordered list of rules.

    ``ids`` are the stable indices used for null naming; a sub-ruleset keeps
    the ids of the ruleset it was taken from. ``strata`` holds the optional
    ``@stratum`` annotation of every rule.
    """

    rules: tuple = ()
    ids: tuple = None
    strata: tuple = None

    def __post_init__(self):
        rules = tuple(self.rules)
        object.__setattr__(self, "rules", rules)
        ids = tuple(range(len(rules))) if self.ids is None else tuple(self.ids)
        if len(ids) != len(rules) or len(set(ids)) != len(ids):
            raise PreconditionError("rule ids must be distinct, one per rule")
        object.__setattr__(self, "ids", ids)
        strata = (None,) * len(rules) if self.strata is None else tuple(self.strata)
        if len(strata) != len(rules):
            raise PreconditionError("one stratum annotation per rule")
        object.__setattr__(self, "strata", strata)
        sig: dict = {}
        for r in rules:
            for p, k in r.preds().items():
                if sig.setdefault(p, k) != k:
                    raise PreconditionError(f"predicate {p} used with arities {sig[p]} and {k}")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i: int) -> Rule:
        return self.rules[i]

    @property
    def signature(self) -> dict:
        sig: dict = {}
        for r in self.rules:
            sig.update(r.preds())
        return sig

    @property
    def is_datalog(self) -> bool:
        return all(r.is_datalog for r in self.rules)

    @property
    def constants(self) -> set:
        return set().union(*(r.constants for r in self.rules)) if self.rules else set()

    def select(self, positions: Iterable[int]) -> "Ruleset":
        """Sub-ruleset at the given list positions, keeping ids and annotations."""
        ps = sorted(set(positions))
        return Ruleset(tuple(self.rules[i] for i in ps), tuple(self.ids[i] for i in ps),
                       tuple(self.strata[i] for i in ps))

    def partition(self, blocks: Sequence[Sequence[int]]) -> list["Ruleset"]:
        """Split by blocks of list positions; the blocks must cover every rule exactly once."""
        seen = [i for b in blocks for i in b]
        if sorted(seen) != list(range(len(self.rules))):
            raise PreconditionError("the blocks do not partition the ruleset")
        return [self.select(b) for b in blocks]

    def annotated_strata(self) -> list["Ruleset"]:
        """Strata from ``@stratum`` annotations, in increasing order."""
        if any(s is None for s in self.strata):
            raise PreconditionError("not every rule carries a stratum annotation")
        levels = sorted(set(self.strata))
        return [self.select(i for i, s in enumerate(self.strata) if s == lv) for lv in levels]

    def __add__(self, other: "Ruleset") -> "Ruleset":
        offset = max(self.ids, default=-1) + 1
        return Ruleset(self.rules + other.rules, self.ids + tuple(offset + i for i in range(len(other))),
                       self.strata + other.strata)


# syntax

_GRAMMAR = r"""
start: item*
?item: stratum | rule
stratum: "@stratum" INT
rule: [atoms] "->" [exists] atoms "."
exists: "exists" VAR ("," VAR)* "."
atoms: atom ("," atom)*
atom: NAME "(" term ("," term)* ")"
?term: VAR -> var
     | CONST -> const
"""


class _ToRules(Transformer):
    def start(self, c):
        rules, strata, cur = [], [], None
        sig: dict = {}
        for x in c:
            if isinstance(x, int):
                cur = x
                continue
            r, line, col = x
            for p, k in r.preds().items():
                if sig.setdefault(p, k) != k:
                    raise ParseError(f"predicate {p} used with arities {sig[p]} and {k}", line, col)
            rules.append(r)
            strata.append(cur)
        return Ruleset(tuple(rules), strata=tuple(strata))

    def stratum(self, c):
        return int(c[0])

    def var(self, c):
        return Var(str(c[0])[1:])

    def const(self, c):
        return str(c[0])

    def atom(self, c):
        return Atom(str(c[0]), tuple(c[1:]))

    def atoms(self, c):
        return tuple(c)

    def exists(self, c):
        return tuple(Var(str(v)[1:]) for v in c)

    @v_args(meta=True)
    def rule(self, meta, c):
        body, ex, head = c
        for a in (body or ()) + head:
            for t in a.args:
                if isinstance(t, str) and t.startswith("_"):
                    raise ParseError(f"rules cannot mention the null {t}", meta.line, meta.column)
        try:
            return Rule(body or (), head, ex or ()), meta.line, meta.column
        except PreconditionError as exc:
            raise ParseError(str(exc), meta.line, meta.column) from None


def parse_rules(text: str) -> Ruleset:
    try:
        return _lark.run(_GRAMMAR, text, _ToRules(), positions=True)
    except PreconditionError as exc:
        raise ParseError(str(exc)) from None


def _fmt_term(t) -> str:
    return str(t)


def _fmt_atoms(atoms) -> str:
    return ", ".join(f"{a.pred}({','.join(_fmt_term(t) for t in a.args)})" for a in atoms)


def format_rule(r: Rule) -> str:
    body = _fmt_atoms(r.body)
    ex = f"exists {','.join(str(v) for v in r.existentials)} . " if r.existentials else ""
    return (body + " " if body else "") + "-> " + ex + _fmt_atoms(r.head) + "."


def format_rules(rs: Ruleset) -> str:
    lines, cur = [], None
    for r, s in zip(rs.rules, rs.strata):
        if s is not None and s != cur:
            lines.append(f"@stratum {s}")
            cur = s
        lines.append(format_rule(r))
    return "\n".join(lines) + ("\n" if lines else "")
