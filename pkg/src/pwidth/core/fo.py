"""First-order formulas evaluated over the active domain."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from lark import Transformer

from .. import _lark
from ..errors import PreconditionError
from .instance import Instance
from .terms import TOP, Atom, Var


@dataclass(frozen=True)
class FAtom:
    pred: str
    args: tuple

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Eq:
    left: object
    right: object

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Truth:
    value: bool

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"

    def __str__(self) -> str:
        return format_fo(self)


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"

    def __str__(self) -> str:
        return format_fo(self)


Formula = Union[FAtom, Eq, Truth, Not, And, Or, Exists, Forall]


def free_vars(f: Formula) -> tuple[Var, ...]:
    """Free variables in order of first occurrence."""
    out: list[Var] = []

    def walk(g, bound: frozenset):
        if isinstance(g, FAtom):
            terms = g.args
        elif isinstance(g, Eq):
            terms = (g.left, g.right)
        elif isinstance(g, Truth):
            return
        elif isinstance(g, Not):
            walk(g.body, bound)
            return
        elif isinstance(g, (And, Or)):
            walk(g.left, bound)
            walk(g.right, bound)
            return
        else:
            walk(g.body, bound | {g.var})
            return
        for t in terms:
            if isinstance(t, Var) and t not in bound and t not in out:
                out.append(t)

    walk(f, frozenset())
    return tuple(out)


def predicates(f: Formula) -> set[str]:
    if isinstance(f, FAtom):
        return {f.pred}
    if isinstance(f, (Eq, Truth)):
        return set()
    if isinstance(f, Not) or isinstance(f, (Exists, Forall)):
        return predicates(f.body)
    return predicates(f.left) | predicates(f.right)


def depth(f: Formula) -> int:
    if isinstance(f, (FAtom, Eq, Truth)):
        return 0
    if isinstance(f, (Not, Exists, Forall)):
        return 1 + depth(f.body)
    return 1 + max(depth(f.left), depth(f.right))


def eval_fo(inst: Instance, f: Formula, nu: Mapping) -> bool:
    """Satisfaction of ``f`` under assignment ``nu``; quantifiers range over adom."""
    missing = [v for v in free_vars(f) if v not in nu]
    if missing:
        raise PreconditionError(f"unbound free variables {[str(v) for v in missing]}")
    return _eval(inst, f, dict(nu), sorted(inst.adom))


def _val(t, nu):
    return nu[t] if isinstance(t, Var) else t


def _eval(inst: Instance, f: Formula, nu: dict, dom: list) -> bool:
    if isinstance(f, FAtom):
        args = tuple(_val(t, nu) for t in f.args)
        if f.pred == TOP:
            return args[0] in inst.adom
        return args in inst.relation(f.pred)
    if isinstance(f, Eq):
        return _val(f.left, nu) == _val(f.right, nu)
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Not):
        return not _eval(inst, f.body, nu, dom)
    if isinstance(f, And):
        return _eval(inst, f.left, nu, dom) and _eval(inst, f.right, nu, dom)
    if isinstance(f, Or):
        return _eval(inst, f.left, nu, dom) or _eval(inst, f.right, nu, dom)
    if isinstance(f, (Exists, Forall)):
        want = isinstance(f, Exists)
        saved = nu.get(f.var, _MISSING)
        try:
            for d in dom:
                nu[f.var] = d
                if _eval(inst, f.body, nu, dom) == want:
                    return want
            return not want
        finally:
            if saved is _MISSING:
                nu.pop(f.var, None)
            else:
                nu[f.var] = saved
    raise TypeError(f"not a formula: {f!r}")


_MISSING = object()


def defined_relation(inst: Instance, f: Formula, xs: Sequence[Var]) -> set[tuple]:
    xs = tuple(xs)
    extra = set(free_vars(f)) - set(xs)
    if extra:
        raise PreconditionError(f"free variables {[str(v) for v in extra]} not among the answer variables")
    dom = sorted(inst.adom)
    out = set()
    for tup in itertools.product(dom, repeat=len(xs)):
        nu = dict(zip(xs, tup))
        if len(nu) != len(xs) and any(nu[x] != t for x, t in zip(xs, tup)):
            continue
        if _eval(inst, f, nu, dom):
            out.add(tup)
    return out


def fo_extend(inst: Instance, pred: str, f: Formula, xs: Sequence[Var] | None = None) -> Instance:
    xs = tuple(xs) if xs is not None else free_vars(f)
    arity = inst.signature.get(pred, len(xs))
    if len(xs) != arity or not xs:
        raise PreconditionError(f"{pred} has arity {arity} but the formula defines {len(xs)} columns")
    sig = dict(inst.signature)
    sig[pred] = arity
    new = {Atom(pred, t) for t in defined_relation(inst, f, xs)}
    return Instance(inst.atoms | new, sig)


# syntax: ~ & | -> <-> exists forall true false, variables ?x

_GRAMMAR = r"""
start: formula
?formula: iff | quant
?iff: imp
    | imp "<->" tail_imp      -> iff
?tail_imp: imp | quant
?imp: disj
    | disj "->" tail_imp      -> imp
?disj: conj
     | conj ("|" conj)+        -> disj
     | conj ("|" conj)* "|" quant -> disj
?conj: unary
     | unary ("&" unary)+      -> conj
     | unary ("&" unary)* "&" quant -> conj
?unary: "~" unary              -> neg
      | "~" quant              -> neg
      | NAME "(" [term ("," term)*] ")" -> atom
      | term "=" term          -> eq
      | "true"                 -> true
      | "false"                -> false
      | "(" formula ")"
quant: "exists" vars "." formula -> ex
     | "forall" vars "." formula -> fa
vars: VAR ("," VAR)*
?term: VAR -> var
     | CONST -> const
"""


class _ToFo(Transformer):
    def start(self, c):
        return c[0]

    def iff(self, c):
        a, b = c
        return And(Or(Not(a), b), Or(Not(b), a))

    def imp(self, c):
        return Or(Not(c[0]), c[1])

    def disj(self, c):
        out = c[0]
        for x in c[1:]:
            out = Or(out, x)
        return out

    def conj(self, c):
        out = c[0]
        for x in c[1:]:
            out = And(out, x)
        return out

    def neg(self, c):
        return Not(c[0])

    def vars(self, c):
        return [Var(str(v)[1:]) for v in c]

    def ex(self, c):
        out = c[1]
        for v in reversed(c[0]):
            out = Exists(v, out)
        return out

    def fa(self, c):
        out = c[1]
        for v in reversed(c[0]):
            out = Forall(v, out)
        return out

    def atom(self, c):
        args = tuple(x for x in c[1:] if x is not None)
        return FAtom(str(c[0]), args)

    def eq(self, c):
        return Eq(c[0], c[1])

    def true(self, _):
        return Truth(True)

    def false(self, _):
        return Truth(False)

    def var(self, c):
        return Var(str(c[0])[1:])

    def const(self, c):
        return str(c[0])


def parse_fo(text: str) -> Formula:
    return _lark.run(_GRAMMAR, text, _ToFo())


def _fmt_term(t) -> str:
    return str(t)


def format_fo(f: Formula) -> str:
    if isinstance(f, FAtom):
        return f"{f.pred}({','.join(_fmt_term(t) for t in f.args)})"
    if isinstance(f, Eq):
        return f"{_fmt_term(f.left)} = {_fmt_term(f.right)}"
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return f"~{_paren(f.body)}"
    if isinstance(f, And):
        return f"{_paren(f.left)} & {_paren(f.right)}"
    if isinstance(f, Or):
        return f"{_paren(f.left)} | {_paren(f.right)}"
    if isinstance(f, Exists):
        return f"exists {f.var} . {_paren(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var} . {_paren(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def _paren(f: Formula) -> str:
    s = format_fo(f)
    return s if isinstance(f, (FAtom, Truth, Not)) else f"({s})"
