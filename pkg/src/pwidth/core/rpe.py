"""Two-way regular path expressions over binary predicates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from lark import Transformer

from .. import _lark
from ..errors import PreconditionError
from .instance import Instance
from .terms import Atom


@dataclass(frozen=True)
class Forward:
    pred: str

    def __str__(self) -> str:
        return f"{self.pred}>"


@dataclass(frozen=True)
class Backward:
    pred: str

    def __str__(self) -> str:
        return f"{self.pred}<"


@dataclass(frozen=True)
class Concat:
    left: "Rpe"
    right: "Rpe"

    def __str__(self) -> str:
        return format_rpe(self)


@dataclass(frozen=True)
class Union_:
    left: "Rpe"
    right: "Rpe"

    def __str__(self) -> str:
        return format_rpe(self)


@dataclass(frozen=True)
class Star:
    body: "Rpe"

    def __str__(self) -> str:
        return format_rpe(self)


Rpe = Union[Forward, Backward, Concat, Union_, Star]


def step_predicates(e: Rpe) -> set[str]:
    if isinstance(e, (Forward, Backward)):
        return {e.pred}
    if isinstance(e, Star):
        return step_predicates(e.body)
    return step_predicates(e.left) | step_predicates(e.right)


def star_depth(e: Rpe) -> int:
    if isinstance(e, (Forward, Backward)):
        return 0
    if isinstance(e, Star):
        return 1 + star_depth(e.body)
    return max(star_depth(e.left), star_depth(e.right))


def _compose(r1: set, r2: set) -> set:
    succ: dict = {}
    for a, b in r2:
        succ.setdefault(a, []).append(b)
    return {(a, c) for a, b in r1 for c in succ.get(b, ())}


def rpe_eval(e: Rpe, inst: Instance) -> set[tuple]:
    """The binary relation denoted by ``e`` on ``inst``."""
    if isinstance(e, Forward):
        _check_binary(inst, e.pred)
        return set(inst.relation(e.pred))
    if isinstance(e, Backward):
        _check_binary(inst, e.pred)
        return {(b, a) for a, b in inst.relation(e.pred)}
    if isinstance(e, Concat):
        return _compose(rpe_eval(e.left, inst), rpe_eval(e.right, inst))
    if isinstance(e, Union_):
        return rpe_eval(e.left, inst) | rpe_eval(e.right, inst)
    if isinstance(e, Star):
        base = rpe_eval(e.body, inst)
        closure = {(t, t) for t in inst.adom} | base
        while True:
            nxt = closure | _compose(closure, base)
            if nxt == closure:
                return closure
            closure = nxt
    raise TypeError(f"not an expression: {e!r}")


def _check_binary(inst: Instance, pred: str) -> None:
    ar = inst.signature.get(pred)
    if ar is not None and ar != 2:
        raise PreconditionError(f"step predicate {pred} is not binary")


def rpe_extend(inst: Instance, pred: str, e: Rpe) -> Instance:
    if inst.signature.get(pred, 2) != 2:
        raise PreconditionError(f"{pred} is not binary")
    sig = dict(inst.signature)
    sig[pred] = 2
    return Instance(inst.atoms | {Atom(pred, p) for p in rpe_eval(e, inst)}, sig)


_GRAMMAR = r"""
start: alt
?alt: seq ("|" seq)*
?seq: post+
?post: prim STAR*
?prim: NAME ">"  -> fwd
     | NAME "<"  -> bwd
     | "(" alt ")"
STAR: "*"
"""


class _ToRpe(Transformer):
    def start(self, c):
        return c[0]

    def alt(self, c):
        out = c[0]
        for x in c[1:]:
            out = Union_(out, x)
        return out

    def seq(self, c):
        out = c[0]
        for x in c[1:]:
            out = Concat(out, x)
        return out

    def post(self, c):
        out = c[0]
        for _ in c[1:]:
            out = Star(out)
        return out

    def fwd(self, c):
        return Forward(str(c[0]))

    def bwd(self, c):
        return Backward(str(c[0]))


def parse_rpe(text: str) -> Rpe:
    return _lark.run(_GRAMMAR, text, _ToRpe())


def format_rpe(e: Rpe) -> str:
    if isinstance(e, (Forward, Backward)):
        return str(e)
    if isinstance(e, Star):
        return f"({format_rpe(e.body)})*"
    if isinstance(e, Union_):
        return f"{format_rpe(e.left)} | {format_rpe(e.right)}"
    parts = []
    for side in (e.left, e.right):
        s = format_rpe(side)
        parts.append(f"({s})" if isinstance(side, Union_) else s)
    return " ".join(parts)
