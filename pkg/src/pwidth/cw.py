"""Cliquewidth expressions and the translation from binary-signature trees."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import networkx as nx
from lark import Transformer

from . import _lark
from .core.instance import Instance
from .core.terms import TOP, Atom
from .errors import ParseError, PreconditionError
from .pwtree.evaluate import null_name, require_valid
from .pwtree.model import Const, Node, PwTree, RAdd, Recol, URAdd, original
from .pwtree.normal import to_normal


@dataclass(frozen=True)
class ConstLeaf:
    name: str
    color: str


@dataclass(frozen=True)
class StarLeaf:
    color: str


@dataclass(frozen=True)
class Oplus:
    left: "CwExpr"
    right: "CwExpr"


@dataclass(frozen=True)
class Recolor:
    source: str
    target: str
    body: "CwExpr"


@dataclass(frozen=True)
class Add:
    pred: str
    colors: tuple
    body: "CwExpr"


CwExpr = Union[ConstLeaf, StarLeaf, Oplus, Recolor, Add]


def _postorder(e: CwExpr) -> list:
    """Subexpressions in post-order, left operand first."""
    out, stack = [], [(e, False)]
    while stack:
        node, done = stack.pop()
        if done:
            out.append(node)
            continue
        stack.append((node, True))
        if isinstance(node, Oplus):
            stack.append((node.right, False))
            stack.append((node.left, False))
        elif isinstance(node, (Recolor, Add)):
            stack.append((node.body, False))
    return out


def star_count(e: CwExpr) -> int:
    return sum(isinstance(n, StarLeaf) for n in _postorder(e))


def cw_colors(e: CwExpr) -> set[str]:
    out = set()
    for n in _postorder(e):
        if isinstance(n, (ConstLeaf, StarLeaf)):
            out.add(n.color)
        elif isinstance(n, Recolor):
            out |= {n.source, n.target}
        elif isinstance(n, Add):
            out |= set(n.colors)
    return out


def cw_signature(e: CwExpr) -> dict:
    sig: dict = {}
    for n in _postorder(e):
        if isinstance(n, Add):
            if not n.colors:
                raise PreconditionError(f"Add for {n.pred} has no colours")
            if sig.setdefault(n.pred, len(n.colors)) != len(n.colors):
                raise PreconditionError(f"predicate {n.pred} used with arities {sig[n.pred]} and {len(n.colors)}")
    return sig


def eval_cw(e: CwExpr, signature: dict | None = None) -> Instance:
    """Bottom-up evaluation; nulls are named _0, _1, ... from left to right."""
    sig = cw_signature(e)
    for p, k in (signature or {}).items():
        if sig.setdefault(p, k) != k:
            raise PreconditionError(f"Add for {p} has {sig[p]} colours but the signature says {k}")
    atoms: set = set()
    stars = itertools.count()
    seen_consts: set = set()
    stack: list = []
    for n in _postorder(e):
        if isinstance(n, ConstLeaf):
            if n.name in seen_consts:
                raise PreconditionError(f"constant {n.name} occurs twice")
            seen_consts.add(n.name)
            val = {n.color: frozenset({n.name})}
            atoms.add(Atom(TOP, (n.name,)))
        elif isinstance(n, StarLeaf):
            t = f"_{next(stars)}"
            val = {n.color: frozenset({t})}
            atoms.add(Atom(TOP, (t,)))
        elif isinstance(n, Oplus):
            b, a = stack.pop(), stack.pop()
            val = {c: a.get(c, frozenset()) | b.get(c, frozenset()) for c in set(a) | set(b)}
        elif isinstance(n, Recolor):
            val = dict(stack.pop())
            moved = val.pop(n.source, frozenset())
            if moved:
                val[n.target] = val.get(n.target, frozenset()) | moved
        else:
            val = stack.pop()
            groups = [sorted(val.get(c, ())) for c in n.colors]
            atoms.update(Atom(n.pred, t) for t in itertools.product(*groups))
        stack.append(val)
    return Instance(atoms, sig)


# recolour cycles

@dataclass(frozen=True)
class RecolorCycle:
    side: int
    colors: tuple


def detect_recolor_cycles(node: Node) -> list[RecolorCycle]:
    """Every simple cycle of the per-side recolouring graph of a node.

    Each cycle is rotated to start at its least colour.
    """
    if node.is_pseudoleaf:
        raise PreconditionError("recolour cycles live at inner nodes")
    out = []
    for side in (0, 1):
        g = nx.DiGraph()
        g.add_edges_from((r.source, r.target) for r in node.instructions
                         if isinstance(r, Recol) and r.side == side and r.source != r.target)
        for cyc in nx.simple_cycles(g):
            k = cyc.index(min(cyc))
            out.append(RecolorCycle(side, tuple(cyc[k:] + cyc[:k])))
    return sorted(out, key=lambda c: (c.side, len(c.colors), c.colors))


def sequential_recolors(mapping: dict, buffer: str) -> list[tuple]:
    """Recolourings applied one at a time with the effect of applying
    ``mapping`` simultaneously.

    A recolouring runs once its target is no longer waiting to be moved.
    When only cycles remain, the smallest one (then the least colours) is
    opened by parking its least colour in ``buffer``.
    """
    pending = {s: t for s, t in mapping.items() if s != t}
    ops = []
    while pending:
        free = sorted(s for s, t in pending.items() if t not in pending)
        if free:
            s = free[0]
            ops.append((s, pending.pop(s)))
            continue
        cycles = set()
        for start in pending:
            path, cur = [], start
            while cur not in path:
                path.append(cur)
                cur = pending[cur]
            cyc = path[path.index(cur):]
            cycles.add((len(cyc), tuple(sorted(cyc))))
        first = min(cycles)[1][0]
        ops.append((first, buffer))
        pending[buffer] = pending.pop(first)
    return ops


# translation

@dataclass
class CwTranslation:
    """A cliquewidth expression for a tree, with its palette and the entity map."""

    expr: CwExpr
    colors: list
    h: dict = field(default_factory=dict)
    tags: dict = field(default_factory=dict)
    buffer: str = ""


def _fresh_names(base: set, wanted: list) -> dict:
    taken, out = set(base), {}
    for key, stem in wanted:
        name = stem
        while name in taken:
            name += "_"
        taken.add(name)
        out[key] = name
    return out


def cw_palette(tree: PwTree) -> tuple[list, dict, str]:
    """Unary colours, their side-tagged copies, and the cycle buffer."""
    unary = sorted(set(c for c, k in tree.colors.items() if k == 1) | {original(1)})
    names = _fresh_names(set(tree.colors), [((c, i), f"{c}_t{i}") for c in unary for i in (0, 1)]
                         + [("buffer", "mu_cb")])
    buffer = names.pop("buffer")
    return unary, names, buffer


def pw_to_cw(tree: PwTree) -> CwTranslation:
    """Cliquewidth expression denoting the same instance as a finite tree over a binary signature."""
    require_valid(tree)
    if any(k > 2 for k in tree.signature.values()):
        raise PreconditionError("the translation needs a signature of arity at most 2")
    if any(k > 2 for k in tree.colors.values()):
        raise PreconditionError("the translation needs colours of arity at most 2")
    if tree.root is None:
        raise PreconditionError("the empty tree has no cliquewidth expression")
    t = to_normal(tree)
    unary, tags, buffer = cw_palette(t)
    colors = unary + [tags[(c, i)] for c in unary for i in (0, 1)] + [buffer]
    h: dict = {}
    stars = itertools.count()
    built: dict = {}
    stack = [(t.root, "", False)]
    # iterative post-order, left child first, matching the null numbering of eval_cw
    order = []
    while stack:
        name, addr, done = stack.pop()
        if done:
            order.append((name, addr))
            continue
        stack.append((name, addr, True))
        node = t.nodes[name]
        if not node.is_pseudoleaf:
            if node.right is not None:
                stack.append((node.right, addr + "1", False))
            if node.left is not None:
                stack.append((node.left, addr + "0", False))
    for name, addr in order:
        node = t.nodes[name]
        if node.is_pseudoleaf:
            if isinstance(node.leaf, Const):
                h[node.leaf.name] = node.leaf.name
                built[addr] = ConstLeaf(node.leaf.name, original(1))
            else:
                h[null_name(addr)] = f"_{next(stars)}"
                built[addr] = StarLeaf(original(1))
            continue
        built[addr] = _translate_node(t, node, addr, built, unary, tags, buffer)
    return CwTranslation(built[""], colors, h, tags, buffer)


def _translate_node(t, node, addr, built, unary, tags, buffer) -> CwExpr:
    parts = []
    for side, child in enumerate((node.left, node.right)):
        if child is None:
            continue
        e = built.pop(addr + str(side))
        for c in unary:
            e = Recolor(c, tags[(c, side)], e)
        parts.append(e)
    e = parts[0] if len(parts) == 1 else Oplus(parts[0], parts[1])
    for ins in sorted(node.instructions, key=str):
        if isinstance(ins, RAdd):
            if t.signature[ins.pred] != 2 or t.colors[ins.left] != 1 or t.colors[ins.right] != 1:
                raise PreconditionError(f"unexpected relation addition {ins} in normal form")
            a, b = tags[(ins.left, 0)], tags[(ins.right, 1)]
            e = Add(ins.pred, (a, b) if ins.positions == (1,) else (b, a), e)
        elif isinstance(ins, URAdd):
            k = t.signature[ins.pred]
            e = Add(ins.pred, (tags[(original(1), ins.side)],) * k, e)
    for side in (0, 1):
        mapping = {tags[(r.source, side)]: tags[(r.target, side)] for r in node.instructions
                   if isinstance(r, Recol) and r.side == side and t.colors[r.source] == 1}
        for s, g in sequential_recolors(mapping, buffer):
            e = Recolor(s, g, e)
    for side in (0, 1):
        for c in unary:
            e = Recolor(tags[(c, side)], c, e)
    return e


# S-expression syntax

_GRAMMAR = r"""
start: expr
?expr: "(" "cconst" CONST NAME ")"             -> cconst
     | "(" "cstar" NAME ")"                     -> cstar
     | "(" "coplus" expr expr ")"               -> coplus
     | "(" "crecolor" NAME NAME expr ")"        -> crecolor
     | "(" "cadd" NAME "(" NAME* ")" expr ")"   -> cadd
"""


class _ToCw(Transformer):
    def start(self, c):
        return c[0]

    def cconst(self, c):
        return ConstLeaf(str(c[0]), str(c[1]))

    def cstar(self, c):
        return StarLeaf(str(c[0]))

    def coplus(self, c):
        return Oplus(c[0], c[1])

    def crecolor(self, c):
        return Recolor(str(c[0]), str(c[1]), c[2])

    def cadd(self, c):
        if len(c) < 3:
            raise ParseError("cadd needs at least one colour")
        return Add(str(c[0]), tuple(str(x) for x in c[1:-1]), c[-1])


def parse_cw(text: str) -> CwExpr:
    return _lark.run(_GRAMMAR, text, _ToCw())


def format_cw(e: CwExpr) -> str:
    stack: list = []
    for n in _postorder(e):
        if isinstance(n, ConstLeaf):
            s = f"(cconst {n.name} {n.color})"
        elif isinstance(n, StarLeaf):
            s = f"(cstar {n.color})"
        elif isinstance(n, Oplus):
            b, a = stack.pop(), stack.pop()
            s = f"(coplus {a} {b})"
        elif isinstance(n, Recolor):
            s = f"(crecolor {n.source} {n.target} {stack.pop()})"
        else:
            s = f"(cadd {n.pred} ({' '.join(n.colors)}) {stack.pop()})"
        stack.append(s)
    return stack[0]
