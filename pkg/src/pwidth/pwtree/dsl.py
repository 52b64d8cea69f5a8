"""S-expression syntax for decorated trees."""
from __future__ import annotations

import re
from collections import defaultdict

from lark import Transformer

from .. import _lark
from ..errors import ParseError, ValidationError
from .model import CAdd, Const, Node, PwTree, RAdd, Recol, Star, URAdd, decorator_key

_GRAMMAR = r"""
start: header* item*
header: COLORS spec*  -> colors
      | SIG spec*     -> sig
spec: NAME "/" INT
COLORS: "@colors"
SIG: "@sig"
item: "(" "def" NAME expr ")" -> define
    | expr                     -> rootexpr
?expr: "(" "const" CONST ")"   -> const
     | "(" "star" ")"          -> star
     | "(" "void" ")"          -> void
     | "(" "ref" NAME ")"      -> ref
     | "(" "node" "[" instr* "]" expr expr ")" -> node
instr: "(" "cadd" NAME NAME "(" INT* ")" NAME ")"  -> cadd
     | "(" "recol" INT NAME NAME ")"              -> recol
     | "(" "radd" NAME NAME "(" INT* ")" NAME ")"  -> radd
     | "(" "uradd" INT NAME NAME ")"              -> uradd
"""


class _ToAst(Transformer):
    def spec(self, c):
        return (str(c[0]), int(c[1]))

    def colors(self, c):
        return ("colors", c[1:])

    def sig(self, c):
        return ("sig", c[1:])

    def const(self, c):
        return ("const", str(c[0]))

    def star(self, _):
        return ("star",)

    def void(self, _):
        return ("void",)

    def ref(self, c):
        return ("ref", str(c[0]))

    def node(self, c):
        return ("node", c[:-2], c[-2], c[-1])

    def cadd(self, c):
        return CAdd(str(c[0]), str(c[1]), tuple(int(x) for x in c[2:-1]), str(c[-1]))

    def radd(self, c):
        return RAdd(str(c[0]), str(c[1]), tuple(int(x) for x in c[2:-1]), str(c[-1]))

    def recol(self, c):
        return Recol(int(c[0]), str(c[1]), str(c[2]))

    def uradd(self, c):
        return URAdd(int(c[0]), str(c[1]), str(c[2]))

    def define(self, c):
        return ("def", str(c[0]), c[1])

    def rootexpr(self, c):
        return ("root", c[0])

    def start(self, c):
        return c


def parse_tree(text: str) -> PwTree:
    items = _lark.run(_GRAMMAR, text, _ToAst())
    colors: dict = {}
    sig: dict = {}
    defs: dict = {}
    roots = []
    for it in items:
        if it[0] == "colors":
            for name, ar in it[1]:
                if ar < 1:
                    raise ParseError(f"colour {name} needs a positive arity")
                colors[name] = ar
        elif it[0] == "sig":
            for name, ar in it[1]:
                if ar < 1:
                    raise ParseError(f"predicate {name} needs a positive arity")
                sig[name] = ar
        elif it[0] == "def":
            if it[1] in defs:
                raise ParseError(f"duplicate definition {it[1]}")
            defs[it[1]] = it[2]
        else:
            roots.append(it[1])
    if len(roots) != 1:
        raise ParseError(f"expected exactly one root expression, found {len(roots)}")
    nodes: dict = {}
    alias: dict = {}

    def build(expr, name):
        kind = expr[0]
        if kind == "void":
            return None
        if kind == "ref":
            if expr[1] not in defs:
                raise ParseError(f"unresolved reference {expr[1]}")
            return ("alias", expr[1])
        if kind == "const":
            nodes[name] = Node(frozenset({Const(expr[1])}))
        elif kind == "star":
            nodes[name] = Node(frozenset({Star()}))
        else:
            _, instrs, l, r = expr
            nodes[name] = Node(frozenset(instrs), build(l, name + "0"), build(r, name + "1"))
        return name

    for dname, body in defs.items():
        res = build(body, dname)
        if res != dname:
            alias[dname] = res
    root = build(roots[0], "@")

    def resolve(x, seen=()):
        if isinstance(x, tuple):
            target = x[1]
            if target in seen:
                raise ParseError(f"reference cycle through aliases at {target}")
            nxt = alias.get(target, target)
            return resolve(nxt, seen + (target,)) if isinstance(nxt, tuple) else nxt
        return x

    for k, n in list(nodes.items()):
        nodes[k] = Node(n.decorators, resolve(n.left), resolve(n.right))
    root = resolve(root)
    try:
        return PwTree(nodes, root, colors, sig)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


_IDENT = re.compile(r"^[A-Za-z_]\w*$")
_KEYWORDS = {"def", "ref", "node", "const", "star", "void", "cadd", "recol", "radd", "uradd"}


def format_tree(tree: PwTree) -> str:
    reach = tree.reachable()
    indeg: dict = defaultdict(int)
    for n in reach:
        for c in tree.children(n):
            if c is not None:
                indeg[c] += 1
    cyclic = set()
    for n in reach:
        stack = [c for c in tree.children(n) if c is not None]
        seen = set()
        while stack:
            m = stack.pop()
            if m == n:
                cyclic.add(n)
                break
            if m not in seen:
                seen.add(m)
                stack.extend(c for c in tree.children(m) if c is not None)
    shared = [n for n in reach if indeg[n] > 1 or n in cyclic]
    names: dict = {}
    used = set()
    for i, n in enumerate(shared):
        cand = n if _IDENT.match(n) and n not in _KEYWORDS else f"N{i}"
        while cand in used:
            cand += "_"
        used.add(cand)
        names[n] = cand

    def expr(n, indent, top=False):
        if n is None:
            return "(void)"
        if n in names and not top:
            return f"(ref {names[n]})"
        node = tree.nodes[n]
        leaf = node.leaf
        if leaf is not None:
            return str(leaf)
        if node.is_void:
            return "(void)"
        ins = " ".join(str(d) for d in sorted(node.decorators, key=decorator_key))
        pad = "  " * (indent + 1)
        return (f"(node [{ins}]\n{pad}{expr(node.left, indent + 1)}\n"
                f"{pad}{expr(node.right, indent + 1)})")

    lines = []
    cols = " ".join(f"{c}/{a}" for c, a in sorted(tree.colors.items()))
    lines.append(f"@colors {cols}")
    if tree.signature:
        lines.append("@sig " + " ".join(f"{p}/{a}" for p, a in sorted(tree.signature.items())))
    for n in shared:
        lines.append(f"(def {names[n]} {expr(n, 1, top=True)})")
    lines.append(expr(tree.root, 0))
    return "\n".join(lines) + "\n"
