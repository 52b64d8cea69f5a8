"""Decorated binary trees: instructions, nodes and the node table."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, Union

from ..errors import ValidationError


@dataclass(frozen=True, order=True)
class CAdd:
    """Colour the ``positions``-shuffles of left ``left`` and right ``right`` tuples."""

    left: str
    right: str
    positions: tuple
    target: str

    def __str__(self) -> str:
        return f"(cadd {self.left} {self.right} ({' '.join(map(str, self.positions))}) {self.target})"


@dataclass(frozen=True, order=True)
class Recol:
    side: int
    source: str
    target: str

    def __str__(self) -> str:
        return f"(recol {self.side} {self.source} {self.target})"


@dataclass(frozen=True, order=True)
class RAdd:
    left: str
    right: str
    positions: tuple
    pred: str

    def __str__(self) -> str:
        return f"(radd {self.left} {self.right} ({' '.join(map(str, self.positions))}) {self.pred})"


@dataclass(frozen=True, order=True)
class URAdd:
    side: int
    source: str
    pred: str

    def __str__(self) -> str:
        return f"(uradd {self.side} {self.source} {self.pred})"


@dataclass(frozen=True, order=True)
class Const:
    name: str

    def __str__(self) -> str:
        return f"(const {self.name})"


@dataclass(frozen=True, order=True)
class Star:
    def __str__(self) -> str:
        return "(star)"


Instruction = Union[CAdd, Recol, RAdd, URAdd]
Decorator = Union[CAdd, Recol, RAdd, URAdd, Const, Star]
INSTRUCTION_TYPES = (CAdd, Recol, RAdd, URAdd)


_ORIGINAL_RE = re.compile(r"^o([1-9]\d*)$")


def original(k: int) -> str:
    return f"o{k}"


def decorator_key(d) -> tuple:
    order = {Const: 0, Star: 1, CAdd: 2, Recol: 3, RAdd: 4, URAdd: 5}
    return (order[type(d)], str(d))


@dataclass(frozen=True)
class Node:
    """A tree node; ``None`` children are Void."""

    decorators: frozenset = frozenset()
    left: str | None = None
    right: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "decorators", frozenset(self.decorators))

    @property
    def leaf(self) -> Const | Star | None:
        for d in self.decorators:
            if isinstance(d, (Const, Star)):
                return d
        return None

    @property
    def is_pseudoleaf(self) -> bool:
        return self.leaf is not None

    @property
    def instructions(self) -> list:
        return sorted((d for d in self.decorators if isinstance(d, INSTRUCTION_TYPES)), key=decorator_key)

    @property
    def is_void(self) -> bool:
        return not self.decorators and self.left is None and self.right is None

    def with_decorators(self, decorators) -> "Node":
        return Node(frozenset(decorators), self.left, self.right)


def leaf_node(decorator: Const | Star) -> Node:
    return Node(frozenset({decorator}))


def instruction_colors(ins) -> list[str]:
    if isinstance(ins, (CAdd,)):
        return [ins.left, ins.right, ins.target]
    if isinstance(ins, Recol):
        return [ins.source, ins.target]
    if isinstance(ins, RAdd):
        return [ins.left, ins.right]
    if isinstance(ins, URAdd):
        return [ins.source]
    return []


def instruction_preds(ins) -> list[str]:
    if isinstance(ins, (RAdd, URAdd)):
        return [ins.pred]
    return []


@dataclass(frozen=True)
class PwTree:
    """A node table with a root; references may be shared or cyclic."""

    nodes: Mapping[str, Node]
    root: str | None
    colors: Mapping[str, int] = field(default_factory=dict)
    signature: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        nodes = dict(self.nodes)
        colors = dict(self.colors)
        sig = dict(self.signature)
        sig.pop("Top", None)
        errors = []
        for node in nodes.values():
            for d in node.decorators:
                for c in instruction_colors(d):
                    m = _ORIGINAL_RE.match(c)
                    if m and c not in colors:
                        colors[c] = int(m.group(1))
        for name, node in nodes.items():
            for child in (node.left, node.right):
                if child is not None and child not in nodes:
                    errors.append(f"node {name} refers to unknown node {child}")
            for d in node.decorators:
                for p in instruction_preds(d):
                    if p == "Top":
                        errors.append(f"node {name}: Top cannot be emitted by an instruction")
                    sig.setdefault(p, _needed_arity(d, colors))
        if self.root is not None and self.root not in nodes:
            errors.append(f"unknown root {self.root}")
        top = max(list(colors.values()) + list(sig.values()) + [1])
        for k in range(1, top + 1):
            if colors.setdefault(original(k), k) != k:
                errors.append(f"original colour o{k} must have arity {k}")
        for name, node in nodes.items():
            for d in node.decorators:
                errors.extend(f"node {name}: {e}" for e in check_instruction(d, colors, sig))
        if errors:
            raise ValidationError("; ".join(errors), errors)
        object.__setattr__(self, "nodes", MappingProxyType(nodes))
        object.__setattr__(self, "colors", MappingProxyType(colors))
        object.__setattr__(self, "signature", MappingProxyType(sig))

    # structure
    def node(self, name: str | None) -> Node | None:
        return None if name is None else self.nodes[name]

    def children(self, name: str) -> tuple[str | None, str | None]:
        n = self.nodes[name]
        if n.is_pseudoleaf:
            return (None, None)
        return (n.left, n.right)

    def reachable(self) -> list[str]:
        """Node names reachable from the root (leaf children ignored), preorder."""
        seen: list[str] = []
        mark = set()
        stack = [self.root] if self.root is not None else []
        while stack:
            n = stack.pop()
            if n is None or n in mark:
                continue
            mark.add(n)
            seen.append(n)
            l, r = self.children(n)
            stack.extend([r, l])
        return seen

    @property
    def is_finite(self) -> bool:
        return find_cycle(self) is None

    def height(self) -> int:
        """Length of the longest root path; -1 for a Void root."""
        if not self.is_finite:
            raise ValidationError("height of an infinite tree")
        memo: dict = {}

        def h(n):
            if n is None:
                return -1
            if n not in memo:
                l, r = self.children(n)
                if l is None and r is None:
                    memo[n] = 0
                else:
                    memo[n] = 1 + max(h(l), h(r))
            return memo[n]

        return h(self.root)

    def node_at(self, address: str) -> str | None:
        cur = self.root
        for ch in address:
            if cur is None:
                return None
            l, r = self.children(cur)
            cur = l if ch == "0" else r
        return cur

    def addresses(self) -> Iterator[tuple[str, str]]:
        """(address, node name) pairs of a finite tree, preorder."""
        if not self.is_finite:
            raise ValidationError("addresses of an infinite tree are unbounded")
        stack = [("", self.root)] if self.root is not None else []
        while stack:
            addr, n = stack.pop()
            yield addr, n
            l, r = self.children(n)
            if r is not None:
                stack.append((addr + "1", r))
            if l is not None:
                stack.append((addr + "0", l))

    @property
    def max_arity(self) -> int:
        return max(self.colors.values())

    def originals(self) -> list[str]:
        return [original(k) for k in range(1, self.max_arity + 1)]

    def replace(self, **kw) -> "PwTree":
        args = dict(nodes=self.nodes, root=self.root, colors=self.colors, signature=self.signature)
        args.update(kw)
        return PwTree(**args)


def _needed_arity(ins, colors) -> int:
    if isinstance(ins, RAdd):
        return colors.get(ins.left, 0) + colors.get(ins.right, 0)
    return colors.get(ins.source, 0)


def check_instruction(ins, colors: Mapping[str, int], sig: Mapping[str, int]) -> list[str]:
    errs = []
    for c in instruction_colors(ins):
        if c not in colors:
            errs.append(f"unknown colour {c} in {ins}")
    if errs:
        return errs
    if isinstance(ins, (CAdd, RAdd)):
        a, b = colors[ins.left], colors[ins.right]
        total = colors[ins.target] if isinstance(ins, CAdd) else sig.get(ins.pred)
        if total != a + b:
            errs.append(f"arity mismatch in {ins}")
        pos = ins.positions
        if len(set(pos)) != len(pos) or len(pos) != a or any(not 1 <= p <= a + b for p in pos):
            errs.append(f"bad positions in {ins}")
        if tuple(sorted(pos)) != tuple(pos):
            errs.append(f"positions must be sorted in {ins}")
    elif isinstance(ins, Recol):
        if ins.side not in (0, 1):
            errs.append(f"bad side in {ins}")
        if colors[ins.source] != colors[ins.target]:
            errs.append(f"arity mismatch in {ins}")
    elif isinstance(ins, URAdd):
        if ins.side not in (0, 1):
            errs.append(f"bad side in {ins}")
        if sig.get(ins.pred) != colors[ins.source]:
            errs.append(f"arity mismatch in {ins}")
    return errs


def find_cycle(tree: PwTree) -> list[str] | None:
    """A reference cycle reachable from the root, or None."""
    state: dict = {}
    path: list[str] = []

    def visit(n):
        state[n] = 1
        path.append(n)
        for c in tree.children(n):
            if c is None:
                continue
            s = state.get(c, 0)
            if s == 1:
                return path[path.index(c):] + [c]
            if s == 0:
                found = visit(c)
                if found:
                    return found
        state[n] = 2
        path.pop()
        return None

    if tree.root is None:
        return None
    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * len(tree.nodes) + 1000))
    try:
        return visit(tree.root)
    finally:
        sys.setrecursionlimit(limit)


def incompatible_pairs(node: Node) -> list[tuple]:
    """CAdd or Recol pairs that differ only in their target colour."""
    seen: dict = {}
    out = []
    for ins in node.instructions:
        if isinstance(ins, CAdd):
            key = ("c", ins.left, ins.right, ins.positions)
        elif isinstance(ins, Recol):
            key = ("r", ins.side, ins.source)
        else:
            continue
        if key in seen and seen[key].target != ins.target:
            out.append((seen[key], ins))
        seen.setdefault(key, ins)
    return out
