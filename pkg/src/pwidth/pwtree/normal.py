"""Streak substitution and the prenormal/normal forms."""
from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from ..errors import PreconditionError
from .evaluate import address_tree, require_valid
from .model import CAdd, Const, Node, PwTree, RAdd, Recol, Star, URAdd, original


def _fresh(nodes, base: str) -> str:
    k = 1
    while f"{base}~{k}" in nodes:
        k += 1
    return f"{base}~{k}"


def substitute_streak(tree: PwTree, node: str, streak: Sequence, colors=None, signature=None) -> PwTree:
    """Replace ``node`` by a unary chain carrying ``streak`` (deepest first).

    The deepest chain node keeps the original children; every higher node has
    the previous chain node as left child and a Void right child.
    """
    if node not in tree.nodes:
        raise PreconditionError(f"unknown node {node}")
    if not streak:
        raise PreconditionError("a streak needs at least one instruction set")
    if node not in set(tree.reachable()):
        raise PreconditionError(f"node {node} is not reachable or lies below a pseudoleaf")
    nodes = dict(tree.nodes)
    orig = nodes[node]
    below = _fresh(nodes, node)
    nodes[below] = Node(frozenset(streak[0]), orig.left, orig.right)
    for k, ins in enumerate(streak[1:], 1):
        name = node if k == len(streak) - 1 else _fresh(nodes, node)
        nodes[name] = Node(frozenset(ins), below, None)
        below = name
    if len(streak) == 1:
        nodes[node] = nodes.pop(below)
    cols = dict(tree.colors)
    cols.update(colors or {})
    sig = dict(tree.signature)
    sig.update(signature or {})
    return PwTree(nodes, tree.root, cols, sig)


def add_root_streak(tree: PwTree, streak: Sequence, colors=None, signature=None) -> PwTree:
    """Stack unary nodes above the root (an empty first set keeps the root as is)."""
    if tree.root is None:
        return tree.replace(colors={**tree.colors, **(colors or {})},
                            signature={**tree.signature, **(signature or {})})
    nodes = dict(tree.nodes)
    below = tree.root
    for ins in streak:
        name = _fresh(nodes, "root")
        nodes[name] = Node(frozenset(ins), below, None)
        below = name
    return PwTree(nodes, below, {**tree.colors, **(colors or {})}, {**tree.signature, **(signature or {})})


def pathmaps(tree: PwTree) -> dict:
    """For an address tree: recolour map of every node towards each ancestor.

    Returns ``up[name] = (parent name, side)``.
    """
    up = {}
    for n, node in tree.nodes.items():
        if node.is_pseudoleaf:
            continue
        for side, c in enumerate((node.left, node.right)):
            if c is not None:
                up[c] = (n, side)
    return up


def _recol_map(node: Node, side: int) -> dict:
    return {i.source: i.target for i in node.instructions if isinstance(i, Recol) and i.side == side}


def to_prenormal(tree: PwTree) -> PwTree:
    """Justify every URAdd-emitted fact at its creation point."""
    require_valid(tree)
    t = address_tree(tree)
    up = pathmaps(t)
    extra: dict = defaultdict(set)
    for name, node in t.nodes.items():
        for u in node.instructions:
            if not isinstance(u, URAdd):
                continue
            top = node.left if u.side == 0 else node.right
            if top is None:
                continue
            # walk the subtree rooted at the child
            stack = [top]
            while stack:
                s = stack.pop()
                sn = t.nodes[s]
                color_of = _mapper(t, up, s, top)
                if sn.is_pseudoleaf:
                    k = t.colors[u.source]
                    if color_of(original(k)) == u.source and s in up:
                        parent, side = up[s]
                        extra[parent].add(URAdd(side, original(k), u.pred))
                    continue
                for ins in sn.instructions:
                    if isinstance(ins, CAdd) and color_of(ins.target) == u.source:
                        extra[s].add(RAdd(ins.left, ins.right, ins.positions, u.pred))
                stack.extend(c for c in (sn.left, sn.right) if c is not None)
    if all(extra[n] <= t.nodes[n].decorators for n in extra):
        return tree
    nodes = {n: (node.with_decorators(node.decorators | extra[n]) if n in extra else node)
             for n, node in t.nodes.items()}
    return t.replace(nodes=nodes)


def _mapper(t: PwTree, up: dict, start: str, top: str):
    """Colour at ``top`` of a tuple that has colour c at ``start``."""
    chain = []
    cur = start
    while cur != top:
        parent, side = up[cur]
        chain.append(_recol_map(t.nodes[parent], side))
        cur = parent

    def f(c):
        for m in chain:
            c = m.get(c, c)
        return c

    return f


def is_normal(tree: PwTree) -> bool:
    for node in tree.nodes.values():
        for u in node.instructions:
            if isinstance(u, URAdd) and not _normal_uradd(tree, node, u):
                return False
    return to_prenormal(tree) is tree


def _normal_uradd(tree: PwTree, node: Node, u: URAdd) -> bool:
    child = node.left if u.side == 0 else node.right
    return (child is not None and tree.nodes[child].is_pseudoleaf
            and u.source == original(tree.signature[u.pred]))


def to_normal(tree: PwTree) -> PwTree:
    """Prenormalise, then drop URAdds not sitting directly above a pseudoleaf."""
    pre = to_prenormal(tree)
    changed = False
    nodes = {}
    for n, node in pre.nodes.items():
        keep = frozenset(d for d in node.decorators
                         if not isinstance(d, URAdd) or _normal_uradd(pre, node, d))
        if keep != node.decorators:
            changed = True
        nodes[n] = node.with_decorators(keep)
    return pre.replace(nodes=nodes) if changed else pre


def is_leaf_decorator(d) -> bool:
    return isinstance(d, (Const, Star))
