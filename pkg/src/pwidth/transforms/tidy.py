"""Clean-up passes that keep the denoted instance unchanged."""
from __future__ import annotations

from collections import defaultdict

from ..pwtree.model import CAdd, Node, PwTree, RAdd, Recol, URAdd, instruction_colors


def compact(tree: PwTree) -> PwTree:
    """Splice out undecorated unary nodes and drop unreachable ones."""
    def resolve(name, seen=()):
        while name is not None:
            node = tree.nodes[name]
            if node.decorators or node.right is not None or node.left is None or name in seen:
                return name
            seen = seen + (name,)
            name = node.left
        return name

    root = resolve(tree.root)
    nodes = {}
    stack = [root] if root is not None else []
    while stack:
        n = stack.pop()
        if n in nodes:
            continue
        node = tree.nodes[n]
        if node.is_pseudoleaf:
            nodes[n] = Node(node.decorators)
            continue
        l, r = resolve(node.left), resolve(node.right)
        nodes[n] = Node(node.decorators, l, r)
        stack.extend(c for c in (l, r) if c is not None)
    return _with_used_colors(tree, nodes, root)


def _with_used_colors(tree: PwTree, nodes: dict, root) -> PwTree:
    used = {c for node in nodes.values() for d in node.decorators for c in instruction_colors(d)}
    colors = {c: k for c, k in tree.colors.items() if c in used}
    return PwTree(nodes, root, colors, dict(tree.signature))


def prune(tree: PwTree) -> PwTree:
    """Remove colour instructions whose effect is never read by an emission."""
    names = tree.reachable()
    parents = defaultdict(list)
    for n in names:
        for side, c in enumerate(tree.children(n)):
            if c is not None:
                parents[c].append((n, side))
    live = {n: set() for n in names}   # colours of a node's output read above it

    def needs(n: str, side: int) -> set:
        node = tree.nodes[n]
        out = set()
        recolored = set()
        for d in node.instructions:
            if isinstance(d, RAdd):
                out.add(d.left if side == 0 else d.right)
            elif isinstance(d, URAdd) and d.side == side:
                out.add(d.source)
            elif isinstance(d, CAdd) and d.target in live[n]:
                out.add(d.left if side == 0 else d.right)
            elif isinstance(d, Recol) and d.side == side:
                recolored.add(d.source)
                if d.target in live[n]:
                    out.add(d.source)
        out |= {c for c in live[n] if c not in recolored}
        return out

    changed = True
    while changed:
        changed = False
        for n in names:
            if tree.nodes[n].is_pseudoleaf:
                continue
            for side, c in enumerate(tree.children(n)):
                if c is None:
                    continue
                new = needs(n, side) - live[c]
                if new:
                    live[c] |= new
                    changed = True
    nodes = dict(tree.nodes)
    for n in names:
        node = tree.nodes[n]
        if node.is_pseudoleaf:
            continue
        keep = set()
        for d in node.decorators:
            if isinstance(d, CAdd) and d.target not in live[n]:
                continue
            if isinstance(d, Recol) and d.target not in live[n] and d.source not in live[n]:
                continue
            keep.add(d)
        nodes[n] = node.with_decorators(keep)
    return _with_used_colors(tree, nodes, tree.root)
