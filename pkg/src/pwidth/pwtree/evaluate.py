"""Validation, unfolding and bottom-up evaluation of decorated trees."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from ..core.instance import Instance
from ..core.terms import TOP, Atom
from ..errors import PreconditionError, ValidationError
from .model import (CAdd, Const, Node, PwTree, RAdd, Recol, Star, URAdd,
                    incompatible_pairs, instruction_colors, original)

ROOT_NULL = "_ε"


def null_name(address: str) -> str:
    return "_" + address if address else ROOT_NULL


@dataclass(frozen=True)
class Violation:
    kind: str
    node: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.node}: {self.detail}"


def _multiplicity(tree: PwTree) -> dict:
    """Number of root paths reaching each node, capped at 2 (2 = many)."""
    order = tree.reachable()
    cyc = set()
    if not tree.is_finite:
        # nodes on or below a cycle occur infinitely often
        for n in order:
            stack = [c for c in tree.children(n) if c is not None]
            seen = set()
            while stack:
                m = stack.pop()
                if m == n:
                    cyc.add(n)
                    break
                if m in seen:
                    continue
                seen.add(m)
                stack.extend(c for c in tree.children(m) if c is not None)
        below = set()
        stack = list(cyc)
        while stack:
            m = stack.pop()
            if m in below:
                continue
            below.add(m)
            stack.extend(c for c in tree.children(m) if c is not None)
        cyc = below
    counts: dict = defaultdict(int)
    if tree.root is None:
        return counts
    counts[tree.root] = 1
    # topological order over the acyclic part
    indeg: dict = defaultdict(int)
    for n in order:
        if n in cyc:
            continue
        for c in tree.children(n):
            if c is not None and c not in cyc:
                indeg[c] += 1
    ready = [n for n in order if n not in cyc and indeg[n] == 0]
    while ready:
        n = ready.pop()
        for c in tree.children(n):
            if c is None or c in cyc:
                continue
            counts[c] = min(2, counts[c] + counts[n])
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    for n in cyc:
        counts[n] = 2
    return counts


def validate_well_decorated(tree: PwTree) -> list[Violation]:
    out: list[Violation] = []
    reach = tree.reachable()
    for name in reach:
        node = tree.nodes[name]
        leaves = [d for d in node.decorators if isinstance(d, (Const, Star))]
        if len(leaves) > 1:
            out.append(Violation("pseudoleaf", name, "more than one leaf decorator"))
        if leaves and len(node.decorators) > len(leaves):
            out.append(Violation("pseudoleaf", name, "leaf decorator combined with instructions"))
        if leaves:
            stack = [c for c in (node.left, node.right) if c is not None]
            seen = set()
            while stack:
                m = stack.pop()
                if m in seen:
                    continue
                seen.add(m)
                mn = tree.nodes[m]
                if mn.decorators:
                    out.append(Violation("descendant", name, f"decorated node {m} below a pseudoleaf"))
                    break
                stack.extend(c for c in (mn.left, mn.right) if c is not None)
        for a, b in incompatible_pairs(node):
            out.append(Violation("incompatible", name, f"{a} and {b}"))
    mult = _multiplicity(tree)
    seen_const: dict = defaultdict(int)
    for name in reach:
        leaf = tree.nodes[name].leaf
        if isinstance(leaf, Const):
            seen_const[leaf.name] += mult[name]
    for c, k in sorted(seen_const.items()):
        if k > 1:
            out.append(Violation("constant", c, "constant occurs more than once in the unfolding"))
    return out


def require_valid(tree: PwTree, finite: bool = True) -> None:
    if finite and not tree.is_finite:
        raise PreconditionError("operation needs a finite tree; unfold it first")
    bad = validate_well_decorated(tree)
    if bad:
        raise ValidationError("tree is not well-decorated: " + "; ".join(map(str, bad)), bad)


@lru_cache(maxsize=None)
def _shuffle_order(n: int, positions: tuple) -> tuple:
    pos = set(positions)
    order = []
    ia = ib = 0
    for i in range(1, n + 1):
        if i in pos:
            order.append((0, ia))
            ia += 1
        else:
            order.append((1, ib))
            ib += 1
    return tuple(order)


def shuffle_fast(a: tuple, b: tuple, positions: tuple) -> tuple:
    parts = (a, b)
    return tuple(parts[w][k] for w, k in _shuffle_order(len(a) + len(b), positions))


class EvalResult(NamedTuple):
    instance: Instance
    colormap: dict


def _leaf_map(tree: PwTree, entity: str) -> dict:
    return {original(k): frozenset({(entity,) * k}) for k in range(1, tree.max_arity + 1)}


def apply_instructions(instructions, left: dict, right: dict) -> tuple[dict, list]:
    """Colour map and atoms of an inner node from its children's colour maps."""
    sides = (left, right)
    recolored = {(i.side, i.source) for i in instructions if isinstance(i, Recol)}
    out: dict = defaultdict(set)
    for side, cmap in enumerate(sides):
        for c, ts in cmap.items():
            if (side, c) not in recolored:
                out[c] |= ts
    atoms: list = []
    for ins in instructions:
        if isinstance(ins, Recol):
            out[ins.target] |= sides[ins.side].get(ins.source, frozenset())
        elif isinstance(ins, CAdd):
            ls, rs = left.get(ins.left, ()), right.get(ins.right, ())
            if ls and rs:
                out[ins.target].update(shuffle_fast(a, b, ins.positions) for a in ls for b in rs)
        elif isinstance(ins, RAdd):
            ls, rs = left.get(ins.left, ()), right.get(ins.right, ())
            atoms.extend(Atom(ins.pred, shuffle_fast(a, b, ins.positions)) for a in ls for b in rs)
        elif isinstance(ins, URAdd):
            atoms.extend(Atom(ins.pred, t) for t in sides[ins.side].get(ins.source, ()))
    return {c: frozenset(ts) for c, ts in out.items() if ts}, atoms


def _evaluate(tree: PwTree, want: set | None = None, check: bool = True):
    if check:
        require_valid(tree)
    atoms: list = []
    maps: dict = {}

    def ev(name, addr):
        if name is None:
            return {}
        node = tree.nodes[name]
        leaf = node.leaf
        if leaf is not None:
            e = leaf.name if isinstance(leaf, Const) else null_name(addr)
            atoms.append(Atom(TOP, (e,)))
            cmap = _leaf_map(tree, e)
        else:
            left = ev(node.left, addr + "0")
            right = ev(node.right, addr + "1")
            ins = node.instructions
            cmap, new = apply_instructions(ins, left, right) if ins else (_merge(left, right), [])
            atoms.extend(new)
        if want is None or addr in want:
            maps[addr] = cmap
        return cmap

    root = ev(tree.root, "")
    return Instance(atoms, tree.signature), root, maps


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for c, ts in b.items():
        out[c] = out[c] | ts if c in out else ts
    return out


def eval_tree(tree: PwTree) -> EvalResult:
    inst, root, _ = _evaluate(tree, want=set())
    return EvalResult(inst, root)


def color_map_at(tree: PwTree, address: str) -> dict:
    """Colour map of the node at a binary address of a finite tree."""
    if address.startswith("@"):
        address = address[1:]
    if address == "ε":
        address = ""
    if any(ch not in "01" for ch in address):
        raise PreconditionError(f"not an address: {address!r}")
    if tree.node_at(address) is None:
        cur = tree.root
        for ch in address:
            if cur is None or tree.nodes[cur].is_pseudoleaf:
                raise PreconditionError(f"unknown node {address!r}")
            cur = tree.children(cur)[int(ch)]
        return {}
    _, _, maps = _evaluate(tree, want={address})
    return maps[address]


def all_color_maps(tree: PwTree) -> tuple[Instance, dict]:
    inst, _, maps = _evaluate(tree, want=None)
    return inst, maps


def color_warnings(tree: PwTree) -> list[Violation]:
    """Tuples carrying two colours at one node (never produced by valid trees here)."""
    _, maps = all_color_maps(tree)
    out = []
    for addr, cmap in sorted(maps.items()):
        seen: dict = {}
        for c, ts in sorted(cmap.items()):
            for t in ts:
                if t in seen:
                    out.append(Violation("multicolour", addr or "ε", f"{t} has {seen[t]} and {c}"))
                seen.setdefault(t, c)
    return out


def nonempty_colors(tree: PwTree, node: str | None) -> set[str]:
    """Colours with nonempty extension at a node (least fixpoint on regular trees)."""
    if node is None:
        return set()
    ne = nonempty_table(tree)
    if node not in tree.nodes:
        raise PreconditionError(f"unknown node {node}")
    return set(ne.get(node, set()))


def nonempty_table(tree: PwTree) -> dict:
    names = tree.reachable()
    ne: dict = {n: set() for n in names}
    origs = set(tree.originals())
    changed = True
    while changed:
        changed = False
        for n in reversed(names):
            node = tree.nodes[n]
            if node.is_pseudoleaf:
                new = set(origs)
            else:
                l, r = node.left, node.right
                sides = (ne.get(l, set()) if l else set(), ne.get(r, set()) if r else set())
                new = set()
                ins = node.instructions
                rec = {(i.side, i.source) for i in ins if isinstance(i, Recol)}
                for side in (0, 1):
                    new |= {c for c in sides[side] if (side, c) not in rec}
                for i in ins:
                    if isinstance(i, Recol) and i.source in sides[i.side]:
                        new.add(i.target)
                    elif isinstance(i, CAdd) and i.left in sides[0] and i.right in sides[1]:
                        new.add(i.target)
            if new != ne[n]:
                ne[n] = new
                changed = True
    return ne


def unfold(tree: PwTree, depth: int) -> PwTree:
    """Finite tree agreeing with ``tree`` on addresses of length at most ``depth``."""
    if depth < 0:
        raise PreconditionError("depth must be nonnegative")
    if tree.is_finite and tree.height() <= depth:
        return tree
    nodes: dict = {}

    def build(name, addr):
        if name is None:
            return None
        node = tree.nodes[name]
        key = "@" + addr
        if node.is_pseudoleaf:
            nodes[key] = Node(node.decorators)
            return key
        if len(addr) >= depth:
            return None
        l = build(node.left, addr + "0")
        r = build(node.right, addr + "1")
        nodes[key] = Node(node.decorators, l, r)
        return key

    root = build(tree.root, "")
    return PwTree(nodes, root, tree.colors, tree.signature)


def address_tree(tree: PwTree) -> PwTree:
    """Copy of a finite tree with one node per address (no sharing)."""
    if not tree.is_finite:
        raise PreconditionError("address_tree needs a finite tree")
    nodes: dict = {}

    def build(name, addr):
        if name is None:
            return None
        node = tree.nodes[name]
        key = "@" + addr
        if node.is_pseudoleaf:
            nodes[key] = Node(node.decorators)
        else:
            nodes[key] = Node(node.decorators, build(node.left, addr + "0"), build(node.right, addr + "1"))
        return key

    return PwTree(nodes, build(tree.root, ""), tree.colors, tree.signature)


def used_colors(tree: PwTree) -> set[str]:
    """Colours mentioned by instructions, plus o1 when the tree has a leaf."""
    out = set()
    has_leaf = False
    for n in tree.reachable():
        node = tree.nodes[n]
        if node.is_pseudoleaf:
            has_leaf = True
        for d in node.decorators:
            out.update(instruction_colors(d))
    if has_leaf:
        out.add(original(1))
    return out


def width_upper(tree: PwTree) -> int:
    return len(used_colors(tree))
