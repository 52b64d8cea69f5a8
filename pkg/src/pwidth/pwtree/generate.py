"""Random well-decorated finite trees for property testing."""
from __future__ import annotations

import itertools
import random

from .model import CAdd, Const, Node, PwTree, RAdd, Recol, Star, URAdd, original


def _positions(rng: random.Random, a: int, n: int) -> tuple:
    return tuple(sorted(rng.sample(range(1, n + 1), a)))


def random_tree(rng: random.Random, *, max_colors: int = 4, max_height: int = 5, max_preds: int = 3,
                max_arity: int = 3, max_leaves: int = 7, star_prob: float = 0.3,
                binary_color: str | None = None, preds: dict | None = None,
                max_instructions: int = 8) -> PwTree:
    """A random finite tree; every tree returned is well-decorated.

    With ``binary_color`` set, the palette contains that binary colour and all
    predicates are binary, which suits path-closure tests.
    """
    if preds is None:
        if binary_color:
            preds = {f"P{i}": 2 for i in range(rng.randint(1, max_preds))}
        else:
            preds = {f"P{i}": rng.randint(1, max_arity) for i in range(rng.randint(1, max_preds))}
    top = max(list(preds.values()) + [2 if binary_color else 1])
    colors = {original(k): k for k in range(1, top + 1)}
    if binary_color:
        colors[binary_color] = 2
    spare = max_colors - len(colors)
    for i in range(max(0, rng.randint(0, spare))):
        colors[f"k{i}"] = rng.randint(1, top)
    by_arity: dict = {}
    for c, a in colors.items():
        by_arity.setdefault(a, []).append(c)
    origs = {original(k) for k in range(1, top + 1)}
    nodes: dict = {}
    leaves = itertools.count()
    budget = [max_leaves]

    def gen(addr: str):
        depth = len(addr)
        leafy = depth >= max_height or budget[0] <= 1 or (depth > 0 and rng.random() < 0.25 + 0.1 * depth)
        name = "@" + addr
        if leafy:
            budget[0] -= 1
            i = next(leaves)
            dec = Star() if rng.random() < star_prob else Const(f"c{i}")
            nodes[name] = Node(frozenset({dec}))
            return name, set(origs)
        budget[0] -= 1
        left, ne_l = gen(addr + "0")
        if rng.random() < 0.08:
            right, ne_r = None, set()
        else:
            budget[0] += 1
            right, ne_r = gen(addr + "1")
        sides = (ne_l, ne_r)
        ins: dict = {}
        for _ in range(rng.randint(1, max_instructions)):
            kind = rng.random()
            if kind < 0.35 and ne_l and ne_r:
                k, m = rng.choice(sorted(ne_l)), rng.choice(sorted(ne_r))
                n = colors[k] + colors[m]
                if n in by_arity:
                    pos = _positions(rng, colors[k], n)
                    ins.setdefault(("c", k, m, pos), CAdd(k, m, pos, rng.choice(by_arity[n])))
            elif kind < 0.55:
                side = rng.randint(0, 1)
                if sides[side]:
                    k = rng.choice(sorted(sides[side]))
                    targets = [c for c in by_arity[colors[k]] if c != k] or [k]
                    ins.setdefault(("r", side, k), Recol(side, k, rng.choice(targets)))
            elif kind < 0.85 and ne_l and ne_r:
                k, m = rng.choice(sorted(ne_l)), rng.choice(sorted(ne_r))
                n = colors[k] + colors[m]
                fitting = [p for p, a in preds.items() if a == n]
                if fitting:
                    pos = _positions(rng, colors[k], n)
                    ins[("ra", k, m, pos, len(ins))] = RAdd(k, m, pos, rng.choice(fitting))
            else:
                side = rng.randint(0, 1)
                if sides[side]:
                    k = rng.choice(sorted(sides[side]))
                    fitting = [p for p, a in preds.items() if a == colors[k]]
                    if fitting:
                        ins[("u", side, k, len(ins))] = URAdd(side, k, rng.choice(fitting))
        decs = frozenset(ins.values())
        nodes[name] = Node(decs, left, right)
        rec = {(i.side, i.source) for i in decs if isinstance(i, Recol)}
        ne = set()
        for side in (0, 1):
            ne |= {c for c in sides[side] if (side, c) not in rec}
        for i in decs:
            if isinstance(i, Recol) and i.source in sides[i.side]:
                ne.add(i.target)
            elif isinstance(i, CAdd) and i.left in ne_l and i.right in ne_r:
                ne.add(i.target)
        return name, ne

    root, _ = gen("")
    return PwTree(nodes, root, colors, preds)
