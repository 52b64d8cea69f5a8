"""Colour refinement: recolour every tuple with a state summarising its history.

Every tuple of arity at most ``n`` over the entities below a node receives
exactly one state.  A state records the original colours of the tuple (and of
selected sub-tuples, the *base patterns*), whether selected atoms over it hold
(*flags*), and optionally two extras: for projection, the states reachable by
inserting one more entity (*ext*); for path closure, colour summaries of the
reachability relation of a binary predicate (*clo*).

States depend only on the states of the children, so the refined tree uses the
states themselves as colours: Recol for side-local state changes, one CAdd per
pair of child states and shuffle positions, and the original RAdd/URAdd
translated to every state whose base contains the original colour.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from ..core.terms import TOP
from ..errors import PreconditionError
from ..pwtree.model import CAdd, Node, PwTree, RAdd, Recol, URAdd, instruction_colors, original
from ..pwtree.normal import add_root_streak


class St(NamedTuple):
    r: int
    base: tuple      # frozenset of original colours per base pattern
    flags: tuple     # bool per flag pattern
    ext: tuple       # frozenset of state ids per insertion position (projection)
    clo: tuple       # closure summary for arities 1 and 2


def ident(r: int) -> tuple:
    return tuple(range(1, r + 1))


def splits(r: int):
    """Proper position sets for cross tuples of arity r."""
    for r1 in range(1, r):
        for pos in itertools.combinations(range(1, r + 1), r1):
            yield pos


def _right_index(r: int, pos: tuple) -> dict:
    return {p: k for k, p in enumerate((q for q in range(1, r + 1) if q not in pos), 1)}


def split_pattern_r(g: tuple, pos: tuple, r: int):
    left = {p: k for k, p in enumerate(pos, 1)}
    right = _right_index(r, pos)
    if all(x in left for x in g):
        return ("L", tuple(left[x] for x in g))
    if all(x in right for x in g):
        return ("R", tuple(right[x] for x in g))
    jpos = tuple(j for j, x in enumerate(g, 1) if x in left)
    gl = tuple(left[x] for x in g if x in left)
    gr = tuple(right[x] for x in g if x in right)
    return ("X", jpos, gl, gr)


@dataclass
class Config:
    """What the states track.

    ``flags`` maps an arity to (predicate, pattern) pairs, ``base`` to extra
    base patterns; ``ext_arity`` n > 0 tracks insertion sets for arities below
    n; ``closure`` names a binary predicate whose reachability is summarised.
    """

    arity: int
    flags: dict = field(default_factory=dict)
    base: dict = field(default_factory=dict)
    ext_arity: int = 0
    closure: str | None = None


class Ctx:
    """Per-node view of the original instructions and the children's states."""

    def __init__(self, node: Node | None, occ_left: list, occ_right: list, eng: "Engine"):
        self.rec = ({}, {})
        self.cadd: dict = defaultdict(set)
        self.radd: dict = defaultdict(set)
        self.uradd: dict = defaultdict(set)
        self.edges = ([], [])   # closure predicate: (kappa, mu) for positions (1,) and (2,)
        for ins in (node.instructions if node is not None else ()):
            if isinstance(ins, Recol):
                self.rec[ins.side][ins.source] = ins.target
            elif isinstance(ins, CAdd):
                self.cadd[(ins.left, ins.right, ins.positions)].add(ins.target)
            elif isinstance(ins, RAdd):
                self.radd[ins.pred].add((ins.left, ins.right, ins.positions))
                if ins.pred == eng.cfg.closure:
                    self.edges[ins.positions[0] - 1].append((ins.left, ins.right))
            elif isinstance(ins, URAdd):
                self.uradd[(ins.side, ins.pred)].add(ins.source)
        self.occ = (occ_left, occ_right)
        self.units = tuple([s for s in occ if eng.states[s].r == 1] for occ in self.occ)
        self.pure_memo: dict = {}
        self.cross_memo: dict = {}

    def recol(self, side: int, colors) -> frozenset:
        m = self.rec[side]
        return frozenset(m.get(c, c) for c in colors)


class Engine:
    def __init__(self, tree: PwTree, cfg: Config):
        self.tree = tree
        self.cfg = cfg
        self.n = cfg.arity
        self.old_arity = tree.max_arity
        self.states: list[St] = []
        self.index: dict = {}
        self._patterns()

    # pattern bookkeeping
    def _patterns(self):
        n = self.n
        base = {r: set() for r in range(1, n + 1)}
        flags = {r: set() for r in range(1, n + 1)}
        for r in range(1, n + 1):
            base[r].add(ident(r))
            base[r].update(self.cfg.base.get(r, ()))
        for r, fs in self.cfg.flags.items():
            for pred, g in fs:
                if pred != TOP:
                    flags[r].add((pred, tuple(g)))
                    base[r].add(tuple(g))
        changed = True
        while changed:
            changed = False
            for r in range(2, n + 1):
                for pos in splits(r):
                    r1, r2 = len(pos), r - len(pos)
                    for g in list(base[r]):
                        sp = split_pattern_r(g, pos, r)
                        adds = [(r1, sp[1])] if sp[0] == "L" else [(r2, sp[1])] if sp[0] == "R" else \
                            [(r1, sp[2]), (r2, sp[3])]
                        for rr, gg in adds:
                            if gg not in base[rr]:
                                base[rr].add(gg)
                                changed = True
                    for pred, g in list(flags[r]):
                        sp = split_pattern_r(g, pos, r)
                        if sp[0] != "X":
                            rr = r1 if sp[0] == "L" else r2
                            if (pred, sp[1]) not in flags[rr]:
                                flags[rr].add((pred, sp[1]))
                                changed = True
        self.base_pats = {r: sorted(base[r], key=lambda g: (len(g), g)) for r in base}
        self.flag_pats = {r: sorted(flags[r]) for r in flags}
        self.base_ix = {r: {g: k for k, g in enumerate(ps)} for r, ps in self.base_pats.items()}
        self.flag_ix = {r: {f: k for k, f in enumerate(ps)} for r, ps in self.flag_pats.items()}
        # split tables
        self.cross_plan: dict = {}
        for r in range(2, n + 1):
            for pos in splits(r):
                r1, r2 = len(pos), r - len(pos)
                bplan = []
                for g in self.base_pats[r]:
                    sp = split_pattern_r(g, pos, r)
                    if sp[0] == "L":
                        bplan.append(("L", self.base_ix[r1][sp[1]]))
                    elif sp[0] == "R":
                        bplan.append(("R", self.base_ix[r2][sp[1]]))
                    else:
                        bplan.append(("X", sp[1], self.base_ix[r1][sp[2]], self.base_ix[r2][sp[3]]))
                fplan = []
                for pred, g in self.flag_pats[r]:
                    sp = split_pattern_r(g, pos, r)
                    if sp[0] == "L":
                        fplan.append(("L", pred, self.flag_ix[r1][(pred, sp[1])], self.base_ix[r1][sp[1]]))
                    elif sp[0] == "R":
                        fplan.append(("R", pred, self.flag_ix[r2][(pred, sp[1])], self.base_ix[r2][sp[1]]))
                    else:
                        fplan.append(("X", pred, sp[1], self.base_ix[r1][sp[2]], self.base_ix[r2][sp[3]]))
                self.cross_plan[(r, pos)] = (r, bplan, fplan)

    # state table
    def intern(self, st: St) -> int:
        k = self.index.get(st)
        if k is None:
            k = len(self.states)
            self.states.append(st)
            self.index[st] = k
        return k

    def leaf(self, r: int) -> int:
        base = tuple(frozenset({original(len(g))}) if len(g) <= self.old_arity else frozenset()
                     for g in self.base_pats[r])
        flags = (False,) * len(self.flag_pats[r])
        ext = ()
        if r < self.cfg.ext_arity:
            ext = (frozenset({self.leaf(r + 1)}),) * (r + 1)
        clo = ()
        if self.cfg.closure:
            o1 = frozenset({original(1)})
            clo = (o1, o1) if r == 1 else (o1, o1, False) if r == 2 else ()
        return self.intern(St(r, base, flags, ext, clo))

    # accessors
    def own_base(self, s: int) -> frozenset:
        st = self.states[s]
        return st.base[self.base_ix[st.r][ident(st.r)]]

    def base(self, s: int, g: tuple) -> frozenset:
        st = self.states[s]
        return st.base[self.base_ix[st.r][tuple(g)]]

    def flag(self, s: int, pred: str, g: tuple) -> bool:
        if pred == TOP:
            return True
        st = self.states[s]
        return st.flags[self.flag_ix[st.r][(pred, tuple(g))]]

    # updates
    def pure(self, s: int, side: int, ctx: Ctx) -> int:
        key = (s, side)
        out = ctx.pure_memo.get(key)
        if out is not None:
            return out
        st = self.states[s]
        r = st.r
        base = tuple(ctx.recol(side, b) for b in st.base)
        flags = tuple(
            f or bool(ctx.uradd.get((side, pred), ()) and ctx.uradd[(side, pred)] & st.base[self.base_ix[r][g]])
            for f, (pred, g) in zip(st.flags, self.flag_pats[r]))
        ext = ()
        if st.ext:
            other = ctx.units[1 - side]
            sets = []
            for j, tau in enumerate(st.ext, 1):
                out_set = {self.pure(t, side, ctx) for t in tau}
                for u in other:
                    if side == 0:
                        pos = tuple(p for p in range(1, r + 2) if p != j)
                        out_set.add(self.cross(s, u, pos, ctx))
                    else:
                        out_set.add(self.cross(u, s, (j,), ctx))
                sets.append(frozenset(out_set))
            ext = tuple(sets)
        clo = self._clo_pure(st, side, ctx) if st.clo else ()
        out = self.intern(St(r, base, flags, ext, clo))
        ctx.pure_memo[key] = out
        return out

    def cross(self, a: int, b: int, pos: tuple, ctx: Ctx) -> int:
        key = (a, b, pos)
        out = ctx.cross_memo.get(key)
        if out is not None:
            return out
        sa, sb = self.states[a], self.states[b]
        r, bplan, fplan = self.cross_plan[(sa.r + sb.r, pos)]
        base = []
        for step in bplan:
            if step[0] == "L":
                base.append(ctx.recol(0, sa.base[step[1]]))
            elif step[0] == "R":
                base.append(ctx.recol(1, sb.base[step[1]]))
            else:
                _, jpos, il, ir = step
                got = set()
                for k in sa.base[il]:
                    for m in sb.base[ir]:
                        got |= ctx.cadd.get((k, m, jpos), set())
                base.append(frozenset(got))
        flags = []
        for step in fplan:
            if step[0] in ("L", "R"):
                side = 0 if step[0] == "L" else 1
                st = sa if side == 0 else sb
                _, pred, fi, bi = step
                u = ctx.uradd.get((side, pred), ())
                flags.append(st.flags[fi] or bool(u and set(u) & st.base[bi]))
            else:
                _, pred, jpos, il, ir = step
                adds = ctx.radd.get(pred, ())
                flags.append(any((k, m, jpos) in adds for k in sa.base[il] for m in sb.base[ir]))
        ext = ()
        if r < self.cfg.ext_arity:
            sets = []
            for j in range(1, r + 2):
                got = set()
                shifted = tuple(p if p < j else p + 1 for p in pos)
                jl = 1 + sum(1 for p in pos if p < j)
                for tau in sa.ext[jl - 1]:
                    got.add(self.cross(tau, b, tuple(sorted(shifted + (j,))), ctx))
                rpos = [p for p in range(1, r + 1) if p not in pos]
                jr = 1 + sum(1 for p in rpos if p < j)
                for tau in sb.ext[jr - 1]:
                    got.add(self.cross(a, tau, shifted, ctx))
                sets.append(frozenset(got))
            ext = tuple(sets)
        clo = self._clo_cross(sa, sb, pos, ctx) if r == 2 and self.cfg.closure else ()
        out = self.intern(St(r, tuple(base), tuple(flags), ext, clo))
        ctx.cross_memo[key] = out
        return out

    # path closure summaries
    def _walk(self, side: int, start, ctx: Ctx, backward: bool):
        """Colours reached (or reaching) from a colour set on one child.

        Returns (reached, entered): per side, the child colours of entities
        connected so far, and the colours whose every entity got connected by
        a path through a cross edge.
        """
        reached = [set(), set()]
        reached[side] = set(start)
        entered = [set(), set()]
        k = 1 if backward else 0
        changed = True
        while changed:
            changed = False
            for d, edges in enumerate(ctx.edges):
                # d = 0: left -> right edges; d = 1: right -> left edges
                src, dst = (0, 1) if d == 0 else (1, 0)
                if backward:
                    src, dst = dst, src
                for kappa, mu in edges:
                    cs, cd = (kappa, mu) if src == 0 else (mu, kappa)
                    if cs in reached[src] and cd not in entered[dst]:
                        entered[dst].add(cd)
                        for u in ctx.units[dst]:
                            if cd in self.own_base(u):
                                reached[dst] |= self.states[u].clo[k]
                        changed = True
        return reached, entered

    def _lift(self, reached, ctx: Ctx) -> frozenset:
        return ctx.recol(0, reached[0]) | ctx.recol(1, reached[1])

    def _clo_pure(self, st: St, side: int, ctx: Ctx) -> tuple:
        fwd, ent = self._walk(side, st.clo[0], ctx, False)
        bwd, _ = self._walk(side, st.clo[1], ctx, True)
        to, frm = self._lift(fwd, ctx), self._lift(bwd, ctx)
        if st.r == 1:
            return (to, frm)
        reach = st.clo[2] or bool(ent[side] & st.clo[1])
        if not reach:
            u = ctx.uradd.get((side, self.cfg.closure), ())
            reach = bool(u and set(u) & st.base[self.base_ix[2][(1, 2)]])
        return (to, frm, reach)

    def _clo_cross(self, sa: St, sb: St, pos: tuple, ctx: Ctx) -> tuple:
        first, second = (0, 1) if pos == (1,) else (1, 0)
        fs, ss = (sa, sb) if first == 0 else (sb, sa)
        fwd, ent = self._walk(first, fs.clo[0], ctx, False)
        bwd, _ = self._walk(second, ss.clo[1], ctx, True)
        reach = bool(ent[second] & ss.clo[1])
        return (self._lift(fwd, ctx), self._lift(bwd, ctx), reach)


def needed_arity(tree: PwTree, extra: int = 0) -> int:
    n = max([extra, 1] + [tree.signature[p] for p in tree.signature])
    for name in tree.reachable():
        for d in tree.nodes[name].decorators:
            for c in instruction_colors(d):
                n = max(n, tree.colors[c])
    return n


def refine(tree: PwTree, cfg: Config, emit: list[tuple[str, int, Callable]] | None = None):
    """Rebuild ``tree`` over states.

    ``emit`` lists (pred, arity, test(engine, state id)); pred is emitted at a
    new root for every root tuple whose state passes the test.
    """
    eng = Engine(tree, cfg)
    emit = emit or []
    needs_exact = cfg.ext_arity > 0 or cfg.closure is not None
    if needs_exact and not tree.is_finite:
        raise PreconditionError("this transformation needs a finite tree")
    order = _postorder(tree)
    occ: dict = {}
    ctxs: dict = {}
    leaves = [eng.leaf(r) for r in range(1, eng.n + 1)]
    if tree.is_finite:
        for name in order:
            _expand(eng, tree, name, occ, ctxs, leaves)
    else:
        for name in order:
            occ[name] = []
        changed = True
        while changed:
            changed = False
            for name in order:
                before = len(occ[name])
                _expand(eng, tree, name, occ, ctxs, leaves)
                changed |= len(occ[name]) != before
    names = {}
    for k, st in enumerate(eng.states):
        if k in leaves:
            names[k] = original(st.r)
    for k in range(len(eng.states)):
        names.setdefault(k, f"s{k}")
    nodes = {}
    for name in tree.nodes:
        node = tree.nodes[name]
        if name not in ctxs or node.is_pseudoleaf:
            nodes[name] = node
            continue
        nodes[name] = Node(_instructions(eng, tree, node, ctxs[name], names), node.left, node.right)
    colors = {names[k]: st.r for k, st in enumerate(eng.states)}
    sig = dict(tree.signature)
    for pred, r, _ in emit:
        sig[pred] = r
    out = PwTree(nodes, tree.root, colors, sig)
    if emit and tree.root is not None:
        ins = set()
        for pred, r, test in emit:
            for s in occ[tree.root]:
                if eng.states[s].r == r and test(eng, s):
                    ins.add(URAdd(0, names[s], pred))
        out = add_root_streak(out, [ins], signature={p: r for p, r, _ in emit})
    return out, eng, occ, names


def _postorder(tree: PwTree) -> list:
    names = tree.reachable()
    seen = set()
    order = []
    for root in names:
        stack = [(root, False)]
        while stack:
            n, done = stack.pop()
            if done:
                order.append(n)
                continue
            if n in seen:
                continue
            seen.add(n)
            stack.append((n, True))
            for c in tree.children(n):
                if c is not None and c not in seen:
                    stack.append((c, False))
    return order


def _expand(eng: Engine, tree: PwTree, name: str, occ: dict, ctxs: dict, leaves: list):
    node = tree.nodes[name]
    if node.is_pseudoleaf:
        occ[name] = list(leaves)
        return
    l, r = tree.children(name)
    ol = occ.get(l, []) if l is not None else []
    orr = occ.get(r, []) if r is not None else []
    ctx = ctxs.get(name)
    if ctx is None or ctx.occ != (ol, orr):
        old_memo = (ctx.pure_memo, ctx.cross_memo) if ctx is not None and not tree.is_finite else None
        ctx = Ctx(node, list(ol), list(orr), eng)
        if old_memo:
            ctx.pure_memo, ctx.cross_memo = old_memo
        ctxs[name] = ctx
    out: dict = {}
    for side, states in enumerate((ol, orr)):
        for s in states:
            out.setdefault(eng.pure(s, side, ctx), None)
    for a in ol:
        ra = eng.states[a].r
        for b in orr:
            rb = eng.states[b].r
            if ra + rb > eng.n:
                continue
            for pos in itertools.combinations(range(1, ra + rb + 1), ra):
                out.setdefault(eng.cross(a, b, pos, ctx), None)
    occ[name] = list(out)


def _instructions(eng: Engine, tree: PwTree, node: Node, ctx: Ctx, names: dict) -> frozenset:
    ins = set()
    ol, orr = ctx.occ
    for side, states in enumerate((ol, orr)):
        for s in states:
            t = eng.pure(s, side, ctx)
            if t != s:
                ins.add(Recol(side, names[s], names[t]))
    for a in ol:
        ra = eng.states[a].r
        for b in orr:
            rb = eng.states[b].r
            if ra + rb > eng.n:
                continue
            for pos in itertools.combinations(range(1, ra + rb + 1), ra):
                ins.add(CAdd(names[a], names[b], pos, names[eng.cross(a, b, pos, ctx)]))
    for old in node.instructions:
        if isinstance(old, RAdd):
            for a in ol:
                if old.left not in eng.own_base(a):
                    continue
                for b in orr:
                    if old.right in eng.own_base(b):
                        ins.add(RAdd(names[a], names[b], old.positions, old.pred))
        elif isinstance(old, URAdd):
            for s in (ol, orr)[old.side]:
                if old.source in eng.own_base(s):
                    ins.add(URAdd(old.side, names[s], old.pred))
    return frozenset(ins)
