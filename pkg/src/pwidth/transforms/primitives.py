"""Tree transformations realising FO-extensions by a fresh predicate."""
from __future__ import annotations

from ..core.terms import TOP
from ..errors import PreconditionError
from ..pwtree.model import PwTree, RAdd, URAdd, original
from ..pwtree.normal import substitute_streak
from .engine import Config, ident, needed_arity, refine
from .perm import Perm, all_perms


def arity_of(tree: PwTree, pred: str) -> int:
    if pred == TOP:
        return 1
    if pred not in tree.signature:
        raise PreconditionError(f"predicate {pred} is not in the signature")
    return tree.signature[pred]


def require_fresh(tree: PwTree, pred: str) -> None:
    if pred == TOP or pred in tree.signature:
        raise PreconditionError(f"predicate {pred} already exists")


def declare(tree: PwTree, pred: str, arity: int) -> PwTree:
    """Add a predicate with an empty extension."""
    require_fresh(tree, pred)
    return tree.replace(signature={**tree.signature, pred: arity})


def leaf_streak(tree: PwTree, ins_for_leaf, signature=None) -> PwTree:
    """Place a unary node carrying ``ins_for_leaf`` above every pseudoleaf."""
    t = tree.replace(signature={**tree.signature, **(signature or {})})
    for name in tree.reachable():
        if tree.nodes[name].is_pseudoleaf:
            t = substitute_streak(t, name, [t.nodes[name].decorators, ins_for_leaf])
    return t


def t_equality(tree: PwTree, pred: str) -> PwTree:
    """Add pred(t, t) for every entity t."""
    require_fresh(tree, pred)
    return leaf_streak(tree, {URAdd(0, original(2), pred)}, {pred: 2})


def mirror(tree: PwTree, sources, target: str) -> PwTree:
    """Emit ``target`` wherever one of ``sources`` is emitted."""
    sources = set(sources)
    nodes = {}
    for name, node in tree.nodes.items():
        extra = set()
        for d in node.instructions:
            if isinstance(d, RAdd) and d.pred in sources:
                extra.add(RAdd(d.left, d.right, d.positions, target))
            elif isinstance(d, URAdd) and d.pred in sources:
                extra.add(URAdd(d.side, d.source, target))
        nodes[name] = node.with_decorators(node.decorators | extra) if extra else node
    out = tree.replace(nodes=nodes)
    if TOP in sources:
        out = leaf_streak(out, {URAdd(0, original(1), target)})
    return out


def t_union(tree: PwTree, a: str, b: str, pred: str) -> PwTree:
    """Add pred(t) whenever a(t) or b(t) holds."""
    if arity_of(tree, a) != arity_of(tree, b):
        raise PreconditionError("union of predicates of different arities")
    require_fresh(tree, pred)
    t = tree.replace(signature={**tree.signature, pred: arity_of(tree, a)})
    return mirror(t, {a, b}, pred)


def drop_predicates(tree: PwTree, preds) -> PwTree:
    """Remove every instruction emitting one of ``preds``."""
    preds = set(preds)
    nodes = {}
    for name, node in tree.nodes.items():
        keep = {d for d in node.decorators if not (isinstance(d, (RAdd, URAdd)) and d.pred in preds)}
        nodes[name] = node.with_decorators(keep) if keep != node.decorators else node
    sig = {p: k for p, k in tree.signature.items() if p not in preds}
    return PwTree(nodes, tree.root, dict(tree.colors), sig)


def _refine(tree: PwTree, flags: dict, pred: str, arity: int, test, *, base=None, ext_arity: int = 0):
    require_fresh(tree, pred)
    cfg = Config(needed_arity(tree, max([arity, ext_arity] + list(flags))), flags, base or {}, ext_arity)
    out, *_ = refine(tree, cfg, [(pred, arity, test)])
    return out


def t_varintro(tree: PwTree, a: str, pred: str) -> PwTree:
    """Add pred(t1..tn, t) for every a(t1..tn) and every entity t."""
    n = arity_of(tree, a)
    g = ident(n)
    return _refine(tree, {n + 1: [(a, g)]}, pred, n + 1, lambda eng, s: eng.flag(s, a, g))


def t_permute(tree: PwTree, a: str, pi: Perm, pred: str) -> PwTree:
    """Add pred(pi[t]) for every a(t), where pi[t] has t_j at position pi(j)."""
    n = arity_of(tree, a)
    if pi.n != n:
        raise PreconditionError(f"permutation size {pi.n} differs from arity {n} of {a}")
    g = pi.pattern()
    return _refine(tree, {n: [(a, g)]}, pred, n, lambda eng, s: eng.flag(s, a, g))


def t_complement(tree: PwTree, a: str, pred: str) -> PwTree:
    """Add pred(t) for every tuple t of entities with a(t) false."""
    n = arity_of(tree, a)
    g = ident(n)
    return _refine(tree, {n: [(a, g)]}, pred, n, lambda eng, s: not eng.flag(s, a, g))


def t_projection(tree: PwTree, a: str, i: int, pred: str) -> PwTree:
    """Add pred(t with entry i removed) for every a(t)."""
    n = arity_of(tree, a)
    if n < 2:
        raise PreconditionError("projection needs a predicate of arity at least 2")
    if not 1 <= i <= n:
        raise PreconditionError(f"position {i} out of range 1..{n}")
    g = ident(n)

    def test(eng, s):
        return any(eng.flag(t, a, g) for t in eng.states[s].ext[i - 1])

    return _refine(tree, {n: [(a, g)]}, pred, n - 1, test, ext_arity=n)


def enrich_permutations(tree: PwTree):
    """Refined tree plus, for every colour and permutation, its variant.

    A variant is the set of refined colours whose tuples u satisfy: u o pi
    (the tuple with entries u_pi(1) .. u_pi(n)) carries the colour.  So t has
    the colour iff pi[t] carries the variant.
    """
    n = needed_arity(tree)
    base = {r: [p.pattern() for p in all_perms(r)] for r in range(1, n + 1)}
    out, eng, occ, names = refine(tree, Config(n, {}, base))
    variants = {}
    for lam, r in tree.colors.items():
        if r > n:
            continue
        for p in all_perms(r):
            variants[(lam, p)] = frozenset(names[s] for s, st in enumerate(eng.states)
                                           if st.r == r and lam in eng.base(s, p.pattern()))
    return out, variants
