"""Homomorphism search, isomorphism and cores."""
from __future__ import annotations

from collections import Counter, defaultdict
from typing import Iterable, Iterator, Mapping

from ..errors import PreconditionError
from .instance import Instance
from .terms import TOP, Atom, Var, atom_key, is_constant, is_null

Substitution = dict


def is_mappable(t) -> bool:
    return isinstance(t, Var) or is_null(t)


class _Target:
    """Position index over a destination instance."""

    def __init__(self, inst: Instance):
        self.rel = inst.by_pred
        idx: dict = defaultdict(set)
        for p, tuples in self.rel.items():
            for args in tuples:
                for i, t in enumerate(args):
                    idx[(p, i, t)].add(args)
        self.idx = idx

    def candidates(self, a: Atom, binding: Mapping) -> Iterable[tuple]:
        best = None
        for i, t in enumerate(a.args):
            if is_mappable(t):
                if t not in binding:
                    continue
                v = binding[t]
            else:
                v = t
            s = self.idx.get((a.pred, i, v), ())
            if best is None or len(s) < len(best):
                best = s
                if not best:
                    return ()
        return self.rel.get(a.pred, ()) if best is None else best


def _target(inst: Instance) -> _Target:
    t = inst.__dict__.get("_hom_target")
    if t is None:
        t = _Target(inst)
        inst.__dict__["_hom_target"] = t
    return t


def iter_homomorphisms(src: Iterable[Atom], dst: Instance, seed: Mapping | None = None,
                       injective: bool = False, null_to_null: bool = False,
                       compat=None) -> Iterator[dict]:
    """Enumerate homomorphisms from ``src`` into ``dst`` extending ``seed``.

    Variables and nulls of ``src`` are mapped; constants are fixed. Each
    homomorphism is produced exactly once.
    """
    binding = dict(seed or {})
    for k, v in binding.items():
        if is_constant(k) and k != v:
            raise PreconditionError(f"seed moves constant {k}")
    atoms = sorted(set(src), key=atom_key)
    for a in atoms:
        if a.pred not in dst.signature and a.pred != TOP:
            return
    tgt = _target(dst)
    used = set(binding.values()) if injective else set()
    remaining = list(atoms)

    def consistent(a: Atom, args: tuple, new: list) -> bool:
        for t, v in zip(a.args, args):
            if is_mappable(t):
                cur = binding.get(t)
                if cur is None:
                    if null_to_null and not is_null(v):
                        return False
                    if injective and v in used:
                        return False
                    if compat is not None and not compat(t, v):
                        return False
                    binding[t] = v
                    if injective:
                        used.add(v)
                    new.append(t)
                elif cur != v:
                    return False
            elif t != v:
                return False
        return True

    def undo(new: list) -> None:
        for t in new:
            v = binding.pop(t)
            if injective:
                used.discard(v)

    def search() -> Iterator[dict]:
        if not remaining:
            yield dict(binding)
            return
        best_i, best_c = 0, None
        for i, a in enumerate(remaining):
            c = tgt.candidates(a, binding)
            if best_c is None or len(c) < len(best_c):
                best_i, best_c = i, c
                if not c:
                    return
        a = remaining.pop(best_i)
        for args in sorted(best_c, key=str):
            new: list = []
            if consistent(a, args, new):
                yield from search()
            undo(new)
        remaining.insert(best_i, a)

    yield from search()


def find_homomorphisms(src: Iterable[Atom], dst: Instance, seed: Mapping | None = None,
                       mode: str = "all") -> list[dict]:
    it = iter_homomorphisms(src, dst, seed)
    if mode == "first":
        for h in it:
            return [h]
        return []
    if mode != "all":
        raise PreconditionError(f"unknown mode {mode!r}")
    return list(it)


def has_homomorphism(src: Iterable[Atom], dst: Instance, seed: Mapping | None = None) -> bool:
    return next(iter_homomorphisms(src, dst, seed), None) is not None


def apply_subst(atoms: Iterable[Atom], h: Mapping) -> set[Atom]:
    return {Atom(a.pred, tuple(h.get(t, t) for t in a.args)) for a in atoms}


def _profile(inst: Instance) -> dict:
    """Per-term occurrence profile, an isomorphism invariant."""
    prof: dict = defaultdict(Counter)
    for a in inst.atoms:
        for i, t in enumerate(a.args):
            prof[t][(a.pred, i)] += 1
    return {t: tuple(sorted(c.items())) for t, c in prof.items()}


def is_isomorphic(i1: Instance, i2: Instance) -> dict | None:
    """A constant-preserving bijection mapping ``i1`` onto ``i2``, or None."""
    if len(i1.atoms) != len(i2.atoms) or len(i1.adom) != len(i2.adom):
        return None
    if i1.constants != i2.constants:
        return None
    if Counter(a.pred for a in i1.atoms) != Counter(a.pred for a in i2.atoms):
        return None
    p1, p2 = _profile(i1), _profile(i2)
    if Counter(p1.values()) != Counter(p2.values()):
        return None
    for c in i1.constants:
        if p1[c] != p2[c]:
            return None
    if i1.atoms == i2.atoms:
        return {t: t for t in i1.adom}
    # Seed nulls whose profile is unique on both sides.
    by_prof1: dict = defaultdict(list)
    by_prof2: dict = defaultdict(list)
    for t in i1.nulls:
        by_prof1[p1[t]].append(t)
    for t in i2.nulls:
        by_prof2[p2[t]].append(t)
    seed = {}
    for prof, ts in by_prof1.items():
        if len(ts) == 1:
            seed[ts[0]] = by_prof2[prof][0]
    compat = lambda t, v: p1[t] == p2[v]  # noqa: E731
    for h in iter_homomorphisms(i1.atoms, i2, seed, injective=True, null_to_null=True, compat=compat):
        out = {c: c for c in i1.constants}
        out.update(h)
        return out
    return None


def core(inst: Instance) -> Instance:
    """Retract ``inst`` onto a minimal sub-instance (its core)."""
    cur = inst
    changed = True
    while changed:
        changed = False
        for n in sorted(cur.nulls):
            target = Instance((a for a in cur.atoms if n not in a.args), cur.signature)
            h = next(iter_homomorphisms(cur.atoms, target), None)
            if h is not None:
                cur = Instance(apply_subst(cur.atoms, h), cur.signature)
                changed = True
                break
    return cur
