"""Union-find unification of atoms over variables and constants."""
from __future__ import annotations

from typing import Iterable

from ..core.terms import Atom, Var


class Unifier:
    """Most general unifier built incrementally; constants are rigid."""

    def __init__(self):
        self.parent: dict = {}
        self.failed = False

    def find(self, t):
        self.parent.setdefault(t, t)
        root = t
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[t] != root:
            self.parent[t], t = root, self.parent[t]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if not isinstance(ra, Var) and not isinstance(rb, Var):
            self.failed = True
            return False
        if isinstance(ra, Var):
            self.parent[ra] = rb
        else:
            self.parent[rb] = ra
        return True

    def unify_atoms(self, a: Atom, b: Atom) -> bool:
        if a.pred != b.pred or len(a.args) != len(b.args):
            self.failed = True
            return False
        return all(self.union(x, y) for x, y in zip(a.args, b.args))

    def classes(self) -> dict:
        out: dict = {}
        for t in list(self.parent):
            out.setdefault(self.find(t), set()).add(t)
        return out

    def subst(self, t):
        return self.find(t) if t in self.parent else t

    def apply(self, atoms: Iterable[Atom]) -> list[Atom]:
        return [Atom(a.pred, tuple(self.subst(t) for t in a.args)) for a in atoms]


def mgu(pairs: Iterable[tuple]) -> Unifier | None:
    u = Unifier()
    for a, b in pairs:
        if not u.unify_atoms(a, b):
            return None
    return u


def rename_apart(atoms: Iterable[Atom], suffix: str) -> list[Atom]:
    return [Atom(a.pred, tuple(Var(t.name + suffix) if isinstance(t, Var) else t for t in a.args))
            for a in atoms]
