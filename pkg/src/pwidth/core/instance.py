"""Finite instances: atoms over constants and nulls with a signature."""
from __future__ import annotations

import re
from collections import defaultdict
from functools import cached_property
from typing import Iterable, Mapping

from ..errors import ParseError, PreconditionError
from .terms import TOP, Atom, atom_key, is_constant, is_null


class Instance:
    """An immutable finite instance.

    ``Top`` is the universal unary predicate: ``Top(t)`` is materialised for
    every term of the active domain, so the domain is always recoverable from
    the atoms.
    """

    def __init__(self, atoms: Iterable[Atom] = (), signature: Mapping[str, int] | None = None):
        sig = dict(signature or {})
        sig[TOP] = 1
        body = set()
        terms = set()
        for a in atoms:
            if not isinstance(a, Atom):
                a = Atom(a[0], tuple(a[1]))
            if not a.args:
                raise PreconditionError(f"atom {a} has arity 0")
            known = sig.get(a.pred)
            if known is None:
                sig[a.pred] = len(a.args)
            elif known != len(a.args):
                raise PreconditionError(f"atom {a} does not match arity {known} of {a.pred}")
            body.add(a)
            terms.update(a.args)
        for t in terms:
            if not isinstance(t, str):
                raise PreconditionError(f"instances hold ground terms only, got {t!r}")
            body.add(Atom(TOP, (t,)))
        self.atoms: frozenset[Atom] = frozenset(body)
        self.signature: dict[str, int] = sig
        self._adom = frozenset(terms)

    # basic protocol
    def __iter__(self):
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, a) -> bool:
        return a in self.atoms

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        return f"Instance({len(self.atoms)} atoms, {len(self._adom)} terms)"

    @property
    def adom(self) -> frozenset:
        return self._adom

    @property
    def constants(self) -> frozenset:
        return frozenset(t for t in self._adom if is_constant(t))

    @property
    def nulls(self) -> frozenset:
        return frozenset(t for t in self._adom if is_null(t))

    @property
    def max_arity(self) -> int:
        return max(self.signature.values(), default=1)

    @cached_property
    def by_pred(self) -> dict[str, frozenset[tuple]]:
        idx: dict[str, set] = defaultdict(set)
        for a in self.atoms:
            idx[a.pred].add(a.args)
        return {p: frozenset(v) for p, v in idx.items()}

    def relation(self, pred: str) -> frozenset[tuple]:
        return self.by_pred.get(pred, frozenset())

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=atom_key)

    def union(self, atoms: Iterable[Atom]) -> "Instance":
        return Instance(self.atoms | set(atoms), self.signature)

    def restrict(self, preds: Iterable[str]) -> "Instance":
        keep = set(preds) | {TOP}
        sig = {p: a for p, a in self.signature.items() if p in keep}
        body = [a for a in self.atoms if a.pred in keep]
        return Instance(body, sig)

    def without(self, preds: Iterable[str]) -> "Instance":
        drop = set(preds) - {TOP}
        return self.restrict(p for p in self.signature if p not in drop)

    def rename(self, mapping: Mapping[str, str]) -> "Instance":
        return Instance(
            (Atom(a.pred, tuple(mapping.get(t, t) for t in a.args)) for a in self.atoms),
            self.signature,
        )

    def serialize(self) -> str:
        return serialize_instance(self)


def unary_replace(inst: Instance, pred: str, terms: Iterable[str]) -> Instance:
    """Replace the extension of the unary predicate ``pred`` by ``terms``."""
    terms = set(terms)
    if pred == TOP:
        raise PreconditionError("Top cannot be replaced")
    if inst.signature.get(pred, 1) != 1:
        raise PreconditionError(f"{pred} is not unary")
    outside = terms - inst.adom
    if outside:
        raise PreconditionError(f"terms outside the active domain: {sorted(outside)}")
    kept = [a for a in inst.atoms if a.pred != pred]
    sig = dict(inst.signature)
    sig.setdefault(pred, 1)
    return Instance(kept + [Atom(pred, (t,)) for t in terms], sig)


_ATOM_RE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*\((.*)\)\s*\.?\s*$")
_TERM_RE = re.compile(r"^[\w\-']+$")
_SIG_RE = re.compile(r"^([A-Za-z_]\w*)/(\d+)$")


def parse_instance(text: str) -> Instance:
    """Parse the line-based atom format (``Pred(t1,...,tn).`` per line)."""
    atoms = []
    sig: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@sig"):
            for item in line[4:].split():
                m = _SIG_RE.match(item)
                if not m or int(m.group(2)) < 1:
                    raise ParseError(f"bad signature entry {item!r}", lineno, raw.find(item) + 1)
                sig[m.group(1)] = int(m.group(2))
            continue
        m = _ATOM_RE.match(line)
        if not m:
            raise ParseError(f"cannot parse atom {line!r}", lineno, 1)
        args = tuple(t.strip() for t in m.group(2).split(","))
        for t in args:
            if not _TERM_RE.match(t):
                raise ParseError(f"bad term {t!r}", lineno, raw.find(t) + 1)
        pred = m.group(1)
        if pred in sig and sig[pred] != len(args):
            raise ParseError(f"arity mismatch for {pred}", lineno, 1)
        sig.setdefault(pred, len(args))
        atoms.append(Atom(pred, args))
    return Instance(atoms, sig)


def serialize_instance(inst: Instance) -> str:
    lines = []
    declared = sorted(p for p in inst.signature if p != TOP)
    if declared:
        lines.append("@sig " + " ".join(f"{p}/{inst.signature[p]}" for p in declared))
    lines.extend(f"{a}." for a in inst.sorted_atoms())
    return "\n".join(lines) + "\n"
