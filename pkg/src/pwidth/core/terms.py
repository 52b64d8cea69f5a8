"""Terms, variables, atoms and tuple shuffling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

from ..errors import PreconditionError

TOP = "Top"

# Constants and nulls are plain strings; nulls start with an underscore.
Term = str


def is_null(t) -> bool:
    return isinstance(t, str) and t.startswith("_")


def is_constant(t) -> bool:
    return isinstance(t, str) and not t.startswith("_")


@dataclass(frozen=True, order=True)
class Var:
    """A variable of a query, rule or formula."""

    name: str

    def __str__(self) -> str:
        return f"?{self.name}"

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


AnyTerm = Union[str, Var]


class Atom(NamedTuple):
    pred: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.pred}({','.join(str(a) for a in self.args)})"

    @property
    def arity(self) -> int:
        return len(self.args)


def atom(pred: str, *args) -> Atom:
    return Atom(pred, tuple(args))


def term_key(t) -> tuple:
    """Total order on mixed terms: constants, nulls, then variables."""
    if isinstance(t, Var):
        return (2, t.name)
    return (1 if is_null(t) else 0, t)


def atom_key(a: Atom) -> tuple:
    return (a.pred, tuple(term_key(t) for t in a.args))


def shuffle(a: tuple, b: tuple, positions) -> tuple:
    """Interleave ``a`` and ``b`` placing the entries of ``a`` at ``positions``.

    Positions are 1-based and must form a proper subset of ``1..len(a)+len(b)``
    of size ``len(a)``.
    """
    n = len(a) + len(b)
    pos = set(positions)
    if len(pos) != len(a) or any(not (1 <= p <= n) for p in pos):
        raise PreconditionError(f"invalid shuffle positions {sorted(pos)} for sizes {len(a)}+{len(b)}")
    if len(pos) == n:
        raise PreconditionError("shuffle positions must be a strict subset")
    out = []
    ia = ib = 0
    for i in range(1, n + 1):
        if i in pos:
            out.append(a[ia])
            ia += 1
        else:
            out.append(b[ib])
            ib += 1
    return tuple(out)


def split_positions(n: int, positions) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """0-based index lists of the ``positions`` part and its complement."""
    pos = set(positions)
    left = tuple(i for i in range(n) if i + 1 in pos)
    right = tuple(i for i in range(n) if i + 1 not in pos)
    return left, right
