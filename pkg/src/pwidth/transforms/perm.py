"""Permutations of tuple positions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..errors import PreconditionError


@dataclass(frozen=True)
class Perm:
    """Bijection on 1..n; ``images[j-1]`` is the image of j."""

    images: tuple

    def __post_init__(self):
        imgs = tuple(self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise PreconditionError(f"{imgs} is not a permutation")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j - 1]

    def apply(self, t: tuple) -> tuple:
        """The tuple u with u[pi(j)] = t[j]."""
        if len(t) != self.n:
            raise PreconditionError("tuple length differs from permutation size")
        out = [None] * self.n
        for j, x in enumerate(t, 1):
            out[self(j) - 1] = x
        return tuple(out)

    def pattern(self) -> tuple:
        """Positions g with pi[t] o g = t."""
        return self.images

    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for j, img in enumerate(self.images, 1):
            inv[img - 1] = j
        return Perm(tuple(inv))

    def compose(self, other: "Perm") -> "Perm":
        """self after other."""
        return Perm(tuple(self(other(j)) for j in range(1, self.n + 1)))

    @property
    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.n + 1))

    def __str__(self) -> str:
        return "(" + " ".join(map(str, self.images)) + ")"


def identity(n: int) -> Perm:
    return Perm(tuple(range(1, n + 1)))


def all_perms(n: int) -> list[Perm]:
    return [Perm(p) for p in itertools.permutations(range(1, n + 1))]


def cut(t: tuple, i: int) -> tuple:
    """Tuple without its i-th entry (1-based)."""
    return t[: i - 1] + t[i:]


def remove_position(pi: Perm, i: int) -> Perm:
    """The permutation on n-1 positions acting on t with entry i removed."""
    n = pi.n
    if not 1 <= i <= n:
        raise PreconditionError(f"position {i} out of range 1..{n}")
    if n == 1:
        raise PreconditionError("cannot remove the only position")
    out = []
    for j in range(1, n):
        src = j if j < i else j + 1
        img = pi(src)
        out.append(img if img < pi(i) else img - 1)
    return Perm(tuple(out))
