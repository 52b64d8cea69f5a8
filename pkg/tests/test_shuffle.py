import itertools

import pytest

from pwidth.core.terms import shuffle
from pwidth.errors import PreconditionError


def place_then_fill(a, b, positions):
    n = len(a) + len(b)
    slots = [None] * n
    for p, x in zip(sorted(positions), a):
        slots[p - 1] = x
    rest = iter(b)
    return tuple(x if x is not None else next(rest) for x in slots)


def test_worked_example():
    assert shuffle(("a1", "a2"), ("b1", "b2", "b3"), {2, 5}) == ("b1", "a1", "b2", "b3", "a2")


def test_empty_left():
    assert shuffle((), ("b1",), set()) == ("b1",)


@pytest.mark.parametrize("positions", [{1, 2}, set(), {0}, {4}])
def test_bad_positions(positions):
    with pytest.raises(PreconditionError):
        shuffle(("a",), ("b", "c"), positions)


def test_full_set_rejected():
    with pytest.raises(PreconditionError):
        shuffle(("a",), (), {1})


def all_cases(limit):
    for n in range(1, limit + 1):
        for k in range(0, n):
            a = tuple(f"a{i}" for i in range(k))
            b = tuple(f"b{i}" for i in range(n - k))
            for pos in itertools.combinations(range(1, n + 1), k):
                yield a, b, set(pos)


def test_exhaustive_against_positional_oracle():
    count = 0
    for a, b, pos in all_cases(5):
        c = shuffle(a, b, pos)
        assert c == place_then_fill(a, b, pos)
        assert tuple(c[p - 1] for p in sorted(pos)) == a
        assert tuple(c[p - 1] for p in range(1, len(c) + 1) if p not in pos) == b
        count += 1
    assert count == sum(2 ** n - 1 for n in range(1, 6))
