"""Turing machines on the empty tape and their encoding as existential rules."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core.terms import Atom, Var
from ..errors import ParseError, PreconditionError
from .rules import Rule, Ruleset

BLANK = "_"
GAMMA = ("0", "1", BLANK)
TAPE_CONST = "c"

H, V, HEAD, END_L, END_R = "H", "V", "Head", "End_L", "End_R"


@dataclass(frozen=True)
class TmSpec:
    start: str
    final: str
    delta: dict = field(default_factory=dict)

    def __post_init__(self):
        for (q, a), (q2, b, d) in self.delta.items():
            if a not in GAMMA or b not in GAMMA:
                raise PreconditionError(f"symbols must be among {GAMMA}")
            if d not in ("L", "R"):
                raise PreconditionError(f"direction {d!r} is not L or R")
            if q == self.final:
                raise PreconditionError("the final state has no transitions")

    @property
    def states(self) -> tuple:
        qs = {self.start, self.final}
        for (q, _), (q2, _, _) in self.delta.items():
            qs |= {q, q2}
        return tuple(sorted(qs))

    @property
    def is_total(self) -> bool:
        return all((q, a) in self.delta for q in self.states if q != self.final for a in GAMMA)


_LINE = re.compile(r"^(\w+)\s+([01_])\s*->\s*(\w+)\s+([01_])\s+([LR])$")


def parse_tm(text: str) -> TmSpec:
    """``start q``, ``final q`` and transition lines ``q a -> q' a' L|R``."""
    start = final = None
    delta: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] in ("start", "final") and len(words) == 2:
            if words[0] == "start":
                start = words[1]
            else:
                final = words[1]
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError(f"cannot parse {line!r}", lineno, 1)
        key = (m.group(1), m.group(2))
        if key in delta:
            raise ParseError(f"second transition for {key}", lineno, 1)
        delta[key] = (m.group(3), m.group(4), m.group(5))
    if start is None or final is None:
        raise ParseError("a machine needs a start and a final state")
    try:
        return TmSpec(start, final, delta)
    except PreconditionError as exc:
        raise ParseError(str(exc)) from None


def format_tm(m: TmSpec) -> str:
    lines = [f"start {m.start}", f"final {m.final}"]
    lines += [f"{q} {a} -> {q2} {b} {d}" for (q, a), (q2, b, d) in sorted(m.delta.items())]
    return "\n".join(lines) + "\n"


# simulation

@dataclass(frozen=True)
class Config:
    tape: tuple  # sorted (position, symbol) pairs for non-blank cells
    state: str
    pos: int

    def symbol(self, n: int) -> str:
        return dict(self.tape).get(n, BLANK)


@dataclass
class Trace:
    configs: list
    halted: bool
    stuck: bool


def tm_run(m: TmSpec, max_steps: int) -> Trace:
    """Run ``m`` from the empty tape for at most ``max_steps`` transitions."""
    cur = Config((), m.start, 0)
    configs = [cur]
    for _ in range(max_steps):
        if cur.state == m.final:
            break
        key = (cur.state, cur.symbol(cur.pos))
        if key not in m.delta:
            return Trace(configs, False, True)
        q2, b, d = m.delta[key]
        tape = dict(cur.tape)
        if b == BLANK:
            tape.pop(cur.pos, None)
        else:
            tape[cur.pos] = b
        cur = Config(tuple(sorted(tape.items())), q2, cur.pos + (1 if d == "R" else -1))
        configs.append(cur)
    return Trace(configs, cur.state == m.final, False)


# rules

def state_pred(q: str) -> str:
    return f"State_{q}"


def symbol_pred(a: str) -> str:
    return "Symbol_b" if a == BLANK else f"Symbol_{a}"


def unary_predicates(m: TmSpec) -> list[str]:
    return [state_pred(q) for q in m.states] + [symbol_pred(a) for a in GAMMA] + [HEAD, END_L, END_R]


def halt_atoms(m: TmSpec, x, y) -> list[Atom]:
    """Every unary atom over x and every binary atom over (x, y)."""
    return [Atom(p, (x,)) for p in unary_predicates(m)] + [Atom(H, (x, y)), Atom(V, (x, y))]


def _a(p, *args) -> Atom:
    return Atom(p, tuple(args))


def gen_tm_ruleset(m: TmSpec) -> Ruleset:
    x, y, z, u, w = (Var(n) for n in "xyzuw")
    rules = []
    rules.append(Rule((), (_a(H, x, y), _a(H, y, z), _a(H, z, u), _a(H, u, TAPE_CONST),
                           _a(END_L, x), _a(symbol_pred(BLANK), y), _a(symbol_pred(BLANK), z),
                           _a(symbol_pred(BLANK), u), _a(END_R, TAPE_CONST),
                           _a(state_pred(m.start), z), _a(HEAD, z)), (x, y, z, u)))
    for (q, a), (q2, b, d) in sorted(m.delta.items()):
        body = (_a(state_pred(q), x), _a(HEAD, x), _a(symbol_pred(a), x))
        moved = z if d == "L" else w
        rules.append(Rule(body, (_a(H, z, y), _a(H, y, w), _a(V, x, y), _a(symbol_pred(b), y),
                                 _a(state_pred(q2), moved), _a(HEAD, moved)), (y, z, w)))
    for a in GAMMA:
        rules.append(Rule((_a(H, x, y), _a(V, y, z), _a(H, u, z), _a(symbol_pred(a), x)),
                          (_a(V, x, u), _a(symbol_pred(a), u), _a(H, w, u)), (w,)))
    rules.append(Rule((_a(H, x, y), _a(V, y, z), _a(H, u, z), _a(END_L, x)),
                      (_a(V, x, u), _a(H, w, u), _a(symbol_pred(BLANK), u), _a(END_L, w)), (w,)))
    for a in GAMMA:
        rules.append(Rule((_a(H, x, y), _a(V, x, z), _a(H, z, u), _a(symbol_pred(a), y)),
                          (_a(V, y, u), _a(symbol_pred(a), u), _a(H, u, w)), (w,)))
    rules.append(Rule((_a(H, x, y), _a(V, x, z), _a(H, z, u), _a(END_R, y)),
                      (_a(V, y, u), _a(H, u, w), _a(symbol_pred(BLANK), u), _a(END_R, w)), (w,)))
    rules.append(Rule((_a(state_pred(m.final), x),), tuple(halt_atoms(m, x, x))))
    rules.append(Rule((_a("Top", x), _a("Top", y)) + tuple(halt_atoms(m, z, z)),
                      tuple(halt_atoms(m, x, x) + halt_atoms(m, x, y) + halt_atoms(m, y, x) + halt_atoms(m, y, y))))
    return Ruleset(tuple(rules))


def all_atoms_instance(m: TmSpec, terms) -> set[Atom]:
    """Every atom over the machine signature and the given terms."""
    ts = sorted(terms)
    out = set()
    for a in ts:
        for b in ts:
            out |= set(halt_atoms(m, a, b))
    return out
