"""Command-line front end.

Exit codes: 0 success, 1 parse or usage error, 2 validation or precondition
error, 3 oracle mismatch.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .chase.deps import compute_layering, validate_cut
from .chase.engine import chase, layered_chase
from .chase.entail import Budgets, Countermodel, entail_dovetail, verify_certificate
from .chase.rules import format_rules, parse_rules
from .chase.tm import gen_tm_ruleset, parse_tm
from .core import fo
from .core.homs import core, is_isomorphic
from .core.instance import Instance, parse_instance, serialize_instance
from .core.rpe import parse_rpe, rpe_extend
from .core.terms import TOP, Var, is_null
from .cw import eval_cw, format_cw, pw_to_cw
from .errors import ParseError, PreconditionError, ValidationError
from .pwtree.dsl import format_tree, parse_tree
from .pwtree.evaluate import eval_tree, require_valid, unfold, width_upper
from .pwtree.model import PwTree
from .queries import Cq, Ucq, parse_query
from .transforms.closure import rpe_extend_tree
from .transforms.compile import compile_fo_to_tree
from .transforms.perm import Perm
from .transforms.primitives import (arity_of, t_complement, t_equality, t_permute, t_projection, t_union,
                                    t_varintro)

OK, PARSE, INVALID, MISMATCH = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", PARSE)


# io helpers

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", PARSE) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _comment(lines) -> None:
    for ln in lines:
        sys.stdout.write(f"# {ln}\n")


def _ident(name: str) -> str:
    return '"' + name.replace('"', '\\"') + '"'


def instance_dot(inst: Instance) -> str:
    """Graphviz text: unary atoms as node labels, binary atoms as edges, wider atoms as hyperedge nodes."""
    labels: dict = {t: [] for t in inst.adom}
    edges = []
    hyper = []
    for a in inst.sorted_atoms():
        if a.pred == TOP:
            continue
        if len(a.args) == 1:
            labels[a.args[0]].append(a.pred)
        elif len(a.args) == 2:
            edges.append(f"  {_ident(a.args[0])} -> {_ident(a.args[1])} [label={_ident(a.pred)}];")
        else:
            h = f"h{len(hyper)}"
            hyper.append(f"  {h} [shape=box, label={_ident(a.pred)}];")
            hyper += [f"  {h} -> {_ident(t)} [label=\"{i}\"];" for i, t in enumerate(a.args, 1)]
    lines = ["digraph instance {"]
    for t in sorted(labels, key=lambda s: (is_null(s), s)):
        text = t if not labels[t] else t + "\\n" + ",".join(labels[t])
        shape = "ellipse" if is_null(t) else "box"
        lines.append(f"  {_ident(t)} [shape={shape}, label={_ident(text)}];")
    lines += edges + hyper + ["}"]
    return "\n".join(lines) + "\n"


def tree_dot(tree: PwTree) -> str:
    """Graphviz text for the node table: one node per entry, edges 0/1 to the children."""
    lines = ["digraph tree {"]
    for name in sorted(tree.nodes):
        node = tree.nodes[name]
        label = name + ("" if not node.decorators else "\\n" + " ".join(sorted(map(str, node.decorators))))
        peri = ", peripheries=2" if name == tree.root else ""
        lines.append(f"  {_ident(name)} [shape=box, label={_ident(label)}{peri}];")
    for name in sorted(tree.nodes):
        node = tree.nodes[name]
        if node.is_pseudoleaf:
            continue
        for side, child in (("0", node.left), ("1", node.right)):
            if child is not None:
                lines.append(f"  {_ident(name)} -> {_ident(child)} [label=\"{side}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render(inst: Instance, fmt: str) -> str:
    return instance_dot(inst) if fmt == "dot" else serialize_instance(inst)


def _finite(tree: PwTree, depth: int | None) -> PwTree:
    if depth is not None:
        return unfold(tree, depth)
    if not tree.is_finite:
        raise CliError("the tree is regular (cyclic); pass --depth to unfold it", INVALID)
    return tree


# commands

def cmd_eval_tree(args) -> int:
    tree = _finite(parse_tree(_read(args.tree)), args.depth)
    require_valid(tree)
    res = eval_tree(tree)
    _emit(_render(res.instance, args.format), args.out)
    census = [f"color {c}: {len(res.colormap.get(c, ()))}" for c in sorted(tree.colors)]
    _comment([f"width_upper: {width_upper(tree)}"] + census)
    return OK


def _parse_perm(text: str) -> Perm:
    try:
        return Perm(tuple(int(x) for x in text.split(",")))
    except ValueError:
        raise CliError(f"bad permutation {text!r}", PARSE) from None


def _xs(n: int) -> tuple:
    return tuple(Var(f"x{i}") for i in range(1, n + 1))


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise CliError(f"--op {args.op} needs --{n.replace('_', '-')}", PARSE)


def transform(tree: PwTree, args):
    """(transformed tree, oracle) where oracle maps an instance to its semantic extension."""
    op, new = args.op, args.fresh
    if op == "equality":
        x1, x2 = _xs(2)
        return t_equality(tree, new), lambda i: fo.fo_extend(i, new, fo.Eq(x1, x2), (x1, x2))
    if op == "fo":
        _need(args, "formula")
        f = fo.parse_fo(args.formula)
        xs = tuple(Var(v.lstrip("?")) for v in args.vars.split(",")) if args.vars else fo.free_vars(f)
        return compile_fo_to_tree(tree, f, xs, new), lambda i: fo.fo_extend(i, new, f, xs)
    if op == "rpe":
        _need(args, "rpe")
        e = parse_rpe(args.rpe)
        return rpe_extend_tree(tree, new, e), lambda i: rpe_extend(i, new, e)
    _need(args, "pred")
    a = args.pred
    n = arity_of(tree, a)
    xs = _xs(n)
    atom = fo.FAtom(a, xs)
    if op == "varintro":
        y = Var("y")
        return t_varintro(tree, a, new), lambda i: fo.fo_extend(i, new, atom, xs + (y,))
    if op == "permute":
        _need(args, "perm")
        pi = _parse_perm(args.perm)
        target = tuple(xs[pi.images.index(j)] for j in range(1, n + 1)) if pi.n == n else xs
        return t_permute(tree, a, pi, new), lambda i: fo.fo_extend(i, new, atom, target)
    if op == "complement":
        return t_complement(tree, a, new), lambda i: fo.fo_extend(i, new, fo.Not(atom), xs)
    if op == "union":
        _need(args, "pred2")
        other = fo.FAtom(args.pred2, xs)
        return t_union(tree, a, args.pred2, new), lambda i: fo.fo_extend(i, new, fo.Or(atom, other), xs)
    if op == "project":
        _need(args, "pos")
        k = args.pos
        rest = xs[:k - 1] + xs[k:]
        return (t_projection(tree, a, k, new),
                lambda i: fo.fo_extend(i, new, fo.Exists(xs[k - 1], atom), rest))
    raise CliError(f"unknown operation {op}", PARSE)


def cmd_transform(args) -> int:
    tree = _finite(parse_tree(_read(args.tree)), args.depth)
    require_valid(tree)
    out, oracle = transform(tree, args)
    if args.verify:
        want = oracle(eval_tree(tree).instance)
        got = eval_tree(out).instance
        if is_isomorphic(got, want) is None:
            raise CliError("transformed tree disagrees with the semantic extension", MISMATCH)
        _comment(["verified: isomorphic to the semantic extension"])
    _emit(format_tree(out), args.out)
    return OK


def cmd_chase(args) -> int:
    data = parse_instance(_read(args.db))
    rules = parse_rules(_read(args.rules))
    steps = None if args.fixpoint else args.steps
    if args.strata:
        res = layered_chase(data, rules.annotated_strata(), steps, args.max_atoms)
    else:
        res = chase(data, rules, steps, args.max_atoms)
    _emit(_render(res.instance, args.format), args.out)
    _comment([f"status: {res.status}", f"steps: {res.steps}", f"nulls: {res.census}"])
    return OK


def _load_query(text: str):
    q = parse_query(text)
    if isinstance(q, Cq):
        return Cq(q.body, ())
    if isinstance(q, Ucq):
        return Ucq(tuple(Cq(d.body, ()) for d in q.disjuncts))
    return q


def cmd_entail(args) -> int:
    data = parse_instance(_read(args.db))
    rules = parse_rules(_read(args.rules))
    q = _load_query(_read(args.query))
    b = Budgets(args.max_steps, args.max_atoms, args.max_fresh, args.quantum, args.max_rounds)
    res = entail_dovetail(data, rules, q, b)
    sys.stdout.write(res.verdict.upper() + "\n")
    _comment([f"lane: {res.lane}", f"note: {res.note}", f"rounds: {res.rounds}"])
    if res.certificate is not None:
        if not verify_certificate(data, rules, q, res):
            raise CliError("the certificate does not verify", MISMATCH)
        if args.certificate:
            kind = "countermodel" if isinstance(res.certificate, Countermodel) else "chase prefix"
            Path(args.certificate).write_text(serialize_instance(res.certificate.instance))
            _comment([f"certificate ({kind}): {args.certificate}"])
    return OK


def _parse_partition(text: str) -> list[list[int]]:
    try:
        return [[int(i) - 1 for i in block.split(",")] for block in text.split("|")]
    except ValueError:
        raise CliError(f"bad partition {text!r}; expected e.g. 1,2|3|4", PARSE) from None


def _format_partition(blocks) -> str:
    return "|".join(",".join(str(i + 1) for i in b) for b in blocks)


def cmd_cut(args) -> int:
    rules = parse_rules(_read(args.rules))
    if args.layering:
        sys.stdout.write(_format_partition(compute_layering(rules, args.bound)) + "\n")
        return OK
    if args.partition:
        blocks = _parse_partition(args.partition)
    else:
        if any(s is None for s in rules.strata):
            raise CliError("no --partition given and not every rule has a @stratum annotation", INVALID)
        levels = sorted(set(rules.strata))
        blocks = [[i for i, s in enumerate(rules.strata) if s == lv] for lv in levels]
    ok, bad = validate_cut(rules, blocks, args.bound)
    sys.stdout.write(("true" if ok else "false") + "\n")
    for i, j in bad:
        _comment([f"rule {i + 1} depends on later rule {j + 1}"])
    return OK if ok else INVALID


def cmd_pw2cw(args) -> int:
    tree = _finite(parse_tree(_read(args.tree)), args.depth)
    tr = pw_to_cw(tree)
    if args.verify:
        if is_isomorphic(eval_cw(tr.expr, dict(tree.signature)), eval_tree(tree).instance) is None:
            raise CliError("the cliquewidth expression denotes a different instance", MISMATCH)
        _comment(["verified: isomorphic to the tree's instance"])
    _emit(format_cw(tr.expr) + "\n", args.out)
    _comment([f"cw colors: {len(tr.colors)}"])
    return OK


def cmd_gen_tm(args) -> int:
    _emit(format_rules(gen_tm_ruleset(parse_tm(_read(args.tm)))), args.out)
    return OK


def cmd_core(args) -> int:
    _emit(_render(core(parse_instance(_read(args.db))), args.format), args.out)
    return OK


def cmd_dot(args) -> int:
    if (args.tree is None) == (args.db is None):
        raise CliError("dot needs exactly one of --tree and --db", PARSE)
    text = tree_dot(parse_tree(_read(args.tree))) if args.tree else instance_dot(parse_instance(_read(args.db)))
    _emit(text, args.out)
    return OK


# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pwidth", description="Partitionwidth trees, transformations and existential-rule reasoning.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_opts(s, fmt=True):
        s.add_argument("--out", help="output file (default: standard output)")
        if fmt:
            s.add_argument("--format", choices=["atoms", "dot"], default="atoms")

    s = sub.add_parser("eval-tree", help="evaluate a decorated tree")
    s.add_argument("--tree", required=True)
    s.add_argument("--depth", type=int, help="unfold to this depth first (needed for regular trees)")
    out_opts(s)
    s.set_defaults(func=cmd_eval_tree)

    s = sub.add_parser("transform", help="apply a width-preserving tree transformation")
    s.add_argument("--tree", required=True)
    s.add_argument("--op", required=True,
                   choices=["equality", "varintro", "permute", "complement", "union", "project", "fo", "rpe"])
    s.add_argument("--fresh", required=True, help="name of the new predicate")
    s.add_argument("--pred", help="source predicate")
    s.add_argument("--pred2", help="second predicate for union")
    s.add_argument("--perm", help="permutation images, e.g. 2,1,3")
    s.add_argument("--pos", type=int, help="1-based position removed by project")
    s.add_argument("--formula", help="FO formula for --op fo")
    s.add_argument("--vars", help="answer variables for --op fo, e.g. ?x,?y")
    s.add_argument("--rpe", help="path expression for --op rpe")
    s.add_argument("--depth", type=int)
    s.add_argument("--verify", action="store_true", help="compare with the semantic extension")
    out_opts(s, fmt=False)
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("chase", help="run the Skolem chase")
    s.add_argument("--db", required=True)
    s.add_argument("--rules", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--steps", type=int)
    g.add_argument("--fixpoint", action="store_true", help="no step bound")
    s.add_argument("--max-atoms", type=int, default=100_000)
    s.add_argument("--strata", action="store_true", help="chase the @stratum layers one after another")
    out_opts(s)
    s.set_defaults(func=cmd_chase)

    s = sub.add_parser("entail", help="decide query entailment within budgets")
    s.add_argument("--db", required=True)
    s.add_argument("--rules", required=True)
    s.add_argument("--query", required=True, help="file holding a CQ, UCQ or MDDL query")
    d = Budgets()
    s.add_argument("--max-steps", type=int, default=d.max_steps)
    s.add_argument("--max-atoms", type=int, default=d.max_atoms)
    s.add_argument("--max-fresh", type=int, default=d.max_fresh)
    s.add_argument("--quantum", type=int, default=d.quantum)
    s.add_argument("--max-rounds", type=int, default=d.max_rounds)
    s.add_argument("--certificate", help="write the certificate instance here")
    s.set_defaults(func=cmd_entail)

    s = sub.add_parser("cut", help="check a rule partition, or compute a layering")
    s.add_argument("--rules", required=True)
    s.add_argument("--partition", help='1-based blocks, e.g. "1,2|3|4" (default: @stratum annotations)')
    s.add_argument("--layering", action="store_true", help="print the dependency layering instead")
    s.add_argument("--bound", type=int, help="term bound of the dependency search")
    s.set_defaults(func=cmd_cut)

    s = sub.add_parser("pw2cw", help="translate a tree over a binary signature to a cliquewidth expression")
    s.add_argument("--tree", required=True)
    s.add_argument("--depth", type=int)
    s.add_argument("--verify", action="store_true")
    out_opts(s, fmt=False)
    s.set_defaults(func=cmd_pw2cw)

    s = sub.add_parser("gen-tm", help="rules simulating a Turing machine on the empty tape")
    s.add_argument("--tm", required=True)
    out_opts(s, fmt=False)
    s.set_defaults(func=cmd_gen_tm)

    s = sub.add_parser("core", help="core of an instance")
    s.add_argument("--db", required=True)
    out_opts(s)
    s.set_defaults(func=cmd_core)

    s = sub.add_parser("dot", help="Graphviz export of a tree or an instance")
    s.add_argument("--tree")
    s.add_argument("--db")
    out_opts(s, fmt=False)
    s.set_defaults(func=cmd_dot)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return PARSE
    except (ValidationError, PreconditionError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
