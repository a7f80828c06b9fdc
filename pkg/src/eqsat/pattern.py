"""Patterns with variables and e-matching.

Patterns compile to a small instruction program executed against one class
at a time by a backtracking virtual machine; ``ematch`` runs the program
over every canonical class of a clean graph and returns the substitutions
under which the pattern is represented there.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from .egraph import EGraph, ENode
from .language import (
    Leaf,
    LanguageDef,
    ParseError,
    UnknownOperatorError,
    ArityError,
    VARIADIC,
    atom_to_leaf,
    leaf_to_str,
    tokenize,
)


@dataclass(frozen=True)
class PVar:
    """Pattern variable; the name keeps its `?` prefix."""

    name: str


@dataclass(frozen=True)
class PLeaf:
    leaf: Leaf


@dataclass(frozen=True)
class PApp:
    op: str
    children: tuple["PatternNode", ...]


PatternNode = Union[PVar, PLeaf, PApp]


@dataclass(frozen=True)
class Pattern:
    root: PatternNode

    def vars(self) -> tuple[str, ...]:
        """Variable names in first-occurrence order, deduplicated."""
        seen: dict[str, None] = {}

        def walk(node):
            if isinstance(node, PVar):
                seen.setdefault(node.name)
            elif isinstance(node, PApp):
                for child in node.children:
                    walk(child)

        walk(self.root)
        return tuple(seen)

    def __str__(self) -> str:
        def fmt(node):
            if isinstance(node, PVar):
                return node.name
            if isinstance(node, PLeaf):
                return leaf_to_str(node.leaf)
            if not node.children:
                return node.op
            return "(" + " ".join([node.op] + [fmt(c) for c in node.children]) + ")"

        return fmt(self.root)


def parse_pattern(text: str, lang: LanguageDef) -> Pattern:
    """Parse pattern text; atoms prefixed with `?` are variables."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty pattern", 0)

    def parse(at: int) -> tuple[PatternNode, int]:
        token, pos = tokens[at]
        if token == "(":
            if at + 1 >= len(tokens) or tokens[at + 1][0] in ("(", ")"):
                raise ParseError("expected an operator after '('", pos)
            head, head_pos = tokens[at + 1]
            if head not in lang.operators:
                raise UnknownOperatorError(f"unknown operator {head!r}", head_pos)
            arity = lang.operators[head]
            kids = []
            at += 2
            while at < len(tokens) and tokens[at][0] != ")":
                node, at = parse(at)
                kids.append(node)
            if at >= len(tokens):
                raise ParseError("unclosed '('", pos)
            if arity is not VARIADIC and len(kids) != arity:
                raise ArityError(
                    f"operator {head!r} expects {arity} arguments, got {len(kids)}",
                    head_pos,
                )
            return PApp(head, tuple(kids)), at + 1
        if token == ")":
            raise ParseError("unexpected ')'", pos)
        if token.startswith("?"):
            if len(token) == 1:
                raise ParseError("bare '?' is not a variable name", pos)
            return PVar(token), at + 1
        if token in lang.operators:
            arity = lang.operators[token]
            if arity not in (VARIADIC, 0):
                raise ArityError(
                    f"operator {token!r} expects {arity} arguments, got 0", pos
                )
            return PApp(token, ()), at + 1
        return PLeaf(atom_to_leaf(token, lang, pos)), at + 1

    root, after = parse(0)
    if after != len(tokens):
        raise ParseError("trailing input after pattern", tokens[after][1])
    return Pattern(root)


# ----------------------------------------------------------------------
# compilation to a small virtual machine

class Bind(NamedTuple):
    """Try every node with this op/arity in the class held by `reg`,
    loading its children into registers `out` .. `out+arity-1`."""

    reg: int
    op: object
    arity: int
    out: int


class Compare(NamedTuple):
    """Nonlinear-variable consistency: both registers must canonicalize
    to the same class."""

    reg: int
    other: int


@dataclass(frozen=True)
class MatchProgram:
    instructions: tuple
    var_regs: tuple[tuple[str, int], ...]  # variable name -> register
    n_regs: int


def compile_pattern(pattern: Pattern) -> MatchProgram:
    instructions = []
    var_regs: dict[str, int] = {}
    n_regs = 1
    todo: list[tuple[PatternNode, int]] = [(pattern.root, 0)]
    while todo:
        node, reg = todo.pop(0)
        if isinstance(node, PVar):
            if node.name in var_regs:
                instructions.append(Compare(reg, var_regs[node.name]))
            else:
                var_regs[node.name] = reg
        elif isinstance(node, PLeaf):
            instructions.append(Bind(reg, node.leaf, 0, n_regs))
        else:
            instructions.append(Bind(reg, node.op, len(node.children), n_regs))
            for i, child in enumerate(node.children):
                todo.append((child, n_regs + i))
            n_regs += len(node.children)
    return MatchProgram(tuple(instructions), tuple(var_regs.items()), n_regs)


def run_program(
    egraph: EGraph, program: MatchProgram, class_id: int
) -> list[dict[str, int]]:
    """Execute a match program against one canonical class; returns the
    substitutions (variable name to canonical class id), deduplicated."""
    regs = [0] * program.n_regs
    regs[0] = class_id
    instructions = program.instructions
    find = egraph.uf.find
    classes = egraph.classes
    out: dict[tuple, dict[str, int]] = {}

    def step(i: int) -> None:
        if i == len(instructions):
            subst = {name: find(regs[reg]) for name, reg in program.var_regs}
            out.setdefault(tuple(sorted(subst.items())), subst)
            return
        ins = instructions[i]
        if type(ins) is Bind:
            eclass = classes[find(regs[ins.reg])]
            op, arity, base = ins.op, ins.arity, ins.out
            for node in eclass.nodes:
                if node.op == op and len(node.children) == arity:
                    regs[base : base + arity] = node.children
                    step(i + 1)
        else:
            if find(regs[ins.reg]) == find(regs[ins.other]):
                step(i + 1)

    step(0)
    return list(out.values())


class SearchMatches(NamedTuple):
    """All substitutions under which a pattern matched one e-class."""

    eclass: int
    substs: list[dict[str, int]]


def ematch(egraph: EGraph, pattern: Pattern) -> list[SearchMatches]:
    """Find every (substitution, class) pair where the pattern is
    represented: sound and complete up to canonicalization, read-only,
    results sorted by class id."""
    assert egraph.clean, "ematch on a dirty graph may miss matches; rebuild first"
    program = compile_pattern(pattern)
    root = pattern.root
    if isinstance(root, PVar):
        candidates = sorted(egraph.classes)
    elif isinstance(root, PLeaf):
        candidates = sorted(egraph.classes_with_op(root.leaf))
    else:
        candidates = sorted(egraph.classes_with_op(root.op))
    results = []
    for class_id in candidates:
        substs = run_program(egraph, program, class_id)
        if substs:
            substs.sort(key=lambda s: tuple(sorted(s.items())))
            results.append(SearchMatches(class_id, substs))
    return results


def match_in_class(egraph: EGraph, pattern: Pattern, class_id: int) -> list[dict]:
    """Match a pattern inside one class only (goal checks)."""
    assert egraph.clean
    program = compile_pattern(pattern)
    return run_program(egraph, program, egraph.find(class_id))


class UnboundVariable(KeyError):
    pass


def apply_subst(pattern: Pattern, subst: dict[str, int], egraph: EGraph) -> int:
    """Instantiate a pattern bottom-up via add; returns the root class id."""

    def build(node) -> int:
        if isinstance(node, PVar):
            try:
                return subst[node.name]
            except KeyError:
                raise UnboundVariable(node.name) from None
        if isinstance(node, PLeaf):
            return egraph.add(ENode(node.leaf, ()))
        return egraph.add(ENode(node.op, tuple(build(c) for c in node.children)))

    return build(pattern.root)


def lookup_subst(
    pattern: Pattern, subst: dict[str, int], egraph: EGraph
) -> Optional[int]:
    """Like apply_subst but read-only: returns the class id the instantiated
    pattern would land in, or None if any piece of it is absent."""

    def lookup(node) -> Optional[int]:
        if isinstance(node, PVar):
            try:
                return egraph.find(subst[node.name])
            except KeyError:
                raise UnboundVariable(node.name) from None
        if isinstance(node, PLeaf):
            return egraph.lookup(ENode(node.leaf, ()))
        kids = []
        for child in node.children:
            k = lookup(child)
            if k is None:
                return None
            kids.append(k)
        return egraph.lookup(ENode(node.op, tuple(kids)))

    return lookup(pattern.root)
