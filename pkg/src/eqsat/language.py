"""User-defined term languages: operators, leaf payloads, and s-expressions.

Terms are stored flat: a postorder array of ``(op, child_indices)`` nodes in
which children always precede their parent and the root is the last entry.
This keeps hashing, traversal, and bulk insertion into an e-graph cheap.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Union

VARIADIC = None  # arity marker for list-like constructors


class Leaf(NamedTuple):
    """Payload of a childless node: a number, a boolean, or a symbol.

    The kind tag participates in equality and ordering, so ``Leaf("bool",
    True)`` never collides with ``Leaf("num", 1)``.
    """

    kind: str  # "num" | "bool" | "sym"
    value: object


def num(value) -> Leaf:
    """Numeric leaf; integral fractions normalize to int so 6/2 equals 3."""
    if isinstance(value, Fraction) and value.denominator == 1:
        value = int(value)
    return Leaf("num", value)


def boolean(value) -> Leaf:
    return Leaf("bool", bool(value))


def sym(name: str) -> Leaf:
    # interned so equal symbol names share one string object
    return Leaf("sym", sys.intern(name))


# An operator is either a function symbol (interned str) or a leaf payload.
Op = Union[str, Leaf]


class LanguageError(Exception):
    pass


class ParseError(LanguageError):
    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownOperatorError(ParseError):
    pass


class ArityError(ParseError):
    pass


@dataclass
class LanguageDef:
    """Operator symbols with fixed arities plus the admitted leaf kinds.

    Treated as immutable after construction; safe to share across threads.
    """

    name: str
    operators: dict[str, Optional[int]]
    leaf_kinds: frozenset[str] = frozenset({"num", "sym"})

    def __post_init__(self):
        ops = {}
        for op, arity in self.operators.items():
            if arity is not VARIADIC and (not isinstance(arity, int) or arity < 0):
                raise LanguageError(f"bad arity for operator {op!r}: {arity!r}")
            ops[sys.intern(op)] = arity
        self.operators = ops
        self.leaf_kinds = frozenset(self.leaf_kinds)

    def arity(self, op: str) -> Optional[int]:
        try:
            return self.operators[op]
        except KeyError:
            raise UnknownOperatorError(f"unknown operator {op!r}") from None


@dataclass(frozen=True)
class Term:
    """Ground term as a flat postorder node array (children precede parents)."""

    nodes: tuple[tuple[Op, tuple[int, ...]], ...]

    @staticmethod
    def leaf(payload: Leaf) -> "Term":
        return Term(((payload, ()),))

    @staticmethod
    def apply(op: str, *children: "Term") -> "Term":
        nodes: list[tuple[Op, tuple[int, ...]]] = []
        roots = []
        for child in children:
            offset = len(nodes)
            for c_op, kids in child.nodes:
                nodes.append((c_op, tuple(k + offset for k in kids)))
            roots.append(len(nodes) - 1)
        nodes.append((sys.intern(op), tuple(roots)))
        return Term(tuple(nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> tuple[Op, tuple[int, ...]]:
        return self.nodes[-1]

    @property
    def root_op(self) -> Op:
        return self.nodes[-1][0]

    def postorder(self) -> Iterator[tuple[Op, tuple[int, ...]]]:
        return iter(self.nodes)

    def depth(self) -> int:
        depths = []
        for _, kids in self.nodes:
            depths.append(1 + max((depths[k] for k in kids), default=0))
        return depths[-1]

    def subtree_sizes(self) -> list[int]:
        sizes = []
        for _, kids in self.nodes:
            sizes.append(1 + sum(sizes[k] for k in kids))
        return sizes

    def subterm(self, index: int) -> "Term":
        """Subterm rooted at a node index; subtrees are contiguous slices."""
        size = self.subtree_sizes()[index]
        start = index - size + 1
        return Term(
            tuple(
                (op, tuple(k - start for k in kids))
                for op, kids in self.nodes[start : index + 1]
            )
        )

    def children(self) -> tuple["Term", ...]:
        return tuple(self.subterm(k) for k in self.nodes[-1][1])

    def __str__(self) -> str:
        return print_term(self)


_INT_RE = re.compile(r"^[+-]?\d+$")
_RATIONAL_RE = re.compile(r"^[+-]?\d+/\d+$")


def tokenize(text: str) -> list[tuple[str, int]]:
    """Split s-expression text into (token, position) pairs."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            tokens.append((c, i))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def atom_to_leaf(token: str, lang: LanguageDef, position: int = 0) -> Leaf:
    """Classify a bare atom: integers and p/q rationals as numbers,
    true/false as booleans, anything else as a symbol (where admitted)."""
    if "num" in lang.leaf_kinds:
        if _INT_RE.match(token):
            return num(int(token))
        if _RATIONAL_RE.match(token):
            try:
                return num(Fraction(token))
            except ZeroDivisionError:
                raise ParseError(f"zero denominator in {token!r}", position) from None
    if "bool" in lang.leaf_kinds and token in ("true", "false"):
        return boolean(token == "true")
    if "sym" in lang.leaf_kinds:
        if token.startswith("?"):
            raise ParseError(
                f"pattern variable {token!r} not allowed in a ground term", position
            )
        return sym(token)
    raise ParseError(f"cannot parse atom {token!r} in language {lang.name}", position)


def parse_term(text: str, lang: LanguageDef) -> Term:
    """Parse an s-expression into a Term, validating operators and arities."""
    tokens = tokenize(text)
    if not tokens:
        raise ParseError("empty input", 0)
    nodes: list[tuple[Op, tuple[int, ...]]] = []

    def parse(at: int) -> tuple[int, int]:
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
                idx, at = parse(at)
                kids.append(idx)
            if at >= len(tokens):
                raise ParseError("unclosed '('", pos)
            if arity is not VARIADIC and len(kids) != arity:
                raise ArityError(
                    f"operator {head!r} expects {arity} arguments, got {len(kids)}",
                    head_pos,
                )
            nodes.append((sys.intern(head), tuple(kids)))
            return len(nodes) - 1, at + 1
        if token == ")":
            raise ParseError("unexpected ')'", pos)
        if token in lang.operators:
            arity = lang.operators[token]
            if arity not in (VARIADIC, 0):
                raise ArityError(
                    f"operator {token!r} expects {arity} arguments, got 0", pos
                )
            nodes.append((sys.intern(token), ()))
            return len(nodes) - 1, at + 1
        nodes.append((atom_to_leaf(token, lang, pos), ()))
        return len(nodes) - 1, at + 1

    _, after = parse(0)
    if after != len(tokens):
        raise ParseError("trailing input after term", tokens[after][1])
    return Term(tuple(nodes))


def leaf_to_str(leaf: Leaf) -> str:
    if leaf.kind == "bool":
        return "true" if leaf.value else "false"
    return str(leaf.value)


def print_term(term: Term) -> str:
    """Render a term; one space between atoms, round-trips through parse."""
    rendered: list[str] = []
    for op, kids in term.nodes:
        if isinstance(op, Leaf):
            rendered.append(leaf_to_str(op))
        elif not kids:
            rendered.append(op)
        else:
            rendered.append("(" + " ".join([op] + [rendered[k] for k in kids]) + ")")
    return rendered[-1]
