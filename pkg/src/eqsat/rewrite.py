"""Named rewrite rules: a searcher pattern plus an applier.

Appliers come in three flavors: purely syntactic patterns, condition-guarded
appliers, and dynamic procedures that compute their right-hand side from
analysis data.  Conditions run in the read phase and never mutate the graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .egraph import EGraph
from .language import LanguageDef, LanguageError
from .pattern import (
    Pattern,
    SearchMatches,
    apply_subst,
    ematch,
    lookup_subst,
    parse_pattern,
    tokenize,
)

Condition = Callable[[EGraph, int, dict], bool]


class Applier:
    def apply_one(self, egraph: EGraph, eclass: int, subst: dict) -> list[int]:
        raise NotImplementedError

    def pattern_vars(self) -> tuple[str, ...]:
        """Variables the applier needs bound by the searcher."""
        return ()

    def fresh_vars(self) -> tuple[str, ...]:
        """Variables the applier binds itself at apply time."""
        return ()


@dataclass
class PatternApplier(Applier):
    pattern: Pattern

    def apply_one(self, egraph, eclass, subst):
        return [apply_subst(self.pattern, subst, egraph)]

    def pattern_vars(self):
        return self.pattern.vars()


@dataclass
class ConditionalApplier(Applier):
    condition: Condition
    inner: Applier

    def apply_one(self, egraph, eclass, subst):
        if not self.condition(egraph, eclass, subst):
            return []
        return self.inner.apply_one(egraph, eclass, subst)

    def pattern_vars(self):
        return self.inner.pattern_vars()

    def fresh_vars(self):
        return self.inner.fresh_vars()


@dataclass
class DynamicApplier(Applier):
    """Wraps a procedure (egraph, eclass, subst) -> list of class ids to be
    unified with the matched class."""

    fn: Callable[[EGraph, int, dict], list[int]]
    needs: tuple[str, ...] = ()

    def apply_one(self, egraph, eclass, subst):
        return self.fn(egraph, eclass, subst)

    def pattern_vars(self):
        return self.needs


@dataclass
class ConditionEqual:
    """True iff instantiating both patterns under the substitution lands in
    the same class.  Lookup-only: absent subterms make the condition false,
    and the graph is never mutated."""

    p1: Pattern
    p2: Pattern

    def __call__(self, egraph, eclass, subst):
        a = lookup_subst(self.p1, subst, egraph)
        if a is None:
            return False
        b = lookup_subst(self.p2, subst, egraph)
        return b is not None and a == b

    @staticmethod
    def parse(text1: str, text2: str, lang: LanguageDef) -> "ConditionEqual":
        return ConditionEqual(parse_pattern(text1, lang), parse_pattern(text2, lang))


def class_constant(egraph: EGraph, class_id: int):
    """Constant recorded by the class's analysis data, if any (duck-typed:
    the data either is the constant or carries a `.constant` attribute)."""
    data = egraph[class_id].data
    return getattr(data, "constant", data)


def is_const(var: str) -> Condition:
    def cond(egraph, eclass, subst):
        return class_constant(egraph, subst[var]) is not None

    return cond


def is_nonzero_const(var: str) -> Condition:
    def cond(egraph, eclass, subst):
        value = class_constant(egraph, subst[var])
        return value is not None and value != 0

    return cond


def is_not_same_var(v1: str, v2: str) -> Condition:
    def cond(egraph, eclass, subst):
        return egraph.find(subst[v1]) != egraph.find(subst[v2])

    return cond


class RewriteError(LanguageError):
    pass


@dataclass
class Rewrite:
    name: str
    searcher: Pattern
    applier: Applier

    def __post_init__(self):
        bound = set(self.searcher.vars()) | set(self.applier.fresh_vars())
        missing = [v for v in self.applier.pattern_vars() if v not in bound]
        if missing:
            raise RewriteError(
                f"rewrite {self.name!r} uses unbound variables: {', '.join(missing)}"
            )

    @staticmethod
    def parse(
        name: str,
        lhs: str,
        rhs: str,
        lang: LanguageDef,
        conditions: Sequence[Condition] = (),
    ) -> "Rewrite":
        searcher = parse_pattern(lhs, lang)
        applier: Applier = PatternApplier(parse_pattern(rhs, lang))
        for condition in reversed(list(conditions)):
            applier = ConditionalApplier(condition, applier)
        return Rewrite(name, searcher, applier)

    def search(self, egraph: EGraph) -> list[SearchMatches]:
        return ematch(egraph, self.searcher)


def search_rewrite(egraph: EGraph, rewrite: Rewrite) -> list[SearchMatches]:
    return rewrite.search(egraph)


def apply_rewrite(
    egraph: EGraph, rewrite: Rewrite, matches: list[SearchMatches]
) -> int:
    """Apply previously collected matches; returns how many substitutions
    performed at least one new union.  May leave the graph dirty."""
    applied = 0
    for eclass, substs in matches:
        for subst in substs:
            before = egraph.union_count
            for produced in rewrite.applier.apply_one(egraph, eclass, subst):
                egraph.merge(eclass, produced)
            if egraph.union_count > before:
                applied += 1
    return applied


# ----------------------------------------------------------------------
# rules file format: one rule per line,
#   name: <lhs-sexp> => <rhs-sexp> [if <builtin-condition>]
# with builtin conditions `is-const ?x`, `not-same-var ?a ?b`, `eq <p1> <p2>`.

def _read_one_sexp(tokens: list[tuple[str, int]], at: int) -> int:
    """Index just past one balanced s-expression starting at `at`."""
    if tokens[at][0] != "(":
        return at + 1
    depth = 0
    for i in range(at, len(tokens)):
        if tokens[i][0] == "(":
            depth += 1
        elif tokens[i][0] == ")":
            depth -= 1
            if depth == 0:
                return i + 1
    raise RewriteError("unbalanced parentheses in rule")


def _parse_condition(text: str, lang: LanguageDef) -> Condition:
    tokens = tokenize(text)
    if not tokens:
        raise RewriteError("empty condition")
    head = tokens[0][0]
    rest = tokens[1:]
    if head == "is-const":
        if len(rest) != 1 or not rest[0][0].startswith("?"):
            raise RewriteError("is-const takes one pattern variable")
        return is_const(rest[0][0])
    if head == "not-same-var":
        if len(rest) != 2:
            raise RewriteError("not-same-var takes two pattern variables")
        return is_not_same_var(rest[0][0], rest[1][0])
    if head == "eq":
        end1 = _read_one_sexp(tokens, 1)
        end2 = _read_one_sexp(tokens, end1)
        if end2 != len(tokens):
            raise RewriteError("eq takes exactly two patterns")
        start1, start2 = tokens[1][1], tokens[end1][1]
        return ConditionEqual(
            parse_pattern(text[start1:start2], lang),
            parse_pattern(text[start2:], lang),
        )
    raise RewriteError(f"unknown builtin condition {head!r}")


def parse_rules(text: str, lang: LanguageDef) -> list[Rewrite]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, colon, rest = line.partition(":")
        if not colon or not name.strip():
            raise RewriteError(f"line {lineno}: expected 'name: lhs => rhs'")
        lhs_text, arrow, rhs_rest = rest.partition("=>")
        if not arrow:
            raise RewriteError(f"line {lineno}: missing '=>'")
        tokens = tokenize(rhs_rest)
        if not tokens:
            raise RewriteError(f"line {lineno}: missing right-hand side")
        rhs_end = _read_one_sexp(tokens, 0)
        conditions = []
        if rhs_end < len(tokens):
            if tokens[rhs_end][0] != "if":
                raise RewriteError(f"line {lineno}: trailing tokens after rhs")
            cond_start = tokens[rhs_end][1] + len("if")
            conditions.append(_parse_condition(rhs_rest[cond_start:], lang))
            rhs_text = rhs_rest[: tokens[rhs_end][1]]
        else:
            rhs_text = rhs_rest
        rules.append(
            Rewrite.parse(name.strip(), lhs_text.strip(), rhs_text.strip(), lang, conditions)
        )
    return rules
