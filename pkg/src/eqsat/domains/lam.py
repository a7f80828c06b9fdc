"""A partial evaluator for the untyped lambda calculus.

Binding is handled by explicit substitution: `let` terms are introduced by
beta reduction and pushed through the term by rewrite rules until they are
eliminated at variables and constants.  A per-class analysis tracks an
over-approximation of free variables (as the e-class ids of their symbol
leaves) together with the class's constant value, if any; the free-variable
sets drive capture-avoiding substitution under binders.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..analysis import (
    Analysis,
    AnalysisContradiction,
    check_folded,
    join_optional_constant,
)
from ..egraph import EGraph, ENode
from ..language import LanguageDef, Leaf, Term, boolean, num, sym
from ..pattern import apply_subst, parse_pattern
from ..rewrite import (
    Applier,
    ConditionalApplier,
    PatternApplier,
    Rewrite,
    is_const,
    is_not_same_var,
)

LAMBDA = LanguageDef(
    name="lambda",
    operators={
        "+": 2,
        "=": 2,
        "if": 3,
        "app": 2,
        "lam": 2,
        "let": 3,
        "fix": 2,
        "var": 1,
        # present in the language for completeness; no shipped rule uses it
        "subst": 3,
    },
    leaf_kinds=frozenset({"num", "bool", "sym"}),
)


@dataclass(frozen=True)
class LamData:
    """free: symbol-leaf classes possibly free in the class's terms
    (an over-approximation); constant: the known constant leaf, if any."""

    free: frozenset[int]
    constant: Optional[Leaf]


def eval_node(egraph: EGraph, node: ENode) -> Optional[Leaf]:
    """Constant value of a node whose children are all constants."""
    op = node.op
    if isinstance(op, Leaf):
        return op if op.kind in ("num", "bool") else None

    def const(class_id) -> Optional[Leaf]:
        return egraph[class_id].data.constant

    if op == "+":
        a, b = (const(c) for c in node.children)
        if a is None or b is None or a.kind != "num" or b.kind != "num":
            return None
        return num(check_folded(a.value + b.value))
    if op == "=":
        a, b = (const(c) for c in node.children)
        if a is None or b is None:
            return None
        return boolean(a == b)
    return None


class LamAnalysis(Analysis):
    def make(self, egraph, node):
        find = egraph.find
        op = node.op
        if isinstance(op, Leaf):
            return LamData(frozenset(), op if op.kind in ("num", "bool") else None)

        def free_of(class_id) -> frozenset:
            return frozenset(find(f) for f in egraph[class_id].data.free)

        if op == "var":
            free = frozenset({find(node.children[0])})
        elif op == "let":
            v, a, b = node.children
            free = (free_of(b) - {find(v)}) | free_of(a)
        elif op in ("lam", "fix"):
            v, b = node.children
            free = free_of(b) - {find(v)}
        else:
            free = frozenset()
            for child in node.children:
                free |= free_of(child)
        return LamData(free, eval_node(egraph, node))

    def join(self, into, other):
        free = into.free | other.free
        try:
            constant, _ = join_optional_constant(into.constant, other.constant)
        except AnalysisContradiction as exc:
            raise AnalysisContradiction(f"lambda constants disagree: {exc}") from None
        joined = LamData(free, constant)
        return joined, joined != into

    def modify(self, egraph, class_id):
        constant = egraph[class_id].data.constant
        if constant is not None:
            egraph.merge(class_id, egraph.add_leaf(constant))

    def canonical_data(self, egraph, class_id, data):
        free = frozenset(egraph.find(f) for f in data.free)
        return data if free == data.free else LamData(free, data.constant)

    def show(self, data):
        if data is None:
            return "none"
        free = ",".join(str(f) for f in sorted(data.free))
        const = "-" if data.constant is None else str(data.constant.value)
        return f"free={{{free}}} const={const}"


def make_egraph(rebuild_after_merge=False) -> EGraph:
    return EGraph(LamAnalysis(), rebuild_after_merge=rebuild_after_merge)


class ApplyWhenInstantiationsEqual(Applier):
    """Fires only once two instantiated probe terms land in the same class.

    The probes are added to the graph (appliers run in the write phase, so
    mutation is fine); later iterations evaluate them, and when the graph
    can prove them equal the inner pattern is unified with the match.
    Probing by lookup alone would never fire: nothing else builds these
    terms.
    """

    def __init__(self, p1: str, p2: str, inner: str):
        self.p1 = parse_pattern(p1, LAMBDA)
        self.p2 = parse_pattern(p2, LAMBDA)
        self.inner = PatternApplier(parse_pattern(inner, LAMBDA))

    def apply_one(self, egraph, eclass, subst):
        a = apply_subst(self.p1, subst, egraph)
        b = apply_subst(self.p2, subst, egraph)
        if egraph.find(a) != egraph.find(b):
            return []
        return self.inner.apply_one(egraph, eclass, subst)

    def pattern_vars(self):
        seen = dict.fromkeys(
            self.p1.vars() + self.p2.vars() + self.inner.pattern_vars()
        )
        return tuple(seen)


class CaptureAvoidingSubst(Applier):
    """Dynamic right-hand side for pushing a `let` under a differently
    named `lam`.  When the lambda's binder is free in the substituted
    expression, the binder is first renamed to a fresh symbol (named after
    the matched class id, so deterministic); otherwise the plain pattern
    applies."""

    def __init__(self, fresh: str, v2: str, e: str, if_not_free: str, if_free: str):
        self.fresh = fresh
        self.v2 = v2
        self.e = e
        self.if_not_free = parse_pattern(if_not_free, LAMBDA)
        self.if_free = parse_pattern(if_free, LAMBDA)

    def apply_one(self, egraph, eclass, subst):
        find = egraph.find
        v2 = find(subst[self.v2])
        e_free = egraph[subst[self.e]].data.free
        if any(find(f) == v2 for f in e_free):
            fresh_id = egraph.add_leaf(sym(f"_{eclass}"))
            extended = dict(subst)
            extended[self.fresh] = fresh_id
            return PatternApplier(self.if_free).apply_one(egraph, eclass, extended)
        return PatternApplier(self.if_not_free).apply_one(egraph, eclass, subst)

    def pattern_vars(self):
        needed = set(self.if_not_free.vars()) | set(self.if_free.vars())
        return tuple(needed - {self.fresh})

    def fresh_vars(self):
        return (self.fresh,)


def lambda_rules() -> list[Rewrite]:
    def rw(name, lhs, rhs, *conditions):
        return Rewrite.parse(name, lhs, rhs, LAMBDA, conditions)

    return [
        # open-term rules
        rw("if-true", "(if true ?then ?else)", "?then"),
        rw("if-false", "(if false ?then ?else)", "?else"),
        Rewrite(
            "if-elim",
            parse_pattern("(if (= (var ?x) ?e) ?then ?else)", LAMBDA),
            ApplyWhenInstantiationsEqual(
                "(let ?x ?e ?then)", "(let ?x ?e ?else)", "?else"
            ),
        ),
        rw("add-comm", "(+ ?a ?b)", "(+ ?b ?a)"),
        rw("add-assoc", "(+ (+ ?a ?b) ?c)", "(+ ?a (+ ?b ?c))"),
        rw("eq-comm", "(= ?a ?b)", "(= ?b ?a)"),
        # substitution introduction
        rw("fix", "(fix ?v ?e)", "(let ?v (fix ?v ?e) ?e)"),
        rw("beta", "(app (lam ?v ?body) ?e)", "(let ?v ?e ?body)"),
        # substitution propagation
        rw("let-app", "(let ?v ?e (app ?a ?b))", "(app (let ?v ?e ?a) (let ?v ?e ?b))"),
        rw("let-add", "(let ?v ?e (+ ?a ?b))", "(+ (let ?v ?e ?a) (let ?v ?e ?b))"),
        rw("let-eq", "(let ?v ?e (= ?a ?b))", "(= (let ?v ?e ?a) (let ?v ?e ?b))"),
        rw(
            "let-if",
            "(let ?v ?e (if ?cond ?then ?else))",
            "(if (let ?v ?e ?cond) (let ?v ?e ?then) (let ?v ?e ?else))",
        ),
        # substitution elimination
        rw("let-const", "(let ?v ?e ?c)", "?c", is_const("?c")),
        rw("let-var-same", "(let ?v1 ?e (var ?v1))", "?e"),
        rw(
            "let-var-diff",
            "(let ?v1 ?e (var ?v2))",
            "(var ?v2)",
            is_not_same_var("?v1", "?v2"),
        ),
        rw("let-lam-same", "(let ?v1 ?e (lam ?v1 ?body))", "(lam ?v1 ?body)"),
        Rewrite(
            "let-lam-diff",
            parse_pattern("(let ?v1 ?e (lam ?v2 ?body))", LAMBDA),
            ConditionalApplier(
                is_not_same_var("?v1", "?v2"),
                CaptureAvoidingSubst(
                    fresh="?fresh",
                    v2="?v2",
                    e="?e",
                    if_not_free="(lam ?v2 (let ?v1 ?e ?body))",
                    if_free="(lam ?fresh (let ?v1 ?e (let ?v2 (var ?fresh) ?body)))",
                ),
            ),
        ),
    ]


class ClosedTermError(Exception):
    pass


@dataclass
class Closure:
    param: str
    body: Term
    env: dict


def eval_closed(term: Term, fuel: int = 10_000):
    """Reference big-step evaluator for closed terms, independent of the
    e-graph.  Returns a Python int/bool or a Closure."""

    def ev(t: Term, env: dict, fuel: int):
        if fuel <= 0:
            raise ClosedTermError("evaluation fuel exhausted")
        op = t.root_op
        if isinstance(op, Leaf):
            if op.kind in ("num", "bool"):
                return op.value
            raise ClosedTermError(f"bare symbol {op.value!r} is not a value")
        kids = t.children()
        if op == "var":
            name = kids[0].root_op.value
            if name not in env:
                raise ClosedTermError(f"unbound variable {name!r}")
            value = env[name]
            # a fix binding is a thunk: unfold it on use
            if isinstance(value, tuple) and value and value[0] == "fix":
                return ev(value[1], value[2], fuel - 1)
            return value
        if op == "+":
            return ev(kids[0], env, fuel - 1) + ev(kids[1], env, fuel - 1)
        if op == "=":
            left = ev(kids[0], env, fuel - 1)
            right = ev(kids[1], env, fuel - 1)
            # booleans never equal numbers, though Python says 1 == True
            if isinstance(left, bool) != isinstance(right, bool):
                return False
            return left == right
        if op == "if":
            cond = ev(kids[0], env, fuel - 1)
            return ev(kids[1] if cond else kids[2], env, fuel - 1)
        if op == "lam":
            return Closure(kids[0].root_op.value, kids[1], dict(env))
        if op == "let":
            name = kids[0].root_op.value
            bound = ev(kids[1], env, fuel - 1)
            return ev(kids[2], {**env, name: bound}, fuel - 1)
        if op == "app":
            fn = ev(kids[0], env, fuel - 1)
            if not isinstance(fn, Closure):
                raise ClosedTermError("applying a non-function")
            arg = ev(kids[1], env, fuel - 1)
            return ev(fn.body, {**fn.env, fn.param: arg}, fuel - 1)
        if op == "fix":
            name = kids[0].root_op.value
            return ev(kids[1], {**env, name: ("fix", t, env)}, fuel - 1)
        raise ClosedTermError(f"no evaluation for operator {op!r}")

    return ev(term, {}, fuel)
