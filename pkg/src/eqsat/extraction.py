"""Select an optimal represented term per class under a local cost function.

A cost function maps (node, child costs) to a cost; locality is what lets a
bottom-up fixpoint find the per-class minimum.  The same computation can be
maintained incrementally as an e-class analysis whose join keeps the
cheaper (node, cost) tuple.
"""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

from .analysis import Analysis
from .egraph import EGraph, ENode, enode_sort_key
from .language import Leaf, Term


def _finite(cost) -> bool:
    return not (isinstance(cost, float) and not math.isfinite(cost))

CostFunction = Callable[[ENode, Sequence], object]


def ast_size(node: ENode, child_costs: Sequence) -> int:
    return 1 + sum(child_costs)


def ast_depth(node: ENode, child_costs: Sequence) -> int:
    return 1 + max(child_costs, default=0)


def weighted_ast_size(weights: dict, default=1) -> CostFunction:
    """AST size with per-operator weights."""

    def cost(node, child_costs):
        return weights.get(node.op, default) + sum(child_costs)

    return cost


class ExtractionError(Exception):
    pass


def build_cost_table(egraph: EGraph, cost_fn: CostFunction = ast_size) -> dict:
    """Fixpoint over all classes: per canonical class the (cost, node) pair
    of its cheapest e-node.  Repeated sweeps until nothing improves; ties
    break on the node's structural sort key so the table is deterministic."""
    assert egraph.clean, "extraction requires a clean graph"
    table: dict[int, tuple] = {}
    changed = True
    while changed:
        changed = False
        for class_id, eclass in egraph.classes.items():
            best = table.get(class_id)
            for node in eclass.nodes:
                kids = []
                for child in node.children:
                    entry = table.get(child)
                    if entry is None:
                        break
                    kids.append(entry[0])
                else:
                    cost = cost_fn(node, kids)
                    if not _finite(cost):
                        continue
                    candidate = (cost, enode_sort_key(node), node)
                    if best is None or candidate[:2] < best[:2]:
                        best = candidate
                        table[class_id] = candidate
                        changed = True
    return {cid: (cost, node) for cid, (cost, _, node) in table.items()}


def _term_key(term: Term):
    keys = []
    for op, kids in term.nodes:
        if isinstance(op, Leaf):
            value = int(op.value) if op.kind == "bool" else op.value
            keys.append((1, op.kind, value, ()))
        else:
            keys.append((0, op, 0, tuple(keys[k] for k in kids)))
    return keys[-1]


class Extractor:
    """Cost table plus a canonical minimal term per class.

    Among the nodes achieving a class's minimum cost, the extracted term is
    the structurally least one; being id-free, two graphs with the same
    partition extract the same terms.
    """

    def __init__(self, egraph: EGraph, cost_fn: CostFunction = ast_size):
        self.egraph = egraph
        self.cost_fn = cost_fn
        self.table = build_cost_table(egraph, cost_fn)
        self.costs = {cid: entry[0] for cid, entry in self.table.items()}
        self.terms: dict[int, Term] = {}
        self._assign_terms()

    def _assign_terms(self) -> None:
        costs = self.costs
        candidates: dict[int, list[ENode]] = {}
        for class_id, eclass in self.egraph.classes.items():
            if class_id not in costs:
                continue
            nodes = []
            for node in eclass.nodes:
                kids = [costs[c] for c in node.children if c in costs]
                if len(kids) == len(node.children):
                    if self.cost_fn(node, kids) == costs[class_id]:
                        nodes.append(node)
            candidates[class_id] = nodes

        terms, keys = self.terms, {}
        progress = True
        while progress:
            progress = False
            for class_id, nodes in candidates.items():
                if class_id in terms:
                    continue
                best = None
                for node in nodes:
                    if all(c in terms for c in node.children):
                        if isinstance(node.op, Leaf):
                            term = Term.leaf(node.op)
                        else:
                            term = Term.apply(
                                node.op, *(terms[c] for c in node.children)
                            )
                        key = _term_key(term)
                        if best is None or key < best[0]:
                            best = (key, term)
                if best is not None:
                    keys[class_id], terms[class_id] = best
                    progress = True

    def best(self, root: int) -> tuple[Term, object]:
        root = self.egraph.find(root)
        if root not in self.costs:
            raise ExtractionError(f"class {root} represents no finite-cost term")
        if root not in self.terms:
            raise ExtractionError(f"no acyclic minimal term for class {root}")
        return self.terms[root], self.costs[root]


def extract_best(
    egraph: EGraph, root: int, cost_fn: CostFunction = ast_size
) -> tuple[Term, object]:
    """Minimum-cost represented term of the root class, with its cost."""
    return Extractor(egraph, cost_fn).best(root)


class MinCostExtraction(Analysis):
    """Extraction as an e-class analysis: data is the (cost, node) tuple of
    the cheapest known e-node; join keeps the lower cost."""

    def __init__(self, cost_fn: CostFunction = ast_size):
        self.cost_fn = cost_fn

    def entry_for(self, node: ENode, child_entries: Sequence[tuple]):
        cost = self.cost_fn(node, [entry[0] for entry in child_entries])
        return (cost, node)

    def make(self, egraph, node):
        return self.entry_for(node, [egraph[c].data for c in node.children])

    def join(self, into, other):
        if into is None:
            return other, other is not None
        if other is None:
            return into, False
        into_key = (into[0], enode_sort_key(into[1]))
        other_key = (other[0], enode_sort_key(other[1]))
        return (other, True) if other_key < into_key else (into, False)

    def canonical_data(self, egraph, class_id, data):
        """The stored witness node can hold merged-away child ids; re-pick
        the least node among those achieving the converged cost."""
        if data is None:
            return None
        cost = data[0]
        best = None
        for node in egraph.classes[class_id].nodes:
            kids = []
            for child in node.children:
                entry = egraph.classes.get(egraph.find(child))
                if entry is None or entry.data is None:
                    break
                kids.append(entry.data[0])
            else:
                if self.cost_fn(node, kids) == cost:
                    key = enode_sort_key(node)
                    if best is None or key < best[0]:
                        best = (key, node)
        return data if best is None else (cost, best[1])

    def show(self, data):
        return "none" if data is None else f"cost={data[0]}"


def extract_as_analysis(egraph: EGraph, cost_fn: CostFunction = ast_size) -> dict:
    """Per-class (cost, node) table computed through the analysis hooks
    (entry construction plus semilattice join) instead of the sweep in
    build_cost_table; the two must agree."""
    assert egraph.clean
    analysis = MinCostExtraction(cost_fn)
    entries: dict[int, Optional[tuple]] = {cid: None for cid in egraph.classes}
    changed = True
    while changed:
        changed = False
        for class_id, eclass in egraph.classes.items():
            for node in eclass.nodes:
                kids = [entries[c] for c in node.children]
                if any(k is None for k in kids):
                    continue
                candidate = analysis.entry_for(node, kids)
                if not _finite(candidate[0]):
                    continue
                joined, did_change = analysis.join(entries[class_id], candidate)
                if did_change:
                    entries[class_id] = joined
                    changed = True
    return {cid: entry for cid, entry in entries.items() if entry is not None}
