"""The phase-split equality saturation loop.

Each iteration searches every (unbanned) rule against a clean graph,
collects all matches, applies them in a write phase that may temporarily
break invariants, and restores the invariants with a single rebuild.
Splitting the phases makes the result invariant to rule order and lets the
rebuild be deferred safely.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

from .analysis import AnalysisError
from .egraph import EGraph
from .language import Term
from .rewrite import Rewrite, apply_rewrite


class StopReason(Enum):
    SATURATED = "saturated"
    ITER_LIMIT = "iter_limit"
    NODE_LIMIT = "node_limit"
    TIME_LIMIT = "time_limit"
    HOOK_STOP = "hook_stop"
    ANALYSIS_CONTRADICTION = "analysis_contradiction"


class Scheduler:
    """Decides which rules search and whether their matches get applied."""

    def banned(self, iteration: int, rewrite: Rewrite) -> bool:
        return False

    def filter_matches(self, iteration: int, rewrite: Rewrite, matches):
        """Returns (matches, banned_now)."""
        return matches, False


class EveryRuleScheduler(Scheduler):
    """Search and apply every rule, every iteration."""


@dataclass
class RuleBackoff:
    match_limit: int
    times_banned: int = 0
    banned_until: int = -1


class BackoffScheduler(Scheduler):
    """Temporarily bans rules whose match counts outgrow an exponentially
    increasing threshold, keeping expansive rules from dominating."""

    def __init__(self, match_limit: int = 1000, ban_length: int = 5):
        self.match_limit = match_limit
        self.ban_length = ban_length
        self.state: dict[str, RuleBackoff] = {}

    def _state(self, rewrite: Rewrite) -> RuleBackoff:
        return self.state.setdefault(rewrite.name, RuleBackoff(self.match_limit))

    def banned(self, iteration, rewrite):
        return iteration <= self._state(rewrite).banned_until

    def filter_matches(self, iteration, rewrite, matches):
        state = self._state(rewrite)
        total = sum(len(m.substs) for m in matches)
        if total > state.match_limit:
            state.banned_until = iteration + self.ban_length * 2**state.times_banned
            state.times_banned += 1
            state.match_limit *= 2
            return [], True
        return matches, False


def make_scheduler(kind) -> Scheduler:
    if isinstance(kind, Scheduler):
        return kind
    if kind == "every":
        return EveryRuleScheduler()
    if kind == "backoff":
        return BackoffScheduler()
    raise ValueError(f"unknown scheduler {kind!r}")


@dataclass
class RunnerConfig:
    iter_limit: int = 30
    node_limit: int = 10_000
    time_limit: float = 5.0
    scheduler: object = "backoff"
    hooks: tuple = ()

    def __post_init__(self):
        if self.iter_limit <= 0 or self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("runner limits must be strictly positive")


class RuleStats:
    __slots__ = ("searched", "applied", "banned")

    def __init__(self, searched=0, applied=0, banned=False):
        self.searched = searched
        self.applied = applied
        self.banned = banned

    def to_dict(self):
        return {
            "searched": self.searched,
            "applied": self.applied,
            "banned": self.banned,
        }


@dataclass
class IterationReport:
    index: int
    rules: dict[str, RuleStats]
    enodes: int
    eclasses: int
    search_time: float
    apply_time: float
    rebuild_time: float
    repair_calls: int
    stop_reason: Optional[StopReason] = None

    def to_dict(self):
        return {
            "index": self.index,
            "rules": {name: st.to_dict() for name, st in sorted(self.rules.items())},
            "enodes": self.enodes,
            "eclasses": self.eclasses,
            "search_time": self.search_time,
            "apply_time": self.apply_time,
            "rebuild_time": self.rebuild_time,
            "repair_calls": self.repair_calls,
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
        }


@dataclass
class RunReport:
    egraph: EGraph
    root_ids: list[int]
    iterations: list[IterationReport]
    stop_reason: StopReason
    message: str = ""

    @property
    def total_applied(self) -> int:
        return sum(
            st.applied for it in self.iterations for st in it.rules.values()
        )


@dataclass
class RunnerState:
    """What per-iteration hooks get to see.  A hook returning True stops
    the run."""

    egraph: EGraph
    root_ids: list[int]
    iteration: int


Hook = Callable[[RunnerState], bool]


def run(
    egraph: EGraph,
    roots: Sequence[Term],
    rules: Sequence[Rewrite],
    config: Optional[RunnerConfig] = None,
) -> RunReport:
    """Add the roots (batch simplification takes several) and saturate."""
    config = config or RunnerConfig()
    scheduler = make_scheduler(config.scheduler)
    start = time.perf_counter()

    try:
        root_ids = [egraph.add_term(t) for t in roots]
        egraph.rebuild()
    except AnalysisError as exc:
        return RunReport(egraph, [], [], StopReason.ANALYSIS_CONTRADICTION, str(exc))

    iterations: list[IterationReport] = []
    stop_reason = None
    message = ""

    while stop_reason is None:
        iteration = len(iterations)
        if iteration >= config.iter_limit:
            stop_reason = StopReason.ITER_LIMIT
            break
        if time.perf_counter() - start > config.time_limit:
            stop_reason = StopReason.TIME_LIMIT
            break
        if egraph.n_nodes() > config.node_limit:
            stop_reason = StopReason.NODE_LIMIT
            break
        state = RunnerState(egraph, root_ids, iteration)
        if any(hook(state) for hook in config.hooks):
            stop_reason = StopReason.HOOK_STOP
            break

        stats = {rw.name: RuleStats() for rw in rules}
        unions_before = egraph.union_count
        nodes_before = egraph.n_nodes()

        # read phase: collect matches for every rule before applying any
        search_start = time.perf_counter()
        collected = []
        for rw in rules:
            if scheduler.banned(iteration, rw):
                stats[rw.name].banned = True
                continue
            matches = rw.search(egraph)
            matches, banned_now = scheduler.filter_matches(iteration, rw, matches)
            stats[rw.name].banned = banned_now
            stats[rw.name].searched = sum(len(m.substs) for m in matches)
            if matches:
                collected.append((rw, matches))
        search_time = time.perf_counter() - search_start

        if time.perf_counter() - start > config.time_limit:
            iterations.append(
                IterationReport(
                    iteration, stats, egraph.n_nodes(), egraph.n_classes(),
                    search_time, 0.0, 0.0, 0,
                )
            )
            stop_reason = StopReason.TIME_LIMIT
            break

        # write phase, then one rebuild to restore the invariants
        repairs_before = egraph.repair_calls
        hit_node_limit = False
        apply_start = time.perf_counter()
        try:
            for rw, matches in collected:
                stats[rw.name].applied = apply_rewrite(egraph, rw, matches)
                if egraph.n_nodes() > config.node_limit:
                    hit_node_limit = True
                    break
            apply_time = time.perf_counter() - apply_start
            rebuild_start = time.perf_counter()
            egraph.rebuild()
            rebuild_time = time.perf_counter() - rebuild_start
        except AnalysisError as exc:
            stop_reason = StopReason.ANALYSIS_CONTRADICTION
            message = str(exc)
            apply_time = time.perf_counter() - apply_start
            rebuild_time = 0.0

        iterations.append(
            IterationReport(
                iteration,
                stats,
                egraph.n_nodes(),
                egraph.n_classes(),
                search_time,
                apply_time,
                rebuild_time,
                egraph.repair_calls - repairs_before,
            )
        )
        if stop_reason is not None:
            break
        if hit_node_limit:
            stop_reason = StopReason.NODE_LIMIT
        elif time.perf_counter() - start > config.time_limit:
            stop_reason = StopReason.TIME_LIMIT
        else:
            productive = (
                egraph.union_count > unions_before
                or egraph.n_nodes() > nodes_before
            )
            # saturation requires a fully unthrottled, unproductive pass:
            # a banned rule may still be holding matches back
            any_banned = any(st.banned for st in stats.values())
            if not productive and not any_banned:
                stop_reason = StopReason.SATURATED

    if iterations:
        iterations[-1].stop_reason = stop_reason
    return RunReport(egraph, root_ids, iterations, stop_reason, message)


@dataclass
class EquivResult:
    equal: bool
    iterations: int
    report: RunReport


def check_equiv(
    egraph: EGraph,
    lhs: Term,
    rhs: Term,
    rules: Sequence[Rewrite],
    config: Optional[RunnerConfig] = None,
) -> EquivResult:
    """Prove two terms equal by saturating with the rules and checking they
    land in one class.  Failure within limits is inconclusive, not a
    disproof."""
    config = config or RunnerConfig()

    def unified(state: RunnerState) -> bool:
        a, b = state.root_ids
        return state.egraph.find(a) == state.egraph.find(b)

    config = RunnerConfig(
        iter_limit=config.iter_limit,
        node_limit=config.node_limit,
        time_limit=config.time_limit,
        scheduler=config.scheduler,
        hooks=tuple(config.hooks) + (unified,),
    )
    report = run(egraph, [lhs, rhs], rules, config)
    if not report.root_ids:
        return EquivResult(False, len(report.iterations), report)
    a, b = report.root_ids
    return EquivResult(
        report.egraph.find(a) == report.egraph.find(b),
        len(report.iterations),
        report,
    )


def check_equiv_batched(
    egraph: EGraph,
    pairs: Sequence[tuple[Term, Term]],
    rules: Sequence[Rewrite],
    config: Optional[RunnerConfig] = None,
) -> tuple[list[bool], RunReport]:
    """Verify many pairs in one e-graph; structurally similar pairs share
    rewriting work.  Stops as soon as every pair is unified."""
    config = config or RunnerConfig()

    def all_unified(state: RunnerState) -> bool:
        ids = state.root_ids
        find = state.egraph.find
        return all(find(ids[i]) == find(ids[i + 1]) for i in range(0, len(ids), 2))

    batched = RunnerConfig(
        iter_limit=config.iter_limit,
        node_limit=config.node_limit,
        time_limit=config.time_limit,
        scheduler=config.scheduler,
        hooks=tuple(config.hooks) + (all_unified,),
    )
    roots = [t for pair in pairs for t in pair]
    report = run(egraph, roots, rules, batched)
    verdicts = []
    if report.root_ids:
        find = report.egraph.find
        ids = report.root_ids
        verdicts = [
            find(ids[i]) == find(ids[i + 1]) for i in range(0, len(ids), 2)
        ]
    return verdicts, report
