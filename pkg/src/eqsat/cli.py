"""Command-line front end: simplify terms, check equivalences, run benches.

Exit codes: 0 success / proved equal, 1 equivalence unknown, 2 parse error,
3 analysis contradiction.
"""
from __future__ import annotations

import json
import sys

import click

from . import bench as bench_module
from .extraction import Extractor, ast_depth, ast_size
from .language import ParseError, parse_term
from .runner import (
    RunnerConfig,
    StopReason,
    check_equiv,
    check_equiv_batched,
    run,
)
from .rewrite import parse_rules
from .domains import lam as lambda_domain
from .domains import math as math_domain

COSTS = {"ast-size": ast_size, "ast-depth": ast_depth}


def _load_setup(rules_name, lang_name, unsafe_math):
    """Resolve --rules/--lang into (language, rules, egraph factory)."""
    if rules_name == "math":
        return math_domain.MATH, math_domain.math_rules(unsafe_math), math_domain.make_egraph
    if rules_name == "lambda":
        return lambda_domain.LAMBDA, lambda_domain.lambda_rules(), lambda_domain.make_egraph
    if lang_name == "lambda":
        lang, factory = lambda_domain.LAMBDA, lambda_domain.make_egraph
    else:
        lang, factory = math_domain.MATH, math_domain.make_egraph
    with open(rules_name, "r", encoding="utf-8") as handle:
        rules = parse_rules(handle.read(), lang)
    return lang, rules, factory


def _config(iters, nodes, time_ms, scheduler):
    return RunnerConfig(
        iter_limit=iters,
        node_limit=nodes,
        time_limit=time_ms / 1000.0,
        scheduler=scheduler,
    )


def common_options(fn):
    fn = click.option(
        "--rules", "rules_name", default="math", show_default=True,
        help="Rule set name (math|lambda) or a rules file path.",
    )(fn)
    fn = click.option(
        "--lang", "lang_name", default="math", show_default=True,
        type=click.Choice(["math", "lambda"]),
        help="Language for terms when --rules is a file.",
    )(fn)
    fn = click.option("--iters", default=30, show_default=True, help="Iteration limit.")(fn)
    fn = click.option("--nodes", default=10_000, show_default=True, help="E-node limit.")(fn)
    fn = click.option(
        "--time-ms", default=5000, show_default=True, help="Time limit in milliseconds."
    )(fn)
    fn = click.option(
        "--scheduler", default="backoff", show_default=True,
        type=click.Choice(["every", "backoff"]),
    )(fn)
    fn = click.option(
        "--unsafe-math", is_flag=True,
        help="Allow x/x -> 1 without a nonzero-constant guard.",
    )(fn)
    return fn


@click.group()
def main():
    """E-graph based term simplifier and equivalence checker."""


@main.command()
@click.argument("expr")
@common_options
@click.option(
    "--cost", default="ast-size", show_default=True,
    type=click.Choice(sorted(COSTS)),
)
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON report.")
def simplify(expr, rules_name, lang_name, iters, nodes, time_ms, scheduler,
             unsafe_math, cost, as_json):
    """Saturate EXPR with the selected rules and print the cheapest form."""
    lang, rules, factory = _load_setup(rules_name, lang_name, unsafe_math)
    try:
        term = parse_term(expr, lang)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    report = run(factory(), [term], rules, _config(iters, nodes, time_ms, scheduler))
    if report.stop_reason is StopReason.ANALYSIS_CONTRADICTION:
        click.echo(f"analysis contradiction: {report.message}", err=True)
        sys.exit(3)
    best, best_cost = Extractor(report.egraph, COSTS[cost]).best(report.root_ids[0])
    if as_json:
        click.echo(json.dumps(
            {
                "schema": 1,
                "stop_reason": report.stop_reason.value,
                "iterations": [it.to_dict() for it in report.iterations],
                "best": {"term": str(best), "cost": str(best_cost)},
            },
            sort_keys=True,
        ))
    else:
        click.echo(str(best))
        click.echo(f"cost: {best_cost}")


@main.command("check-equiv")
@click.argument("lhs", required=False)
@click.argument("rhs", required=False)
@common_options
@click.option("--pairs", "pairs_file", type=click.Path(exists=True),
              help="File of pairs, two s-expressions per line.")
@click.option("--batched", is_flag=True,
              help="Share one e-graph across all pairs from --pairs.")
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON report.")
def check_equiv_cmd(lhs, rhs, rules_name, lang_name, iters, nodes, time_ms,
                    scheduler, unsafe_math, pairs_file, batched, as_json):
    """Check whether LHS and RHS are provably equal under the rules.

    Prints `equal` or `unknown`; saturation cannot disprove, so there is no
    `unequal` verdict.
    """
    lang, rules, factory = _load_setup(rules_name, lang_name, unsafe_math)
    config = _config(iters, nodes, time_ms, scheduler)

    def parse_or_die(text):
        try:
            return parse_term(text, lang)
        except ParseError as exc:
            click.echo(f"parse error: {exc}", err=True)
            sys.exit(2)

    if pairs_file:
        pairs = []
        with open(pairs_file, "r", encoding="utf-8") as handle:
            for raw in handle:
                line = raw.split("#", 1)[0].strip()
                if line:
                    pairs.append(read_pair(line, lang))
        if batched:
            verdicts, report = check_equiv_batched(
                factory(), pairs, rules, config
            )
            iterations = [len(report.iterations)] * len(pairs)
        else:
            verdicts, iterations = [], []
            for a, b in pairs:
                result = check_equiv(factory(), a, b, rules, config)
                verdicts.append(result.equal)
                iterations.append(result.iterations)
        results = [
            {"equal": bool(v), "iterations": n}
            for v, n in zip(verdicts, iterations)
        ]
        if as_json:
            click.echo(json.dumps({"schema": 1, "results": results}, sort_keys=True))
        else:
            for (a, b), entry in zip(pairs, results):
                verdict = "equal" if entry["equal"] else "unknown"
                click.echo(f"{verdict}\t{a}\t{b}")
        sys.exit(0 if all(v["equal"] for v in results) else 1)

    if lhs is None or rhs is None:
        click.echo("provide LHS and RHS, or --pairs FILE", err=True)
        sys.exit(2)
    result = check_equiv(factory(), parse_or_die(lhs), parse_or_die(rhs), rules, config)
    if as_json:
        click.echo(json.dumps(
            {
                "schema": 1,
                "results": [{"equal": result.equal, "iterations": result.iterations}],
            },
            sort_keys=True,
        ))
    else:
        verdict = "equal" if result.equal else "unknown"
        click.echo(f"{verdict} (iterations: {result.iterations})")
    sys.exit(0 if result.equal else 1)


def read_pair(line: str, lang):
    """Split one line holding exactly two s-expressions."""
    from .language import tokenize

    tokens = tokenize(line)
    depth = 0
    for i, (tok, pos) in enumerate(tokens):
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth -= 1
        if depth == 0:
            split = tokens[i + 1][1] if i + 1 < len(tokens) else len(line)
            return parse_term(line[:split], lang), parse_term(line[split:], lang)
    raise ParseError("expected two terms on the line", 0)


@main.command("bench")
@click.option("--out", "csv_path", type=click.Path(), default=None,
              help="Write the per-run CSV here.")
@click.option("--json-lines", "jsonl_path", type=click.Path(), default=None,
              help="Write JSON-lines records here.")
@click.option("--repeats", default=5, show_default=True)
def bench_cmd(csv_path, jsonl_path, repeats):
    """Compare immediate vs deferred invariant maintenance on the built-in
    workload suite and report the congruence speedup."""
    records = bench_module.run_bench(repeats=repeats)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as handle:
            bench_module.write_csv(records, handle)
    if jsonl_path:
        with open(jsonl_path, "w", encoding="utf-8") as handle:
            handle.write(bench_module.records_to_jsonl(records))
    summary = bench_module.speedup_report(records)
    click.echo(f"{'workload':<24}{'speedup':>10}")
    for name, speedup in summary["speedups"].items():
        click.echo(f"{name:<24}{speedup:>10.2f}")
    click.echo(f"geometric mean speedup: {summary['geometric_mean_speedup']:.2f}")
    if summary["repair_time_spearman"] is not None:
        click.echo(
            f"repairs vs congruence-time spearman: "
            f"{summary['repair_time_spearman']:.3f}"
        )


if __name__ == "__main__":
    main()
