"""Command-line interface for wforge."""

import functools
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional

import click

from .analyzers import StructureAnalyzer, WardedAnalyzer
from .chase import DEFAULT_STEP_BOUND, VARIANTS, DatabaseVerdict, Verdict, chase, equivalent, load_edb
from .exceptions import WforgeError
from .functions.dialect import parse_file, write_program
from .generator import Scenario, emit_edb, generate, random_database
from .hutree import DEFAULT_NODE_BUDGET
from .manager import NormalizationManager
from .rulespec import Program

DEFAULT_DATABASES = 10


def _color() -> bool:
    return os.environ.get("WFORGE_COLOR", "1") != "0"


def _styled(text: str, **style) -> str:
    return click.style(text, **style) if _color() else text


def _domain_errors(command):
    """Report WforgeError on stderr and exit with status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except WforgeError as e:
            click.echo(_styled(str(e), fg="red"), err=True)
            sys.exit(1)

    return wrapper


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    return path


def _analysis(program: Program) -> Dict[str, Any]:
    report = WardedAnalyzer(program).analyze()
    counts = StructureAnalyzer(program).analyze()
    return {
        "rules": len(program.rules),
        "harmless": report.is_harmless,
        **report.to_dict(),
        "structure": counts.to_dict(),
    }


def _databases(program: Program, seed: int, count: int) -> List[Dict]:
    return [random_database(program, seed, number) for number in range(count)]


def _verdict_table(verdicts: List[DatabaseVerdict]) -> str:
    lines = [f"{'database':<10}{'verdict':<14}{'facts':<12}witness"]
    for v in verdicts:
        lines.append(f"{v.database:<10}{v.verdict.value:<14}{f'{v.facts[0]}/{v.facts[1]}':<12}{v.witness or '-'}")
    return "\n".join(lines) + "\n"


def _echo_verdicts(verdicts: List[DatabaseVerdict]) -> None:
    colors = {Verdict.EQUAL: "green", Verdict.NOT_EQUAL: "red", Verdict.INCONCLUSIVE: "yellow"}
    for line, verdict in zip(_verdict_table(verdicts).splitlines()[1:], verdicts):
        click.echo(_styled(line, fg=colors[verdict.verdict]))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log debug output to stderr")
def cli(verbose: bool):
    """Generate, analyze and normalize Warded Datalog+/- programs."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command("generate")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Scenario TOML file")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--seed", type=int, help="Override the scenario seed")
@_domain_errors
def generate_command(scenario_path: str, out_dir: str, seed: Optional[int]):
    """Generate a program, its CSV data and a generation report."""
    scenario = Scenario.load(scenario_path)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    out = Path(out_dir)
    program, report = generate(scenario)
    write_program(program, out / "program.vada")
    emit_edb(program, scenario, out / "data", report)
    _write_json(out / "report.json", report.to_dict())
    click.echo(f"Generated {len(program.rules)} rules in {out / 'program.vada'}")


@cli.command("analyze")
@click.argument("program_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "json_output", is_flag=True, help="Output the full report as JSON")
@click.option("--markdown", is_flag=True, help="Output the report as Markdown")
@_domain_errors
def analyze_command(program_path: str, json_output: bool, markdown: bool):
    """Report affected positions, wardedness and harmful joins."""
    program = parse_file(program_path)
    if json_output:
        click.echo(json.dumps(_analysis(program), indent=2))
        return
    report = WardedAnalyzer(program).analyze()
    if markdown:
        click.echo(report.to_markdown())
        return
    click.echo(f"Rules: {len(program.rules)}")
    click.echo(f"Warded: {_styled('yes', fg='green') if report.warded else _styled('no', fg='red')}")
    click.echo(f"Harmful joins: {len(report.harmful_joins)}")
    for violation in report.violations:
        click.echo(f"  - {violation}")
    for distance in report.distances:
        click.echo(f"  {distance.rule_id}: s={distance.s} mdh={distance.mdh}")


@cli.command("normalize")
@click.argument("program_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Normalized program file")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="Write the HU-tree trace as JSON")
@click.option("--no-folding", is_flag=True, help="Disable folding while building HU-trees")
@click.option("--budget", type=int, default=DEFAULT_NODE_BUDGET, show_default=True, help="Node budget per HU-tree")
@click.option("--workers", type=int, help="Threads used to build HU-trees")
@_domain_errors
def normalize_command(
    program_path: str, out_path: str, trace_path: Optional[str], no_folding: bool, budget: int, workers: Optional[int]
):
    """Rewrite a warded program into an equivalent Harmless one."""
    program = parse_file(program_path)
    manager = NormalizationManager(folding=not no_folding, budget=budget, workers=workers)
    normalized, trace = manager.normalize(program)
    write_program(normalized, out_path)
    if trace_path:
        trace.save(trace_path)
    click.echo(
        f"Normalized {len(program.rules)} -> {len(normalized.rules)} rules "
        f"({trace.num_nodes} nodes, {trace.num_folds} fold checks)"
    )


@cli.command("chase")
@click.argument("program_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory with one CSV per input predicate")
@click.option("--step-bound", type=int, default=DEFAULT_STEP_BOUND, show_default=True)
@click.option("--variant", type=click.Choice(VARIANTS), default=VARIANTS[0], show_default=True)
@click.option("--all", "all_facts", is_flag=True, help="Print every fact, not only output predicates")
@_domain_errors
def chase_command(program_path: str, data_dir: str, step_bound: int, variant: str, all_facts: bool):
    """Chase a program over CSV data and print the resulting facts."""
    program = parse_file(program_path)
    instance, completed = chase(program, load_edb(program, data_dir), step_bound, variant)
    facts = instance.facts() if all_facts else instance.restrict(program.outputs)
    for fact in facts:
        click.echo(str(fact))
    if not completed:
        click.echo(_styled(f"Chase stopped after {step_bound} steps", fg="yellow"), err=True)


@cli.command("verify")
@click.argument("first_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("second_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--databases", type=click.IntRange(min=1), default=DEFAULT_DATABASES, show_default=True,
              help="Number of random databases")
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              help="Compare on this CSV directory instead of random databases")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step-bound", type=int, default=DEFAULT_STEP_BOUND, show_default=True)
@click.option("--variant", type=click.Choice(VARIANTS), default=VARIANTS[0], show_default=True)
@click.option("--workers", type=int, help="Threads used to compare databases")
@_domain_errors
def verify_command(
    first_path: str,
    second_path: str,
    databases: int,
    data_dir: Optional[str],
    seed: int,
    step_bound: int,
    variant: str,
    workers: Optional[int],
):
    """Check that two programs agree on their output predicates."""
    first, second = parse_file(first_path), parse_file(second_path)
    if data_dir:
        loaded = load_edb(first, data_dir)
        samples = [{p: [tuple(str(a) for a in f.args) for f in loaded.facts(p)] for p in first.inputs}]
    else:
        samples = _databases(first, seed, databases)
    verdicts = equivalent(first, second, samples, step_bound, variant, workers)
    click.echo(_verdict_table(verdicts).splitlines()[0])
    _echo_verdicts(verdicts)
    if any(v.verdict == Verdict.NOT_EQUAL for v in verdicts):
        sys.exit(1)


@cli.command("pipeline")
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, help="Override the scenario seed")
@click.option("--databases", type=click.IntRange(min=1), default=DEFAULT_DATABASES, show_default=True)
@click.option("--step-bound", type=int, default=DEFAULT_STEP_BOUND, show_default=True)
@click.option("--variant", type=click.Choice(VARIANTS), default=VARIANTS[0], show_default=True)
@click.option("--trace/--no-trace", default=True, help="Write the HU-tree trace")
@_domain_errors
def pipeline_command(
    scenario_path: str,
    out_dir: str,
    seed: Optional[int],
    databases: int,
    step_bound: int,
    variant: str,
    trace: bool,
):
    """Generate, analyze, normalize, re-analyze and verify one scenario."""
    scenario = Scenario.load(scenario_path)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    out = Path(out_dir)

    program, report = generate(scenario)
    write_program(program, out / "program.vada")
    emit_edb(program, scenario, out / "data", report)
    _write_json(out / "report.json", report.to_dict())

    before = _analysis(program)
    normalized, normalization = NormalizationManager().normalize(program)
    write_program(normalized, out / "normalized.vada")
    if trace:
        normalization.save(out / "trace.json")
    after = _analysis(normalized)
    _write_json(out / "analysis.json", {"input": before, "normalized": after})

    verdicts = equivalent(program, normalized, _databases(program, scenario.seed, databases), step_bound, variant)
    with open(out / "verify.txt", "w") as f:
        f.write(_verdict_table(verdicts))

    tally = Counter(v.verdict.value for v in verdicts)
    counters = {
        "rules": len(program.rules),
        "normalized_rules": len(normalized.rules),
        "harmful_joins_before": len(before["harmful_joins"]),
        "harmful_joins_after": len(after["harmful_joins"]),
        "warded_after": after["warded"],
        "mdh": {d["rule"]: d["mdh"] for d in before["distances"]},
        "num_nodes": normalization.num_nodes,
        "num_folds": normalization.num_folds,
        "rounds": normalization.rounds,
        "verdicts": {verdict.value: tally.get(verdict.value, 0) for verdict in Verdict},
    }
    _write_json(out / "counters.json", counters)

    passed = (
        after["warded"]
        and counters["harmful_joins_after"] == 0
        and all(v.verdict == Verdict.EQUAL for v in verdicts)
    )
    summary = [
        f"scenario seed: {scenario.seed}",
        f"rules: {counters['rules']} -> {counters['normalized_rules']}",
        f"harmful joins: {counters['harmful_joins_before']} -> {counters['harmful_joins_after']}",
        f"warded after normalization: {'yes' if after['warded'] else 'no'}",
        *[f"mdh {rule}: {value}" for rule, value in counters["mdh"].items()],
        f"nodes: {normalization.num_nodes}, fold checks: {normalization.num_folds}",
        "verdicts: " + ", ".join(f"{name}={count}" for name, count in counters["verdicts"].items()),
        f"result: {'PASS' if passed else 'FAIL'}",
    ]
    with open(out / "summary.txt", "w") as f:
        f.write("\n".join(summary) + "\n")

    for line in summary[:-1]:
        click.echo(line)
    click.echo(_styled(summary[-1], fg="green" if passed else "red", bold=True))
    if not passed:
        sys.exit(1)


if __name__ == "__main__":
    cli()
