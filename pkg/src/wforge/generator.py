"""Scenario-driven generator of Warded Datalog+/- programs and their CSV data.

A scenario fixes how many rules of each structural kind the program has
and how they are spread over input-output sequences. Rules of a sequence
form a chain: each rule reads the head of the previous one, starting from
the sequence's input predicate.

Randomness comes from numpy ``SeedSequence`` streams keyed by purpose
(layout, one stream per sequence, CSV data, conditions, random databases),
so adding a sequence leaves the streams of the others untouched.
"""

import csv
import logging
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
import toml

from .compatibility import validate
from .exceptions import EdbError, GenerationStuck, IncompatibleScenario
from .rulespec import Atom, Bind, Condition, Constant, Program, Rule, Variable

logger = logging.getLogger(__name__)

LINEAR = "linear"
EXISTENTIAL = "existential"
HARMLESS_JOIN = "harmless_join"
HARMLESS_HARMFUL_JOIN = "harmless_harmful_join"
HARMFUL_HARMFUL_JOIN = "harmful_harmful_join"
DIRECT_RECURSION = "direct_recursion"
INDIRECT_OPEN = "indirect_open"
INDIRECT_CLOSE = "indirect_close"

CONDITION_OPERATORS = ("<", "<=", ">", ">=", "!=")

LAYOUT_STREAM = 1
SEQUENCE_STREAM = 0
CSV_STREAM = 2
CONDITION_STREAM = 3
DATABASE_STREAM = 4
MAX_JOIN_GAP = 2

Database = Dict[str, List[Tuple[str, ...]]]


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream named by ``key``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class Scenario:
    input_output_sequences: List[int] = field(default_factory=lambda: [0])
    num_linear_rules: int = 0
    num_harmless_join_rules: int = 0
    num_harmless_harmful_join_rules: int = 0
    num_harmful_harmful_join_rules: int = 0
    num_existential_rules: int = 0
    num_recursive_rules: int = 0
    recursion_kind: str = "direct"
    num_conditions: int = 0
    average_selectivity: float = 0.5
    records_per_csv: int = 100
    seed: int = 0

    @property
    def total_rules(self) -> int:
        return sum(self.input_output_sequences)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Scenario":
        """Build a scenario from plain keys.

        Raises:
            IncompatibleScenario: ``data`` has keys that are not scenario fields.
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise IncompatibleScenario(
                [{"constraint": "unknown-key", "detail": f"unknown keys: {', '.join(unknown)}"}]
            )
        values = dict(data)
        if "input_output_sequences" in values:
            values["input_output_sequences"] = [int(n) for n in values["input_output_sequences"]]
        return cls(**values)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        """Read a scenario from a TOML file."""
        try:
            with open(path) as f:
                data = toml.load(f)
        except (OSError, toml.TomlDecodeError) as e:
            raise EdbError(f"Cannot read scenario {path}: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            toml.dump(self.to_dict(), f)
        return path

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


@dataclass
class GenReport:
    """Every decision taken while generating one program."""

    scenario: Dict[str, Any]
    layout: List[List[str]] = field(default_factory=list)
    decisions: List[Dict[str, Any]] = field(default_factory=list)
    iterations: int = 0
    warnings: List[str] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    selectivity: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "layout": self.layout,
            "iterations": self.iterations,
            "decisions": self.decisions,
            "warnings": self.warnings,
            "files": self.files,
            "selectivity": self.selectivity,
        }


def _layout_error(detail: str) -> IncompatibleScenario:
    return IncompatibleScenario([{"constraint": "layout", "detail": detail}])


def _take(pool: List, rng: np.random.Generator):
    return pool.pop(int(rng.integers(len(pool))))


def _interleave(units: List[Tuple[str, ...]], rng: np.random.Generator) -> List[str]:
    """Flatten ``units``, letting up to ``MAX_JOIN_GAP`` single rules sit
    between an existential rule and the join over its affected position."""
    kinds: List[str] = []
    queue = list(units)
    while queue:
        unit = queue.pop(0)
        if len(unit) == 2 and unit[0] == EXISTENTIAL:
            kinds.append(EXISTENTIAL)
            gap = int(rng.integers(MAX_JOIN_GAP + 1))
            while gap and queue and len(queue[0]) == 1:
                kinds.append(queue.pop(0)[0])
                gap -= 1
            kinds.append(unit[1])
        else:
            kinds.extend(unit)
    return kinds


def plan_layout(scenario: Scenario) -> List[List[str]]:
    """Distribute rule kinds over the sequences.

    A sequence starts with an existential rule and a join over its affected
    position when one is left to place, otherwise with a rule that can read
    the input predicate directly. Two-rule units and single rules follow in
    shuffled order. Up to ``MAX_JOIN_GAP`` single rules may sit between an
    existential rule and its join; they carry the affected position along.

    Raises:
        IncompatibleScenario: the kinds cannot be laid out.
    """
    s = scenario
    rng = rng_stream(s.seed, LAYOUT_STREAM)
    harmful = [HARMLESS_HARMFUL_JOIN] * s.num_harmless_harmful_join_rules
    harmful += [HARMFUL_HARMFUL_JOIN] * s.num_harmful_harmful_join_rules
    blocks = [(EXISTENTIAL, harmful[i]) for i in rng.permutation(len(harmful))]
    indirect = s.num_recursive_rules // 2 if s.recursion_kind == "indirect" else 0
    loops = [(INDIRECT_OPEN, INDIRECT_CLOSE)] * indirect
    starters = [EXISTENTIAL] * (s.num_existential_rules - len(blocks))
    starters += [LINEAR] * (s.num_linear_rules - s.num_existential_rules)
    starters += [HARMLESS_JOIN] * (s.num_harmless_join_rules - s.num_recursive_rules)
    fillers = [DIRECT_RECURSION] * (s.num_recursive_rules if s.recursion_kind == "direct" else 0)

    layout: List[List[str]] = []
    for number, length in enumerate(s.input_output_sequences):
        if length == 0:
            layout.append([])
            continue
        if length >= 2 and blocks:
            head: Tuple[str, ...] = blocks.pop(0)
        elif starters:
            head = (_take(starters, rng),)
        else:
            raise _layout_error(f"sequence {number} has no rule that can read its input")
        rest = length - len(head)
        units: List[Tuple[str, ...]] = []
        while rest >= 2 and (loops or blocks):
            units.append(loops.pop() if loops else blocks.pop(0))
            rest -= 2
        while rest > 0:
            if fillers:
                units.append((fillers.pop(),))
            elif starters:
                units.append((_take(starters, rng),))
            else:
                raise _layout_error(f"sequence {number} cannot be filled to length {length}")
            rest -= 1
        order = rng.permutation(len(units))
        layout.append(_interleave([head] + [units[i] for i in order], rng))
    left = len(blocks) * 2 + len(loops) * 2 + len(starters) + len(fillers)
    if left:
        raise _layout_error(f"{left} rules do not fit into the sequences")
    return layout


@dataclass
class SequenceCursor:
    """Generation state of one input-output sequence."""

    number: int
    kinds: List[str]
    rng: np.random.Generator
    previous: str
    arity: int = 2
    affected: FrozenSet[int] = frozenset()
    step: int = 0
    loop_origin: Optional[Tuple[str, int, FrozenSet[int]]] = None

    @property
    def done(self) -> bool:
        return self.step >= len(self.kinds)


X, Y, U, W, Z = (Variable(n) for n in ("X", "Y", "U", "W", "Z"))
X2, U2 = Variable("X2"), Variable("U2")


def carried_positions(rule: Rule, source: str, affected: FrozenSet[int]) -> FrozenSet[int]:
    """Head positions of ``rule`` that are affected, given the affected positions of ``source``.

    Only atoms over ``source`` can carry affectedness in a generated rule;
    every other body atom is over an input predicate.
    """
    dangerous = {
        atom.terms[position - 1]
        for atom in rule.body
        if atom.predicate == source
        for position in affected
        if position <= atom.arity
    }
    dangerous.update(Variable(name) for name in rule.existentials)
    return frozenset(i + 1 for i, term in enumerate(rule.head.terms) if term in dangerous)


class ProgramGenerator:
    """Generates one program for a validated scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rules: List[Rule] = []
        self.inputs: List[str] = []
        self.outputs: List[str] = []
        self.report = GenReport(scenario=scenario.to_dict())

    def _input(self, predicate: str) -> str:
        self.inputs.append(predicate)
        return predicate

    def _edb(self, cursor: SequenceCursor) -> str:
        return self._input(f"e{cursor.number}_{cursor.step + 1}")

    def _previous_atom(self, cursor: SequenceCursor, first: Variable = X, third: Variable = U) -> Atom:
        terms = (first, Y) + ((third,) if cursor.arity == 3 else ())
        return Atom(cursor.previous, terms)

    def _head(self, predicate: str, arity: int, first: Variable, second: Variable) -> Atom:
        return Atom(predicate, (first, second) + ((X,) if arity == 3 else ()))

    def _emit(self, cursor: SequenceCursor) -> None:
        kind = cursor.kinds[cursor.step]
        rule_id = f"r{cursor.number}_{cursor.step + 1}"
        fresh = f"p{cursor.number}_{cursor.step + 1}"
        arity = 2 + int(cursor.rng.integers(2))
        previous = self._previous_atom(cursor)
        existentials = frozenset()
        new_previous, new_arity = fresh, arity
        kept: FrozenSet[int] = frozenset()

        if kind == LINEAR:
            body = (previous,)
            head = self._head(fresh, arity, X, Y)
        elif kind == EXISTENTIAL:
            body = (previous,)
            head = self._head(fresh, arity, X, Z)
            existentials = frozenset({"Z"})
        elif kind == HARMLESS_JOIN:
            body = (previous, Atom(self._edb(cursor), (X, W)))
            head = self._head(fresh, arity, W, Y)
        elif kind in (HARMLESS_HARMFUL_JOIN, HARMFUL_HARMFUL_JOIN):
            if 2 not in cursor.affected:
                raise GenerationStuck(f"{kind} in sequence {cursor.number} needs an affected position to join on")
            if kind == HARMLESS_HARMFUL_JOIN:
                body = (previous, Atom(self._edb(cursor), (Y, W)))
            else:
                body = (previous, self._previous_atom(cursor, first=W, third=U2))
            # the join variable stays out of the head to keep the rule warded
            head = self._head(fresh, arity, X, W)
        elif kind == DIRECT_RECURSION:
            body = (previous, Atom(self._edb(cursor), (X, X2)))
            head = Atom(cursor.previous, (X2,) + previous.terms[1:])
            new_previous, new_arity = cursor.previous, cursor.arity
            kept = cursor.affected
        elif kind == INDIRECT_OPEN:
            loop = f"q{cursor.number}_{cursor.step + 1}"
            body = (previous, Atom(self._edb(cursor), (X, X2)))
            head = Atom(loop, (X2,) + previous.terms[1:])
            cursor.loop_origin = (cursor.previous, cursor.arity, cursor.affected)
            new_previous, new_arity = loop, cursor.arity
        elif kind == INDIRECT_CLOSE:
            origin, origin_arity, kept = cursor.loop_origin
            body = (previous, Atom(self._edb(cursor), (X, X2)))
            head = Atom(origin, (X2,) + previous.terms[1:])
            new_previous, new_arity = origin, origin_arity
        else:
            raise GenerationStuck(f"Unknown rule kind {kind}")

        rule = Rule(rule_id, body, head, existentials)
        self.rules.append(rule)
        self.report.decisions.append(
            {"sequence": cursor.number, "step": cursor.step, "kind": kind, "rule": rule_id, "arity": len(head.terms)}
        )
        logger.debug("Sequence %d step %d: %s rule %s", cursor.number, cursor.step, kind, rule_id)
        cursor.affected = kept | carried_positions(rule, cursor.previous, cursor.affected)
        cursor.previous, cursor.arity = new_previous, new_arity
        cursor.step += 1

    def _add_conditions(self) -> None:
        rng = rng_stream(self.scenario.seed, CONDITION_STREAM)
        upper = max(1, self.scenario.records_per_csv)
        for _ in range(self.scenario.num_conditions):
            index = int(rng.integers(len(self.rules)))
            rule = self.rules[index]
            variable = rule.body[0].terms[0]
            op = CONDITION_OPERATORS[int(rng.integers(len(CONDITION_OPERATORS)))]
            value = Constant(str(int(rng.integers(upper))))
            self.rules[index] = replace(rule, conditions=rule.conditions + (Condition(variable, op, value),))
            self.report.decisions.append({"condition": rule.id, "op": op, "value": value.value})

    def generate(self) -> Tuple[Program, GenReport]:
        layout = plan_layout(self.scenario)
        self.report.layout = layout
        cursors = []
        for number, kinds in enumerate(layout, start=1):
            source = self._input(f"i{number}")
            cursors.append(
                SequenceCursor(number, kinds, rng_stream(self.scenario.seed, SEQUENCE_STREAM, number), source)
            )
        active = [cursor for cursor in cursors if not cursor.done]
        while active:
            for cursor in list(active):
                self._emit(cursor)
                self.report.iterations += 1
                if cursor.done:
                    self.outputs.append(cursor.previous)
                    active.remove(cursor)
        if self.rules:
            self._add_conditions()
        binds = frozenset(Bind(p, "csv", f"{p}.csv") for p in self.inputs)
        program = Program(tuple(self.rules), frozenset(self.inputs), frozenset(self.outputs), binds)
        logger.info("Generated %d rules over %d sequences", len(self.rules), len(cursors))
        return program.validate(), self.report


def generate(scenario: Scenario) -> Tuple[Program, GenReport]:
    """Generate a program matching ``scenario``.

    Raises:
        IncompatibleScenario: the scenario fails validation.
        GenerationStuck: a rule kind could not be placed.
    """
    return ProgramGenerator(validate(scenario)).generate()


def _write_rows(path: Path, rows: np.ndarray) -> None:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerows([int(v) for v in row] for row in rows)
    except OSError as e:
        raise EdbError(f"Cannot write {path}: {e}") from e


def join_partner(predicate: str) -> Optional[str]:
    """Input table whose keys the join table ``e<s>_<k>`` is matched against."""
    match = re.fullmatch(r"e(\d+)_\d+", predicate)
    return f"i{match.group(1)}" if match else None


def emit_edb(
    program: Program, scenario: Scenario, directory: Union[str, Path], report: Optional[GenReport] = None
) -> List[Path]:
    """Write one headerless integer CSV per input predicate.

    Keys live in ``[0, records)``. Sequence inputs (``i...``) hold every key
    once in their first column. Join tables (``e...``) draw
    ``round(selectivity * records)`` first-column values from the keys and
    the rest from the disjoint range ``[records, 2 * records)``, so that
    fraction of their rows finds a partner in the sequence input.
    """
    directory = Path(directory)
    inputs = sorted(program.inputs)
    if not inputs:
        logger.warning("Program has no input predicates; no CSV files written")
        if report is not None:
            report.warnings.append("no input predicates")
        return []
    directory.mkdir(parents=True, exist_ok=True)
    arities = program.arities()
    n = scenario.records_per_csv
    matching = int(round(scenario.average_selectivity * n))
    tables: Dict[str, np.ndarray] = {}
    written = []
    for number, predicate in enumerate(inputs):
        rng = rng_stream(scenario.seed, CSV_STREAM, number)
        arity = arities.get(predicate, 2)
        rows = rng.integers(0, n, size=(n, arity))
        if join_partner(predicate) is not None:
            keys = np.concatenate([rng.integers(0, n, size=matching), rng.integers(n, 2 * n, size=n - matching)])
            rows[:, 0] = rng.permutation(keys)
        else:
            rows[:, 0] = rng.permutation(n)
        tables[predicate] = rows
        bind = program.bind_for(predicate)
        path = directory / (bind.path if bind is not None else f"{predicate}.csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_rows(path, rows)
        written.append(path)
        if report is not None:
            report.files.append(path.name)
    if report is not None:
        for predicate, rows in tables.items():
            partner = join_partner(predicate)
            if partner in tables:
                report.selectivity[predicate] = measured_selectivity(rows, tables[partner])
    return written


def random_database(
    program: Program, seed: int, number: int = 0, max_facts: int = 20, num_constants: int = 6
) -> Database:
    """Small random EDB instance over the program's input predicates."""
    rng = rng_stream(seed, DATABASE_STREAM, number)
    arities = program.arities()
    inputs = [p for p in sorted(program.inputs) if p in arities]
    if not inputs:
        return {}
    per_predicate = max(1, max_facts // len(inputs))
    database: Database = {}
    for predicate in inputs:
        count = int(rng.integers(1, per_predicate + 1))
        rows = {
            tuple(str(int(v)) for v in rng.integers(0, num_constants, size=arities[predicate]))
            for _ in range(count)
        }
        database[predicate] = sorted(rows)
    return database


def measured_selectivity(rows: Sequence[Sequence], partner: Sequence[Sequence]) -> float:
    """Fraction of ``rows`` whose first column matches a first column of ``partner``."""
    if len(rows) == 0:
        return 0.0
    keys = {str(row[0]) for row in partner}
    return sum(1 for row in rows if str(row[0]) in keys) / len(rows)
