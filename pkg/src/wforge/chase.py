"""Chase evaluation over labeled nulls and the equivalence oracle built on it."""

import csv
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .exceptions import ArityMismatch, EdbError
from .functions.homomorphism import AtomIndex, find_homomorphism, homomorphisms
from .rulespec import Atom, Condition, Constant, LabeledNull, Program, Rule, Term, Variable, dom_predicate, skolem_functor

logger = logging.getLogger(__name__)

DEFAULT_STEP_BOUND = 10_000
RESTRICTED = "restricted"
OBLIVIOUS = "oblivious"
VARIANTS = (RESTRICTED, OBLIVIOUS)

Value = Union[Constant, LabeledNull]
Database = Mapping[str, Sequence[Sequence[str]]]


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: Tuple[Value, ...]

    def to_atom(self) -> Atom:
        return Atom(self.predicate, self.args)

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"


@dataclass
class ChaseStep:
    rule_id: str
    bindings: Dict[str, str]
    fact: Fact


class ChaseInstance:
    """Facts per predicate in insertion order, plus the null counter and step log."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self._facts: Dict[str, Dict[Fact, None]] = {}
        self._index: AtomIndex = {}
        self.next_null_id = 0
        self.steps: List[ChaseStep] = []
        # null id -> (Skolem functor, frontier values)
        self.null_origin: Dict[int, Tuple[str, Tuple[Value, ...]]] = {}
        for fact in facts:
            self.add(fact)

    def add(self, fact: Fact) -> bool:
        """Add ``fact``; returns False if it was already present."""
        bucket = self._facts.setdefault(fact.predicate, {})
        if fact in bucket:
            return False
        bucket[fact] = None
        entries = self._index.setdefault((fact.predicate, len(fact.args)), [])
        entries.append((len(entries), fact.to_atom()))
        return True

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._facts.get(fact.predicate, {})

    def __len__(self) -> int:
        return sum(len(bucket) for bucket in self._facts.values())

    def __iter__(self) -> Iterator[Fact]:
        for predicate in sorted(self._facts):
            yield from self._facts[predicate]

    @property
    def index(self) -> AtomIndex:
        return self._index

    def predicates(self) -> List[str]:
        return sorted(self._facts)

    def facts(self, predicate: Optional[str] = None) -> List[Fact]:
        if predicate is None:
            return list(self)
        return list(self._facts.get(predicate, {}))

    def restrict(self, predicates: Iterable[str]) -> List[Fact]:
        return [fact for predicate in sorted(set(predicates)) for fact in self._facts.get(predicate, {})]

    def constants(self) -> List[Constant]:
        seen: Dict[Constant, None] = {}
        for fact in self:
            for arg in fact.args:
                if isinstance(arg, Constant):
                    seen.setdefault(arg)
        return list(seen)

    def fresh_null(self, functor: str, frontier: Tuple[Value, ...]) -> LabeledNull:
        null = LabeledNull(self.next_null_id)
        self.next_null_id += 1
        self.null_origin[null.id] = (functor, frontier)
        return null

    def dump(self) -> str:
        """Facts one per line, predicates sorted, insertion order within."""
        return "".join(f"{fact}\n" for fact in self)


def _number(value: str) -> Optional[int]:
    try:
        return int(value)
    except ValueError:
        return None


def holds(condition: Condition, mapping: Mapping[Term, Term]) -> bool:
    """Evaluate a comparison; anything involving a labeled null is false."""
    left = mapping.get(condition.left, condition.left)
    right = mapping.get(condition.right, condition.right)
    if not (isinstance(left, Constant) and isinstance(right, Constant)):
        return False
    a, b = _number(left.value), _number(right.value)
    if a is None or b is None:
        a, b = left.value, right.value
    op = condition.op
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _ground_head(rule: Rule, mapping: Mapping[Term, Term]) -> Atom:
    return Atom(rule.head.predicate, tuple(mapping.get(t, t) for t in rule.head.terms))


def _head_satisfied(rule: Rule, mapping: Mapping[Term, Term], instance: ChaseInstance) -> bool:
    if not rule.existentials:
        head = _ground_head(rule, mapping)
        return Fact(head.predicate, head.terms) in instance
    frontier = {v: mapping[v] for v in rule.frontier}
    return find_homomorphism([rule.head], instance.index, frontier) is not None


def _fire(rule: Rule, mapping: Dict[Term, Term], instance: ChaseInstance) -> Fact:
    frontier_values = tuple(mapping[v] for v in rule.frontier)
    for name in sorted(rule.existentials):
        functor = skolem_functor(rule.id, name)
        null = instance.fresh_null(functor, frontier_values)
        mapping[Variable(name)] = null
        instance.add(Fact(functor, frontier_values + (null,)))
    head = _ground_head(rule, mapping)
    fact = Fact(head.predicate, head.terms)
    instance.add(fact)
    instance.steps.append(ChaseStep(rule.id, {str(k): str(v) for k, v in mapping.items()}, fact))
    return fact


def chase(
    program: Program,
    instance: ChaseInstance,
    step_bound: int = DEFAULT_STEP_BOUND,
    variant: str = RESTRICTED,
) -> Tuple[ChaseInstance, bool]:
    """Run the chase on ``instance`` in place, round-robin over the rules.

    The restricted variant fires a trigger only when no existing fact
    already satisfies its head; the oblivious one fires every trigger
    once. Matches are snapshotted per rule and round.

    Returns:
        (instance, completed): completed is False when ``step_bound``
        firings were used up while a trigger was still applicable.
    """
    if variant not in VARIANTS:
        raise ValueError(f"Unknown chase variant: {variant}")
    fired: Set[Tuple[str, Tuple[Term, ...]]] = set()
    steps = 0
    rounds = 0
    while True:
        rounds += 1
        progress = False
        for rule in program.rules:
            body_vars = rule.body_variables()
            matches = [mapping for mapping, _ in homomorphisms(rule.body, instance.index)]
            for mapping in matches:
                if not all(holds(cond, mapping) for cond in rule.conditions):
                    continue
                if variant == OBLIVIOUS:
                    trigger = (rule.id, tuple(mapping[v] for v in body_vars))
                    if trigger in fired:
                        continue
                    if not rule.existentials and _head_satisfied(rule, mapping, instance):
                        fired.add(trigger)
                        continue
                elif _head_satisfied(rule, mapping, instance):
                    continue
                if steps >= step_bound:
                    logger.info("Chase stopped at the bound of %d steps", step_bound)
                    return instance, False
                if variant == OBLIVIOUS:
                    fired.add(trigger)
                _fire(rule, dict(mapping), instance)
                steps += 1
                progress = True
        if not progress:
            logger.debug("Chase reached a fixpoint after %d rounds and %d steps", rounds, steps)
            return instance, True


def dom_arities(program: Program) -> List[int]:
    return sorted({atom.arity for rule in program.rules for atom in rule.body if atom.is_dom})


def materialize_dom(program: Program, instance: ChaseInstance) -> ChaseInstance:
    """Add ``dom_n`` facts over the instance's and the program's constants."""
    arities = dom_arities(program)
    if not arities:
        return instance
    domain: Dict[Constant, None] = dict.fromkeys(instance.constants())
    for constant in program.constants():
        domain.setdefault(constant)
    values = sorted(domain, key=lambda c: c.value)
    for arity in arities:
        for combo in itertools.product(values, repeat=arity):
            instance.add(Fact(dom_predicate(arity), combo))
    return instance


def instance_from_database(program: Program, database: Database) -> ChaseInstance:
    """Instance holding ``database`` rows as facts, plus the active domain."""
    arities = program.arities()
    instance = ChaseInstance()
    for predicate in sorted(database):
        for row in database[predicate]:
            expected = arities.get(predicate)
            if expected is not None and len(row) != expected:
                raise ArityMismatch(f"Row {tuple(row)} of {predicate} has {len(row)} values, expected {expected}")
            instance.add(Fact(predicate, tuple(Constant(str(v)) for v in row)))
    return materialize_dom(program, instance)


def read_csv(path: Union[str, Path]) -> List[Tuple[str, ...]]:
    try:
        with open(path, newline="") as f:
            return [tuple(cell.strip() for cell in row) for row in csv.reader(f) if row]
    except OSError as e:
        raise EdbError(f"Cannot read {path}: {e}") from e


def load_edb(program: Program, directory: Union[str, Path]) -> ChaseInstance:
    """Load one headerless CSV per input predicate.

    Paths come from ``@bind`` annotations, relative to ``directory``, or
    default to ``<predicate>.csv``.

    Raises:
        EdbError: a file is missing or unreadable.
        ArityMismatch: a row width differs from the predicate's arity.
    """
    directory = Path(directory)
    database: Dict[str, List[Tuple[str, ...]]] = {}
    for predicate in sorted(program.inputs):
        bind = program.bind_for(predicate)
        path = directory / (bind.path if bind is not None else f"{predicate}.csv")
        if not path.exists():
            raise EdbError(f"No data for {predicate}: {path} does not exist")
        database[predicate] = read_csv(path)
    instance = instance_from_database(program, database)
    logger.info("Loaded %d facts from %s", len(instance), directory)
    return instance


class Verdict(str, Enum):
    EQUAL = "Equal"
    NOT_EQUAL = "NotEqual"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class DatabaseVerdict:
    database: int
    verdict: Verdict
    witness: Optional[str] = None
    facts: Tuple[int, int] = (0, 0)
    completed: Tuple[bool, bool] = (True, True)

    def to_dict(self) -> Dict:
        return {
            "database": self.database,
            "verdict": self.verdict.value,
            "witness": self.witness,
            "facts": list(self.facts),
            "completed": list(self.completed),
        }


def _maps_into(source: List[Fact], target: ChaseInstance) -> Optional[str]:
    """None if ``source`` maps homomorphically into ``target``, else a witness fact."""
    ground = [fact for fact in source if not any(isinstance(a, LabeledNull) for a in fact.args)]
    for fact in ground:
        if fact not in target:
            return str(fact)
    grounded = set(ground)
    with_nulls = [fact.to_atom() for fact in source if fact not in grounded]
    for atom in with_nulls:
        if find_homomorphism([atom], target.index, mappable=(LabeledNull,)) is None:
            return str(Fact(atom.predicate, atom.terms))
    if with_nulls and find_homomorphism(with_nulls, target.index, mappable=(LabeledNull,)) is None:
        return str(Fact(with_nulls[0].predicate, with_nulls[0].terms))
    return None


def compare_instances(left: ChaseInstance, right: ChaseInstance, predicates: Iterable[str]) -> Tuple[Verdict, Optional[str]]:
    """Homomorphic equivalence of two instances restricted to ``predicates``."""
    predicates = sorted(set(predicates))
    left_facts = left.restrict(predicates)
    right_facts = right.restrict(predicates)
    left_view = ChaseInstance(left_facts)
    right_view = ChaseInstance(right_facts)
    witness = _maps_into(left_facts, right_view)
    if witness is None:
        witness = _maps_into(right_facts, left_view)
    if witness is None:
        return Verdict.EQUAL, None
    return Verdict.NOT_EQUAL, witness


def _verdict_for(
    number: int,
    database: Database,
    first: Program,
    second: Program,
    step_bound: int,
    variant: str,
) -> DatabaseVerdict:
    left, done_left = chase(first, instance_from_database(first, database), step_bound, variant)
    right, done_right = chase(second, instance_from_database(second, database), step_bound, variant)
    predicates = first.outputs | second.outputs
    sizes = (len(left.restrict(predicates)), len(right.restrict(predicates)))
    if not (done_left and done_right):
        return DatabaseVerdict(number, Verdict.INCONCLUSIVE, None, sizes, (done_left, done_right))
    verdict, witness = compare_instances(left, right, predicates)
    return DatabaseVerdict(number, verdict, witness, sizes)


def equivalent(
    first: Program,
    second: Program,
    databases: Sequence[Database],
    step_bound: int = DEFAULT_STEP_BOUND,
    variant: str = RESTRICTED,
    workers: Optional[int] = None,
) -> List[DatabaseVerdict]:
    """Compare the chase of two programs on each database over their output predicates."""
    jobs = list(enumerate(databases))
    if workers is not None and workers <= 1:
        verdicts = [_verdict_for(n, db, first, second, step_bound, variant) for n, db in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda job: _verdict_for(job[0], job[1], first, second, step_bound, variant), jobs))
    for verdict in verdicts:
        logger.debug("Database %d: %s", verdict.database, verdict.verdict.value)
    return verdicts
