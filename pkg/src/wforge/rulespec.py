"""Data model for the Warded Datalog+/- dialect.

All values are immutable. A ``Program`` is the unit of generation,
analysis and rewriting; rules are single-headed and carry their
existentially quantified head variables explicitly.
"""

import re
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, Union

from .exceptions import ArityMismatch, ProgramError, UnsafeRule

SKOLEM_PREFIX = "sk_"
DOM_PREFIX = "dom_"
COMPARISON_OPERATORS = ("<=", ">=", "!=", "==", "<", ">")

_BARE_CONSTANT = re.compile(r"^(-?\d+|[a-z][A-Za-z0-9_]*)$")


@dataclass(frozen=True)
class Variable:
    """Rule variable, written with an uppercase initial."""

    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("Variable names must be nonempty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    """Domain value. Printed bare when it is an integer or a lowercase name, quoted otherwise."""

    value: str

    def __str__(self) -> str:
        if _BARE_CONSTANT.match(self.value):
            return self.value
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class LabeledNull:
    """Value invented by the chase for an existential variable."""

    id: int

    def __str__(self) -> str:
        return f"_:n{self.id}"


@dataclass(frozen=True)
class SkolemTerm:
    """Functional witness ``sk_<rule>_<var>(args)`` for an existential."""

    functor: str
    args: Tuple["Term", ...]

    def __str__(self) -> str:
        return f"{self.functor}({', '.join(str(a) for a in self.args)})"


Term = Union[Variable, Constant, LabeledNull, SkolemTerm]


def term_variables(term: Term) -> Iterator[Variable]:
    """Yield the variables of ``term``, including those inside Skolem terms."""
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, SkolemTerm):
        for arg in term.args:
            yield from term_variables(arg)


def skolem_functor(rule_id: str, variable: str) -> str:
    """Functor naming the value of existential ``variable`` of rule ``rule_id``."""
    return f"{SKOLEM_PREFIX}{rule_id}_{variable}"


def dom_predicate(arity: int) -> str:
    return f"{DOM_PREFIX}{arity}"


def is_dom_predicate(predicate: str) -> bool:
    return predicate.startswith(DOM_PREFIX) and predicate[len(DOM_PREFIX):].isdigit()


@dataclass(frozen=True)
class Atom:
    """Predicate applied to a tuple of terms."""

    predicate: str
    terms: Tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)

    @property
    def is_skolem(self) -> bool:
        """Skolem-binding atom: frontier terms followed by the bound term."""
        return self.predicate.startswith(SKOLEM_PREFIX)

    @property
    def is_dom(self) -> bool:
        return is_dom_predicate(self.predicate)

    def variables(self) -> List[Variable]:
        """Distinct variables in order of first occurrence."""
        seen: Dict[Variable, None] = {}
        for term in self.terms:
            for var in term_variables(term):
                seen.setdefault(var)
        return list(seen)

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(str(t) for t in self.terms)})"


@dataclass(frozen=True)
class Condition:
    """Comparison ``left op right`` between a variable and a constant."""

    left: Term
    op: str
    right: Term

    def __post_init__(self):
        if self.op not in COMPARISON_OPERATORS:
            raise ValueError(f"Unknown comparison operator: {self.op}")

    def variables(self) -> List[Variable]:
        return [t for t in (self.left, self.right) if isinstance(t, Variable)]

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Rule:
    """Single-headed rule ``body, conditions -> head``.

    Attributes:
        id: Label, unique within a program.
        body: Body atoms in source order.
        head: The head atom.
        existentials: Names of head variables that are existentially quantified.
        conditions: Comparisons that must hold for the body match.
    """

    id: str
    body: Tuple[Atom, ...]
    head: Atom
    existentials: FrozenSet[str] = frozenset()
    conditions: Tuple[Condition, ...] = ()

    def body_variables(self) -> List[Variable]:
        seen: Dict[Variable, None] = {}
        for atom in self.body:
            for var in atom.variables():
                seen.setdefault(var)
        return list(seen)

    def head_variables(self) -> List[Variable]:
        return self.head.variables()

    def variables(self) -> List[Variable]:
        """Body, head and condition variables in order of first occurrence."""
        seen: Dict[Variable, None] = dict.fromkeys(self.body_variables())
        for var in self.head_variables():
            seen.setdefault(var)
        for cond in self.conditions:
            for var in cond.variables():
                seen.setdefault(var)
        return list(seen)

    @property
    def frontier(self) -> List[Variable]:
        """Head variables bound by the body, in head order."""
        body_vars = set(self.body_variables())
        return [v for v in self.head_variables() if v in body_vars]

    @property
    def is_existential(self) -> bool:
        return bool(self.existentials)

    def with_id(self, rule_id: str) -> "Rule":
        return replace(self, id=rule_id)

    def check_safety(self) -> None:
        """Check that every head and condition variable is bound.

        Raises:
            UnsafeRule: an existential also occurs in the body, or a head or
                condition variable is bound neither by the body nor as an
                existential.
        """
        body_vars = {v.name for v in self.body_variables()}
        clash = sorted(self.existentials & body_vars)
        if clash:
            raise UnsafeRule(f"Rule {self.id}: existential variable {clash[0]} also occurs in the body")
        for var in self.head_variables():
            if var.name not in body_vars and var.name not in self.existentials:
                raise UnsafeRule(
                    f"Rule {self.id}: head variable {var.name} is neither existential nor in the body"
                )
        for cond in self.conditions:
            for var in cond.variables():
                if var.name not in body_vars:
                    raise UnsafeRule(f"Rule {self.id}: condition variable {var.name} is not bound in the body")

    def __str__(self) -> str:
        from .functions.dialect import format_rule

        return format_rule(self)


@dataclass(frozen=True)
class Bind:
    """``@bind`` annotation attaching a data source to a predicate."""

    predicate: str
    format: str
    path: str


@dataclass(frozen=True)
class Program:
    """Rules plus the input and output predicates and their data binds."""

    rules: Tuple[Rule, ...] = ()
    inputs: FrozenSet[str] = frozenset()
    outputs: FrozenSet[str] = frozenset()
    binds: FrozenSet[Bind] = frozenset()

    def atoms(self) -> Iterator[Atom]:
        for rule in self.rules:
            yield from rule.body
            yield rule.head

    def arities(self) -> Dict[str, int]:
        """Predicate arities; the first use fixes each arity."""
        arities: Dict[str, int] = {}
        for atom in self.atoms():
            known = arities.setdefault(atom.predicate, atom.arity)
            if known != atom.arity:
                raise ArityMismatch(
                    f"Predicate {atom.predicate} used with arity {atom.arity}, expected {known}"
                )
        return arities

    def head_predicates(self) -> FrozenSet[str]:
        return frozenset(rule.head.predicate for rule in self.rules)

    def rule(self, rule_id: str) -> Rule:
        """Look up a rule by id.

        Raises:
            KeyError: no rule has that id.
        """
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    def rules_defining(self, predicate: str) -> List[Rule]:
        return [rule for rule in self.rules if rule.head.predicate == predicate]

    def bind_for(self, predicate: str) -> Optional[Bind]:
        """Bind declared for ``predicate``, or None."""
        for bind in self.binds:
            if bind.predicate == predicate:
                return bind
        return None

    def constants(self) -> List[Constant]:
        """Constants written in atoms or conditions, in order of first occurrence."""
        seen: Dict[Constant, None] = {}
        for atom in self.atoms():
            for term in atom.terms:
                if isinstance(term, Constant):
                    seen.setdefault(term)
        for rule in self.rules:
            for cond in rule.conditions:
                for term in (cond.left, cond.right):
                    if isinstance(term, Constant):
                        seen.setdefault(term)
        return list(seen)

    def with_rules(self, rules: Iterable[Rule]) -> "Program":
        return replace(self, rules=tuple(rules))

    def validate(self) -> "Program":
        """Check every type invariant; returns self for chaining."""
        self.arities()
        ids = set()
        for rule in self.rules:
            if rule.id in ids:
                raise ProgramError(f"Duplicate rule id: {rule.id}")
            ids.add(rule.id)
            if not rule.body:
                raise ProgramError(f"Rule {rule.id} has an empty body")
            rule.check_safety()
        heads = self.head_predicates()
        for predicate in sorted(self.inputs & heads):
            raise ProgramError(f"Input predicate {predicate} is also the head of a rule")
        for bind in self.binds:
            if bind.predicate not in self.inputs and bind.predicate not in self.outputs:
                raise ProgramError(f"Bind refers to {bind.predicate}, which is neither input nor output")
        return self
