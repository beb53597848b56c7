"""Affected positions, harm classes, wardedness and causes of affectedness.

Skolem-binding (``sk_``) and ``dom_`` atoms never hold affected
positions: they carry functional witnesses and active-domain constants.
Conditions bind no positions and are ignored throughout.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from ..exceptions import NotHarmfulJoin
from ..rulespec import Atom, Program, Rule, Variable

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Position:
    predicate: str
    index: int

    def __str__(self) -> str:
        return f"{self.predicate}[{self.index}]"


class VariableClass(str, Enum):
    HARMLESS = "harmless"
    HARMFUL = "harmful"
    DANGEROUS = "dangerous"


class CauseKind(str, Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


@dataclass(frozen=True)
class Cause:
    rule_id: str
    kind: CauseKind
    position: int


@dataclass(frozen=True)
class HarmfulJoin:
    rule_id: str
    variable: str
    atoms: Tuple[int, ...]

    def to_dict(self) -> Dict:
        return {"rule": self.rule_id, "variable": self.variable, "atoms": list(self.atoms)}


@dataclass(frozen=True)
class WardViolation:
    rule_id: str
    variable: str
    reason: str

    def __str__(self) -> str:
        return f"rule {self.rule_id}: variable {self.variable} {self.reason}"

    def to_dict(self) -> Dict:
        return {"rule": self.rule_id, "variable": self.variable, "reason": self.reason}


@dataclass
class CauseGraph:
    """Causes of affectedness per (harmful join rule, body atom index).

    ``graph`` links every cause rule to the rule it affects; edges carry
    the atom index and the cause kind.
    """

    gamma: Dict[Tuple[str, int], List[Cause]] = field(default_factory=dict)
    graph: nx.DiGraph = field(default_factory=nx.DiGraph)

    def causes(self, rule_id: str, atom_index: int) -> List[Cause]:
        return self.gamma.get((rule_id, atom_index), [])

    def to_dict(self) -> Dict:
        return {
            f"{rule_id}#{index}": [{"rule": c.rule_id, "kind": c.kind.value} for c in causes]
            for (rule_id, index), causes in sorted(self.gamma.items())
        }


@dataclass(frozen=True)
class DistanceReport:
    """Candidate multisets of causes for one harmful join rule."""

    rule_id: str
    candidates: Tuple[Tuple[str, ...], ...]

    @property
    def dh(self) -> List[int]:
        return [len(gamma) for gamma in self.candidates]

    @property
    def mdh(self) -> int:
        return max(self.dh, default=0)

    @property
    def s(self) -> int:
        return len(self.candidates)

    def to_dict(self) -> Dict:
        return {
            "rule": self.rule_id,
            "candidates": [list(gamma) for gamma in self.candidates],
            "s": self.s,
            "mdh": self.mdh,
        }


def _tracked(atom: Atom) -> bool:
    return not (atom.is_skolem or atom.is_dom)


def _occurrences(rule: Rule) -> Dict[Variable, List[Tuple[int, Optional[Position]]]]:
    """Body occurrences per variable as (atom index, position or None).

    ``None`` marks an occurrence in an untracked atom, which always counts
    as non-affected.
    """
    occurrences: Dict[Variable, List[Tuple[int, Optional[Position]]]] = {}
    for index, atom in enumerate(rule.body):
        for offset, term in enumerate(atom.terms):
            if isinstance(term, Variable):
                position = Position(atom.predicate, offset + 1) if _tracked(atom) else None
                occurrences.setdefault(term, []).append((index, position))
    return occurrences


def _all_affected(occurrences: Sequence[Tuple[int, Optional[Position]]], affected: Set[Position]) -> bool:
    return all(position is not None and position in affected for _, position in occurrences)


def affected_positions(program: Program) -> FrozenSet[Position]:
    """Least fixpoint of affectedness over the program's rules."""
    affected: Set[Position] = set()
    for rule in program.rules:
        for offset, term in enumerate(rule.head.terms):
            if isinstance(term, Variable) and term.name in rule.existentials:
                affected.add(Position(rule.head.predicate, offset + 1))
    occurrences = {rule.id: _occurrences(rule) for rule in program.rules}
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        for rule in program.rules:
            occ = occurrences[rule.id]
            for offset, term in enumerate(rule.head.terms):
                position = Position(rule.head.predicate, offset + 1)
                if position in affected or not isinstance(term, Variable) or term not in occ:
                    continue
                if _all_affected(occ[term], affected):
                    affected.add(position)
                    changed = True
    logger.debug("Affectedness fixpoint reached after %d rounds: %d positions", rounds, len(affected))
    return frozenset(affected)


def classify_rule(rule: Rule, affected: Iterable[Position]) -> Dict[Variable, VariableClass]:
    """Harm class of every body variable of ``rule``."""
    affected = set(affected)
    head_vars = set(rule.head_variables())
    classes: Dict[Variable, VariableClass] = {}
    for var, occ in _occurrences(rule).items():
        if not _all_affected(occ, affected):
            classes[var] = VariableClass.HARMLESS
        elif var in head_vars:
            classes[var] = VariableClass.DANGEROUS
        else:
            classes[var] = VariableClass.HARMFUL
    return classes


def is_harmful(var_class: Optional[VariableClass]) -> bool:
    return var_class in (VariableClass.HARMFUL, VariableClass.DANGEROUS)


def classify(program: Program, affected: Optional[Iterable[Position]] = None) -> Dict[Tuple[str, str], VariableClass]:
    """Harm class per (rule id, variable name)."""
    if affected is None:
        affected = affected_positions(program)
    affected = set(affected)
    return {
        (rule.id, var.name): var_class
        for rule in program.rules
        for var, var_class in classify_rule(rule, affected).items()
    }


def ward_violation(rule: Rule, affected: Iterable[Position]) -> Optional[WardViolation]:
    classes = classify_rule(rule, affected)
    dangerous = [v for v in rule.body_variables() if classes[v] == VariableClass.DANGEROUS]
    if not dangerous:
        return None
    candidates = [i for i, atom in enumerate(rule.body) if set(dangerous) <= set(atom.variables())]
    if not candidates:
        holder = next(i for i, atom in enumerate(rule.body) if dangerous[0] in atom.variables())
        held = set(rule.body[holder].variables())
        missing = next(v for v in dangerous if v not in held)
        return WardViolation(rule.id, missing.name, "is dangerous but not in the same atom as the other dangerous variables")
    first_offender = None
    for ward in candidates:
        others = set(itertools.chain.from_iterable(a.variables() for i, a in enumerate(rule.body) if i != ward))
        shared = [v for v in rule.body[ward].variables() if v in others and is_harmful(classes[v])]
        if not shared:
            return None
        if first_offender is None:
            first_offender = shared[0]
    return WardViolation(rule.id, first_offender.name, "is harmful and shared between the ward and another atom")


def is_warded(program: Program, affected: Optional[Iterable[Position]] = None) -> Tuple[bool, List[WardViolation]]:
    if affected is None:
        affected = affected_positions(program)
    affected = set(affected)
    violations = [v for v in (ward_violation(rule, affected) for rule in program.rules) if v is not None]
    return not violations, violations


def rule_harmful_joins(rule: Rule, affected: Iterable[Position]) -> List[HarmfulJoin]:
    classes = classify_rule(rule, affected)
    joins = []
    for var, occ in _occurrences(rule).items():
        atoms = tuple(sorted({index for index, _ in occ}))
        if is_harmful(classes[var]) and len(atoms) >= 2:
            joins.append(HarmfulJoin(rule.id, var.name, atoms))
    return joins


def harmful_joins(program: Program, affected: Optional[Iterable[Position]] = None) -> List[HarmfulJoin]:
    if affected is None:
        affected = affected_positions(program)
    affected = set(affected)
    return [join for rule in program.rules for join in rule_harmful_joins(rule, affected)]


def causes_of(program: Program, atom: Atom, positions: Iterable[int], affected: Iterable[Position]) -> List[Cause]:
    """Rules whose head feeds affectedness into ``atom`` at ``positions``.

    A rule is a Direct cause when an existential sits at one of the
    positions, Indirect when a harmful variable of the rule does.
    """
    affected = set(affected)
    positions = sorted(set(positions))
    found = []
    for rule in program.rules_defining(atom.predicate):
        if rule.head.arity != atom.arity:
            continue
        classes = None
        kind = None
        hit = None
        for position in positions:
            term = rule.head.terms[position - 1]
            if not isinstance(term, Variable):
                continue
            if term.name in rule.existentials:
                kind, hit = CauseKind.DIRECT, position
                break
            if classes is None:
                classes = classify_rule(rule, affected)
            if kind is None and is_harmful(classes.get(term)):
                kind, hit = CauseKind.INDIRECT, position
        if kind is not None:
            found.append(Cause(rule.id, kind, hit))
    return found


def join_atom_positions(rule: Rule, variables: Iterable[str], affected: Iterable[Position]) -> Dict[int, List[int]]:
    """Affected positions (1-based) holding any of ``variables``, per atom index."""
    affected = set(affected)
    names = set(variables)
    result: Dict[int, List[int]] = {}
    for index, atom in enumerate(rule.body):
        if not _tracked(atom):
            continue
        for offset, term in enumerate(atom.terms):
            if isinstance(term, Variable) and term.name in names and Position(atom.predicate, offset + 1) in affected:
                result.setdefault(index, []).append(offset + 1)
    return result


def cause_graph(program: Program, affected: Optional[Iterable[Position]] = None) -> CauseGraph:
    if affected is None:
        affected = affected_positions(program)
    affected = set(affected)
    graph = CauseGraph()
    by_rule: Dict[str, List[str]] = {}
    for join in harmful_joins(program, affected):
        by_rule.setdefault(join.rule_id, []).append(join.variable)
    for rule_id, variables in by_rule.items():
        rule = program.rule(rule_id)
        for index, positions in sorted(join_atom_positions(rule, variables, affected).items()):
            causes = causes_of(program, rule.body[index], positions, affected)
            graph.gamma[(rule_id, index)] = causes
            for cause in causes:
                graph.graph.add_edge(cause.rule_id, rule_id, atom=index, kind=cause.kind.value)
    return graph


def _cause_chains(program: Program, cause: Cause, affected: Set[Position], visited: FrozenSet[str]) -> List[Tuple[str, ...]]:
    if cause.rule_id in visited:
        return [()]
    if cause.kind == CauseKind.DIRECT:
        return [(cause.rule_id,)]
    rule = program.rule(cause.rule_id)
    carried = rule.head.terms[cause.position - 1]
    visited = visited | {cause.rule_id}
    per_atom = [
        _atom_chains(program, rule.body[index], positions, affected, visited)
        for index, positions in sorted(join_atom_positions(rule, [carried.name], affected).items())
    ]
    return [(cause.rule_id,) + tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*per_atom)]


def _atom_chains(
    program: Program, atom: Atom, positions: Iterable[int], affected: Set[Position], visited: FrozenSet[str]
) -> List[Tuple[str, ...]]:
    chains: List[Tuple[str, ...]] = []
    for cause in causes_of(program, atom, positions, affected):
        chains.extend(_cause_chains(program, cause, affected, visited))
    return chains or [()]


def dh_mdh(program: Program, rule: Rule, affected: Optional[Iterable[Position]] = None) -> DistanceReport:
    """Enumerate the multisets of causes behind a harmful join rule.

    Recursive chains are cut at the first repeated rule id.

    Raises:
        NotHarmfulJoin: ``rule`` joins no atoms on a harmful variable.
    """
    if affected is None:
        affected = affected_positions(program)
    affected = set(affected)
    joins = rule_harmful_joins(rule, affected)
    if not joins:
        raise NotHarmfulJoin(f"Rule {rule.id} has no harmful join")
    variables = [join.variable for join in joins]
    per_atom = [
        _atom_chains(program, rule.body[index], positions, affected, frozenset())
        for index, positions in sorted(join_atom_positions(rule, variables, affected).items())
    ]
    candidates = tuple(
        tuple(sorted(itertools.chain.from_iterable(combo))) for combo in itertools.product(*per_atom)
    )
    return DistanceReport(rule.id, candidates)
