"""Program analyzers for wardedness and structural parameters."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Tuple

import networkx as nx

from .functions import affectedness
from .functions.affectedness import (
    CauseGraph,
    DistanceReport,
    HarmfulJoin,
    Position,
    VariableClass,
    WardViolation,
)
from .rulespec import Program, Rule

logger = logging.getLogger(__name__)


class ProgramAnalyzer(ABC):
    """Base class for program analyzers."""

    def __init__(self, program: Program):
        """Initialize analyzer with a program.

        Args:
            program (Program): Program to analyze
        """
        self.program = program

    @abstractmethod
    def analyze(self) -> Any:
        """Analyze the program and return a report."""


@dataclass
class AffectednessReport:
    affected: FrozenSet[Position]
    classes: Dict[Tuple[str, str], VariableClass]
    harmful_joins: List[HarmfulJoin]
    causes: CauseGraph
    distances: List[DistanceReport]
    warded: bool
    violations: List[WardViolation] = field(default_factory=list)

    @property
    def is_harmless(self) -> bool:
        return not self.harmful_joins

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return {
            "affected": [str(p) for p in sorted(self.affected)],
            "classes": {f"{rule}.{var}": cls.value for (rule, var), cls in sorted(self.classes.items())},
            "harmful_joins": [join.to_dict() for join in self.harmful_joins],
            "causes": self.causes.to_dict(),
            "distances": [d.to_dict() for d in self.distances],
            "warded": self.warded,
            "violations": [v.to_dict() for v in self.violations],
        }

    def to_markdown(self) -> str:
        """Convert to markdown format."""
        lines = [
            "# Warded Analysis\n",
            f"- Affected positions: {', '.join(str(p) for p in sorted(self.affected)) or 'none'}",
            f"- Warded: {'Yes' if self.warded else 'No'}",
            f"- Harmful joins: {len(self.harmful_joins)}\n",
        ]
        if self.violations:
            lines.extend(["## Violations", *[f"- {v}" for v in self.violations], ""])
        if self.distances:
            lines.append("## Distance from harmlessness")
            for distance in self.distances:
                lines.append(f"- {distance.rule_id}: s={distance.s}, mdh={distance.mdh}")
            lines.append("")
        return "\n".join(lines)


class WardedAnalyzer(ProgramAnalyzer):
    """Affectedness, harm classes, wardedness, harmful joins and their causes."""

    def analyze(self) -> AffectednessReport:
        affected = affectedness.affected_positions(self.program)
        warded, violations = affectedness.is_warded(self.program, affected)
        joins = affectedness.harmful_joins(self.program, affected)
        distances = []
        for rule_id in dict.fromkeys(join.rule_id for join in joins):
            distances.append(affectedness.dh_mdh(self.program, self.program.rule(rule_id), affected))
        return AffectednessReport(
            affected=affected,
            classes=affectedness.classify(self.program, affected),
            harmful_joins=joins,
            causes=affectedness.cause_graph(self.program, affected),
            distances=distances,
            warded=warded,
            violations=violations,
        )


@dataclass
class StructureCounts:
    """Rule counts by structural kind, as requested from the generator."""

    linear_rules: int = 0
    join_rules: int = 0
    harmless_joins: int = 0
    harmless_harmful_joins: int = 0
    harmful_harmful_joins: int = 0
    existential_rules: int = 0
    recursive_rules: int = 0
    conditions: int = 0

    def to_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


def recursive_rule_ids(program: Program) -> List[str]:
    """Rules whose head predicate lies on a cycle with one of their body predicates."""
    graph = nx.DiGraph()
    for rule in program.rules:
        graph.add_node(rule.head.predicate)
        for atom in rule.body:
            graph.add_edge(atom.predicate, rule.head.predicate)
    component_of = {}
    for number, component in enumerate(nx.strongly_connected_components(graph)):
        for predicate in component:
            component_of[predicate] = number
    recursive = []
    for rule in program.rules:
        head = rule.head.predicate
        for atom in rule.body:
            if component_of[atom.predicate] == component_of[head]:
                recursive.append(rule.id)
                break
    return recursive


class StructureAnalyzer(ProgramAnalyzer):
    """Counts linear, join, existential, recursive rules and conditions."""

    def _join_kind(self, rule: Rule, affected: FrozenSet[Position]) -> str:
        if affectedness.rule_harmful_joins(rule, affected):
            return "harmful_harmful"
        tracked = [atom for atom in rule.body if not (atom.is_skolem or atom.is_dom)]
        for var in rule.body_variables():
            holders = [atom for atom in tracked if var in atom.variables()]
            if len(holders) < 2:
                continue
            positions = [
                Position(atom.predicate, offset + 1)
                for atom in holders
                for offset, term in enumerate(atom.terms)
                if term == var
            ]
            if any(p in affected for p in positions):
                return "harmless_harmful"
        return "harmless"

    def analyze(self) -> StructureCounts:
        affected = affectedness.affected_positions(self.program)
        counts = StructureCounts()
        for rule in self.program.rules:
            atoms = [atom for atom in rule.body if not (atom.is_skolem or atom.is_dom)]
            if len(atoms) == 1:
                counts.linear_rules += 1
            else:
                counts.join_rules += 1
                kind = self._join_kind(rule, affected)
                if kind == "harmful_harmful":
                    counts.harmful_harmful_joins += 1
                elif kind == "harmless_harmful":
                    counts.harmless_harmful_joins += 1
                else:
                    counts.harmless_joins += 1
            if rule.is_existential:
                counts.existential_rules += 1
            counts.conditions += len(rule.conditions)
        counts.recursive_rules = len(recursive_rule_ids(self.program))
        logger.debug("Structure of program: %s", counts.to_dict())
        return counts
