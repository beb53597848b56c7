"""Normalization manager running harmful join elimination."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, Union

from .base import NormalizationContext, Phase
from .exceptions import NormalizationError, NotWarded
from .functions.affectedness import affected_positions, harmful_joins, is_warded
from .functions.transform import FreshPredicates
from .hutree import DEFAULT_NODE_BUDGET, HUTree
from .phases import BackComposition, Grounding, Recognition, SkolemSimplification
from .rulespec import Program

logger = logging.getLogger(__name__)

DEFAULT_PHASES: Tuple[Type[Phase], ...] = (BackComposition, Recognition, Grounding, SkolemSimplification)
MAX_ROUNDS = 3


@dataclass
class NormalizationTrace:
    """Trees, counters and phase log of one normalization."""

    trees: List[HUTree] = field(default_factory=list)
    num_nodes: int = 0
    num_folds: int = 0
    rounds: int = 0
    phases: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.trees and self.rounds == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rounds": self.rounds,
            "num_nodes": self.num_nodes,
            "num_folds": self.num_folds,
            "trees": [tree.to_dict() for tree in self.trees],
            "phases": self.phases,
        }

    def save(self, path: Union[str, Path]) -> Path:
        """Write the trace as JSON."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        return path


class NormalizationManager:
    """Runs the normalization phases over a program until it is Harmless."""

    def __init__(
        self,
        folding: bool = True,
        budget: int = DEFAULT_NODE_BUDGET,
        workers: Optional[int] = None,
        max_rounds: int = MAX_ROUNDS,
    ):
        """Initialize normalization manager.

        Args:
            folding (bool): Fold nodes into their ancestors while building trees.
            budget (int): Maximum number of nodes per HU-tree.
            workers (Optional[int]): Threads used to build trees concurrently.
            max_rounds (int): Rounds allowed before giving up.
        """
        self.folding = folding
        self.budget = budget
        self.workers = workers
        self.max_rounds = max_rounds
        self.phases: List[Type[Phase]] = list(DEFAULT_PHASES)

    def register_phase(self, phase_class: Type[Phase]) -> None:
        """Append a phase run after the default ones."""
        self.phases.append(phase_class)

    def _round(self, program: Program, trace: NormalizationTrace) -> Program:
        affected = affected_positions(program)
        harmful_ids = {join.rule_id for join in harmful_joins(program, affected)}
        context = NormalizationContext(
            program=program,
            affected=affected,
            harmful_rules=[rule for rule in program.rules if rule.id in harmful_ids],
            predicates=FreshPredicates(program),
            folding=self.folding,
            budget=self.budget,
            workers=self.workers,
        )
        for phase_class in self.phases:
            phase = phase_class()
            phase.apply(context)
            trace.phases.append(phase.get_state())
        trace.trees.extend(context.trees)
        trace.num_nodes += sum(tree.num_nodes for tree in context.trees)
        trace.num_folds += sum(tree.num_folds for tree in context.trees)
        trace.rounds += 1

        rules = []
        for rule in program.rules:
            if rule.id in harmful_ids:
                rules.extend(context.replacements.get(rule.id, []))
            else:
                rules.append(rule)
        return program.with_rules(rules).validate()

    def normalize(self, program: Program) -> Tuple[Program, NormalizationTrace]:
        """Rewrite ``program`` into an equivalent Harmless Warded program.

        Raises:
            NotWarded: the input is not warded.
            BudgetExceeded: an HU-tree grew past the node budget.
            NormalizationError: the output still has harmful joins after
                ``max_rounds`` rounds, or lost wardedness.
        """
        warded, violations = is_warded(program)
        if not warded:
            raise NotWarded(violations)
        trace = NormalizationTrace()
        if not harmful_joins(program):
            logger.info("Program is already Harmless")
            return program, trace

        current = program
        for _ in range(self.max_rounds):
            current = self._round(current, trace)
            warded, violations = is_warded(current)
            if not warded:
                raise NormalizationError(
                    f"Normalized program is not warded: {'; '.join(str(v) for v in violations)}"
                )
            remaining = harmful_joins(current)
            if not remaining:
                logger.info(
                    "Normalized in %d round(s): %d nodes, %d fold checks",
                    trace.rounds,
                    trace.num_nodes,
                    trace.num_folds,
                )
                return current, trace
            logger.info("%d harmful join(s) left after round %d", len(remaining), trace.rounds)
        raise NormalizationError(
            f"Harmful joins remain after {self.max_rounds} rounds: "
            + ", ".join(f"{j.rule_id}/{j.variable}" for j in harmful_joins(current))
        )


def hje(program: Program, **options) -> Tuple[Program, NormalizationTrace]:
    """Harmful join elimination with default phases; see NormalizationManager."""
    return NormalizationManager(**options).normalize(program)
