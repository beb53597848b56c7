"""Base phase class for harmful join elimination."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional

from .functions.affectedness import Position
from .functions.transform import FreshPredicates
from .hutree import DEFAULT_NODE_BUDGET, HUTree
from .rulespec import Program, Rule

logger = logging.getLogger(__name__)


@dataclass
class NormalizationContext:
    """State threaded through the phases of one normalization round."""

    program: Program
    affected: FrozenSet[Position]
    harmful_rules: List[Rule]
    predicates: FreshPredicates
    folding: bool = True
    budget: int = DEFAULT_NODE_BUDGET
    workers: Optional[int] = None
    trees: List[HUTree] = field(default_factory=list)
    # root rule id -> rules that replace it in the output, in order
    replacements: Dict[str, List[Rule]] = field(default_factory=dict)


class Phase(ABC):
    """Base class for all normalization phases."""

    def __init__(self):
        """Initialize phase."""
        self.name = self._extract_name()
        self.ran = False
        self.details: Dict[str, Any] = {}

    def _extract_name(self) -> str:
        """Extract the phase name from the class name."""
        return self.__class__.__name__

    def apply(self, context: NormalizationContext) -> None:
        """Run the phase when it has work to do."""
        if not self.check_if_needed(context):
            logger.debug("Skipping phase %s", self.name)
            return
        logger.info("Running phase %s", self.name)
        self._run(context)
        self.ran = True

    @abstractmethod
    def check_if_needed(self, context: NormalizationContext) -> bool:
        """Check if the phase has work to do.

        Returns:
            bool: True if the phase should run, False otherwise.
        """

    @abstractmethod
    def _run(self, context: NormalizationContext) -> None:
        """Internal method doing the phase's work on ``context``."""

    def get_state(self) -> Dict[str, Any]:
        """Get phase state.

        Returns:
            Dict[str, Any]: Dictionary with the phase name and its counters.
        """
        return {
            "phase": self.name,
            "ran": self.ran,
            "details": self.details,
        }
