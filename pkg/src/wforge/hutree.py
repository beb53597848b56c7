"""Harmful unfolding trees.

A tree starts at a harmful join rule. Each node unfolds the first body
atom that still carries one of the root's join variables at an affected
position, once per cause of affectedness of that atom. A branch closes
when no such atom is left (a leaf) or when the node folds into one of its
ancestors.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .exceptions import BudgetExceeded, NonUnifiable, NotHarmfulJoin
from .functions.affectedness import Cause, Position, affected_positions, causes_of, rule_harmful_joins
from .functions.dialect import format_rule
from .functions.transform import fold, unfold_with_substitution
from .functions.unification import NameSupply, apply_term
from .rulespec import Atom, Program, Rule, Variable

logger = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10_000
FRESH_PREFIX = "U"


class NodeStatus(str, Enum):
    PENDING = "pending"
    EXPANDED = "expanded"
    LEAF = "leaf"
    FOLDED = "folded"


@dataclass
class HUNode:
    id: int
    rule: Rule
    parent: Optional[int] = None
    depth: int = 0
    cause: Optional[str] = None
    atom_index: Optional[int] = None
    children: List[int] = field(default_factory=list)
    status: NodeStatus = NodeStatus.PENDING
    fold_target: Optional[int] = None
    tracked: FrozenSet[Variable] = frozenset()

    @property
    def is_leaf(self) -> bool:
        return self.status in (NodeStatus.LEAF, NodeStatus.FOLDED)

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "depth": self.depth,
            "cause": self.cause,
            "atom": self.atom_index,
            "status": self.status.value,
            "fold": self.fold_target,
            "rule": format_rule(self.rule, with_id=False),
        }


@dataclass
class HUTree:
    root_rule: Rule
    nodes: List[HUNode] = field(default_factory=list)
    num_nodes: int = 0
    num_folds: int = 0

    @property
    def root(self) -> HUNode:
        return self.nodes[0]

    def ancestors(self, node: HUNode) -> List[HUNode]:
        """Ancestors of ``node``, nearest first."""
        chain = []
        while node.parent is not None:
            node = self.nodes[node.parent]
            chain.append(node)
        return chain

    def leaves(self) -> List[HUNode]:
        return [node for node in self.nodes if node.is_leaf]

    def fold_edges(self) -> List[Tuple[int, int]]:
        return [(node.id, node.fold_target) for node in self.nodes if node.fold_target is not None]

    @property
    def height(self) -> int:
        return max((node.depth for node in self.nodes), default=0)

    def to_dict(self) -> Dict:
        return {
            "root": self.root_rule.id,
            "num_nodes": self.num_nodes,
            "num_folds": self.num_folds,
            "nodes": [node.to_dict() for node in self.nodes],
        }


class HUTreeBuilder:
    """Builds HU-trees for the harmful join rules of one program.

    The builder caches causes per (predicate, positions) and shares one
    name supply across trees, so fresh variables never collide with the
    program's own names.
    """

    def __init__(
        self,
        program: Program,
        affected: Optional[Iterable[Position]] = None,
        folding: bool = True,
        budget: int = DEFAULT_NODE_BUDGET,
    ):
        self.program = program
        self.affected: Set[Position] = set(affected if affected is not None else affected_positions(program))
        self.folding = folding
        self.budget = budget
        self._causes: Dict[Tuple[str, Tuple[int, ...]], List[Cause]] = {}
        self._supply = NameSupply((v.name for r in program.rules for v in r.variables()), prefix=FRESH_PREFIX)

    def _causes_for(self, atom: Atom, positions: Tuple[int, ...]) -> List[Cause]:
        key = (atom.predicate, positions)
        if key not in self._causes:
            self._causes[key] = causes_of(self.program, atom, positions, self.affected)
        return self._causes[key]

    def select_atom(self, rule: Rule, tracked: FrozenSet[Variable]) -> Optional[Tuple[int, List[Cause]]]:
        """First body atom holding a tracked variable at an affected position with causes."""
        for index, atom in enumerate(rule.body):
            if atom.is_skolem or atom.is_dom:
                continue
            positions = tuple(
                offset + 1
                for offset, term in enumerate(atom.terms)
                if term in tracked and Position(atom.predicate, offset + 1) in self.affected
            )
            if not positions:
                continue
            causes = self._causes_for(atom, positions)
            if causes:
                return index, causes
        return None

    def _try_fold(self, tree: HUTree, node: HUNode) -> bool:
        for ancestor in tree.ancestors(node):
            tree.num_folds += 1
            folded = fold(node.rule, ancestor.rule, self._supply)
            if folded is not None:
                node.rule = folded
                node.fold_target = ancestor.id
                node.status = NodeStatus.FOLDED
                logger.debug("Node %d of %s folded into node %d", node.id, tree.root_rule.id, ancestor.id)
                return True
        return False

    def build(self, rule: Rule) -> HUTree:
        """Build the HU-tree rooted at ``rule``.

        Raises:
            NotHarmfulJoin: ``rule`` has no harmful join.
            BudgetExceeded: more than ``budget`` nodes were created.
        """
        joins = rule_harmful_joins(rule, self.affected)
        if not joins:
            raise NotHarmfulJoin(f"Rule {rule.id} has no harmful join")
        tracked = frozenset(Variable(join.variable) for join in joins)
        tree = HUTree(rule)
        tree.nodes.append(HUNode(0, rule, tracked=tracked))
        stack = [0]
        while stack:
            node = tree.nodes[stack.pop()]
            if node.parent is not None and self.folding and self._try_fold(tree, node):
                continue
            selected = self.select_atom(node.rule, node.tracked)
            if selected is None:
                node.status = NodeStatus.LEAF
                continue
            node.status = NodeStatus.EXPANDED
            index, causes = selected
            node.atom_index = index
            for cause in causes:
                try:
                    child_rule, subst = unfold_with_substitution(
                        node.rule, index, self.program.rule(cause.rule_id), self._supply
                    )
                except NonUnifiable as e:
                    logger.debug("Skipping cause %s of node %d: %s", cause.rule_id, node.id, e)
                    continue
                tree.num_nodes += 1
                if tree.num_nodes > self.budget:
                    raise BudgetExceeded(
                        f"HU-tree for {rule.id} exceeded the budget of {self.budget} nodes"
                    )
                child_tracked = frozenset(
                    image
                    for image in (apply_term(v, subst) for v in node.tracked)
                    if isinstance(image, Variable)
                )
                child = HUNode(
                    id=len(tree.nodes),
                    rule=child_rule,
                    parent=node.id,
                    depth=node.depth + 1,
                    cause=cause.rule_id,
                    atom_index=None,
                    tracked=child_tracked,
                )
                tree.nodes.append(child)
                node.children.append(child.id)
                stack.append(child.id)
        logger.info(
            "HU-tree for %s: %d nodes, %d fold checks, %d leaves",
            rule.id,
            tree.num_nodes,
            tree.num_folds,
            len(tree.leaves()),
        )
        return tree


def back_composition(
    program: Program,
    rule: Rule,
    folding: bool = True,
    budget: int = DEFAULT_NODE_BUDGET,
    affected: Optional[Iterable[Position]] = None,
) -> HUTree:
    return HUTreeBuilder(program, affected, folding, budget).build(rule)
