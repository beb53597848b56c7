"""The four phases of harmful join elimination."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Set

from .base import NormalizationContext, Phase
from .functions.canonical import RuleKey, rule_key
from .functions.transform import grounding, merge_leaves, skolem_simplify
from .hutree import HUTree, HUTreeBuilder

logger = logging.getLogger(__name__)


class BackComposition(Phase):
    """Build one HU-tree per harmful join rule."""

    def check_if_needed(self, context: NormalizationContext) -> bool:
        return bool(context.harmful_rules)

    def _build(self, context: NormalizationContext, rule) -> HUTree:
        builder = HUTreeBuilder(context.program, context.affected, context.folding, context.budget)
        return builder.build(rule)

    def _run(self, context: NormalizationContext) -> None:
        rules = context.harmful_rules
        if context.workers and context.workers > 1 and len(rules) > 1:
            with ThreadPoolExecutor(max_workers=context.workers) as pool:
                context.trees = list(pool.map(lambda rule: self._build(context, rule), rules))
        else:
            context.trees = [self._build(context, rule) for rule in rules]
        self.details = {
            "trees": len(context.trees),
            "num_nodes": sum(tree.num_nodes for tree in context.trees),
            "num_folds": sum(tree.num_folds for tree in context.trees),
        }


class Recognition(Phase):
    """Merge trees with equal roots and pool their leaves without duplicates."""

    def check_if_needed(self, context: NormalizationContext) -> bool:
        return bool(context.trees)

    def _run(self, context: NormalizationContext) -> None:
        roots: Dict[RuleKey, HUTree] = {}
        retained: List[HUTree] = []
        for tree in context.trees:
            key = rule_key(tree.root_rule)
            if key in roots:
                logger.debug("Tree of %s merged into %s", tree.root_rule.id, roots[key].root_rule.id)
                context.replacements[tree.root_rule.id] = []
                continue
            roots[key] = tree
            retained.append(tree)

        seen: Set[RuleKey] = set()
        duplicates = 0
        for tree in retained:
            leaves = []
            for number, node in enumerate(tree.leaves(), start=1):
                key = rule_key(node.rule)
                if key in seen:
                    duplicates += 1
                    continue
                seen.add(key)
                leaves.append(node.rule.with_id(f"{tree.root_rule.id}_l{number}"))
            context.replacements[tree.root_rule.id] = leaves
        self.details = {
            "retained": len(retained),
            "merged": len(context.trees) - len(retained),
            "duplicate_leaves": duplicates,
        }
        context.trees = retained


class Grounding(Phase):
    """Add the active-domain rewriting of every retained root."""

    def check_if_needed(self, context: NormalizationContext) -> bool:
        return bool(context.trees)

    def _run(self, context: NormalizationContext) -> None:
        emitted = 0
        for tree in context.trees:
            rules = grounding(tree.root_rule, context.affected, context.predicates)
            context.replacements[tree.root_rule.id].extend(rules)
            emitted += len(rules)
        self.details = {"grounding_rules": emitted}


class SkolemSimplification(Phase):
    """Simplify Skolem-binding atoms, drop rules that never fire and merge subsumed ones."""

    def check_if_needed(self, context: NormalizationContext) -> bool:
        return any(context.replacements.values())

    def _run(self, context: NormalizationContext) -> None:
        seen: Set[RuleKey] = {
            rule_key(rule) for rule in context.program.rules if rule.id not in context.replacements
        }
        before = sum(len(rules) for rules in context.replacements.values())
        for rule in context.program.rules:
            if rule.id in context.replacements:
                context.replacements[rule.id] = skolem_simplify(context.replacements[rule.id], seen)
        fixed = [rule for rule in context.program.rules if rule.id not in context.replacements]
        pool = [leaf for rule in context.program.rules for leaf in context.replacements.get(rule.id, [])]
        survivors = set(merge_leaves(pool, fixed))
        for rule_id, rules in context.replacements.items():
            context.replacements[rule_id] = [rule for rule in rules if rule in survivors]
        after = sum(len(rules) for rules in context.replacements.values())
        self.details = {"before": before, "after": after}
