"""Canonical forms of rules.

Two rules are considered equal when their canonical forms coincide: body
atoms are ordered by predicate and variables are renamed ``V0, V1, ...``
in order of first occurrence. Atoms sharing a predicate are tried in
every order (up to a bound) and the smallest rendering wins, so
renamings and reorderings of the same rule compare equal.
"""

import itertools
from typing import Dict, List, Sequence, Tuple

from ..rulespec import Atom, Rule, Variable
from .unification import rename_rule

CANONICAL_PREFIX = "V"
MAX_ORDERINGS = 720

RuleKey = Tuple[str, ...]


def _renaming(rule: Rule, body: Sequence[Atom]) -> Dict[Variable, Variable]:
    renaming: Dict[Variable, Variable] = {}
    atoms = list(body) + [rule.head]
    for atom in atoms:
        for var in atom.variables():
            if var not in renaming:
                renaming[var] = Variable(f"{CANONICAL_PREFIX}{len(renaming)}")
    for cond in rule.conditions:
        for var in cond.variables():
            if var not in renaming:
                renaming[var] = Variable(f"{CANONICAL_PREFIX}{len(renaming)}")
    return renaming


def _orderings(body: Sequence[Atom]) -> List[Tuple[Atom, ...]]:
    ordered = sorted(body, key=lambda atom: atom.predicate)
    groups = [list(group) for _, group in itertools.groupby(ordered, key=lambda atom: atom.predicate)]
    total = 1
    for group in groups:
        for k in range(2, len(group) + 1):
            total *= k
    if total > MAX_ORDERINGS:
        return [tuple(ordered)]
    choices = [itertools.permutations(group) for group in groups]
    return [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*choices)]


def _render(rule: Rule) -> RuleKey:
    conditions = sorted(str(cond) for cond in rule.conditions)
    existentials = ",".join(sorted(rule.existentials))
    return tuple(str(atom) for atom in rule.body) + ("->", str(rule.head), existentials) + tuple(conditions)


def canonicalize(rule: Rule) -> Rule:
    """Return the canonical variant of ``rule`` (the id is kept)."""
    best = None
    best_key = None
    for body in _orderings(rule.body):
        reordered = Rule(rule.id, body, rule.head, rule.existentials, rule.conditions)
        candidate = rename_rule(reordered, _renaming(rule, body))
        candidate = Rule(
            candidate.id,
            candidate.body,
            candidate.head,
            candidate.existentials,
            tuple(sorted(candidate.conditions, key=str)),
        )
        key = _render(candidate)
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    return best


def rule_key(rule: Rule) -> RuleKey:
    """Hashable identity of a rule up to renaming and body order."""
    return _render(canonicalize(rule))


def same_rule(left: Rule, right: Rule) -> bool:
    return rule_key(left) == rule_key(right)
