"""Rule transformations used by harmful join elimination: unfold, fold, grounding and Skolem simplification."""

import itertools
import logging
import re
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Set, Tuple

from ..exceptions import NonUnifiable, NotHarmfulJoin, PredicateMismatch
from ..rulespec import Atom, Program, Rule, SkolemTerm, Variable, dom_predicate, skolem_functor, term_variables
from .affectedness import Position, rule_harmful_joins
from .canonical import RuleKey, rule_key
from .homomorphism import homomorphisms, index_atoms
from .unification import (
    NameSupply,
    Substitution,
    apply_atom,
    apply_condition,
    apply_rule,
    apply_term,
    rename_apart,
    rename_atom,
    rename_condition,
    unify,
    unify_atoms,
)

logger = logging.getLogger(__name__)

GROUNDED_SUFFIX = "__g"
_GROUNDED = re.compile(r"__g(\d+)$")


class FreshPredicates:
    """Counter for grounded copies ``<pred>__g<k>``; never reuses a suffix."""

    def __init__(self, program: Optional[Program] = None):
        start = 1
        if program is not None:
            for predicate in program.arities():
                match = _GROUNDED.search(predicate)
                if match:
                    start = max(start, int(match.group(1)) + 1)
        self._counter = itertools.count(start)

    def fresh(self, predicate: str) -> str:
        base = _GROUNDED.sub("", predicate)
        return f"{base}{GROUNDED_SUFFIX}{next(self._counter)}"


def unfold(rule: Rule, atom_index: int, cause: Rule, supply: Optional[NameSupply] = None) -> Rule:
    return unfold_with_substitution(rule, atom_index, cause, supply)[0]


def unfold_with_substitution(
    rule: Rule, atom_index: int, cause: Rule, supply: Optional[NameSupply] = None
) -> Tuple[Rule, Substitution]:
    """Resolve ``rule.body[atom_index]`` with the head of ``cause``.

    Each existential of the cause that meets a rule variable ``y`` becomes
    a Skolem-binding atom ``sk_<cause>_<z>(frontier..., y)`` appended to
    the body.

    Raises:
        PredicateMismatch: the cause does not define the atom's predicate.
        NonUnifiable: the atom and the cause head clash, or an existential
            would have to equal a constant, a frontier value or another
            existential.
    """
    atom = rule.body[atom_index]
    if cause.head.predicate != atom.predicate or cause.head.arity != atom.arity:
        raise PredicateMismatch(f"Cause {cause.id} defines {cause.head.predicate}, not {atom.predicate}")
    if supply is None:
        supply = NameSupply(v.name for r in (rule, cause) for v in r.variables())
    renamed = rename_apart(cause, supply)
    cause_vars = set(renamed.variables())
    subst = unify_atoms(renamed.head, atom, prefer=cause_vars)

    frontier = renamed.frontier
    frontier_images = {apply_term(v, subst) for v in frontier}
    bound_images: Set = set()
    skolem_atoms: List[Atom] = []
    original_names = dict(zip((v.name for v in renamed.variables()), (v.name for v in cause.variables())))
    for name in sorted(renamed.existentials):
        image = apply_term(Variable(name), subst)
        if not isinstance(image, Variable):
            raise NonUnifiable(f"Existential of {cause.id} meets {image}")
        if image in frontier_images or image in bound_images:
            raise NonUnifiable(f"Existential of {cause.id} would equal a known value {image}")
        bound_images.add(image)
        functor = skolem_functor(cause.id, original_names[name])
        skolem_atoms.append(Atom(functor, tuple(apply_term(v, subst) for v in frontier) + (image,)))

    touches_rule = any(var not in cause_vars for var in subst)
    before = rule.body[:atom_index]
    after = rule.body[atom_index + 1:]
    conditions = rule.conditions
    if touches_rule:
        before = tuple(apply_atom(a, subst) for a in before)
        after = tuple(apply_atom(a, subst) for a in after)
        conditions = tuple(apply_condition(c, subst) for c in conditions)
    spliced = tuple(apply_atom(a, subst) for a in renamed.body)
    unfolded = replace(
        rule,
        body=before + spliced + after + tuple(skolem_atoms),
        head=apply_atom(rule.head, subst) if touches_rule else rule.head,
        conditions=conditions + tuple(apply_condition(c, subst) for c in renamed.conditions),
    )
    return unfolded, subst


def fold(rule: Rule, ancestor: Rule, supply: Optional[NameSupply] = None) -> Optional[Rule]:
    """Replace a copy of ``ancestor``'s body inside ``rule`` by its head.

    The copy is found through an injective variable renaming onto distinct
    body atoms. Variables internal to the ancestor must map to variables
    used nowhere else in ``rule``, and the ancestor's conditions must be
    among the rule's. Returns None when no copy exists.
    """
    if len(ancestor.body) > len(rule.body):
        return None
    target = index_atoms(rule.body)
    internal = set(ancestor.body_variables()) - set(ancestor.head_variables())
    rule_conditions = set(rule.conditions)
    for mapping, chosen in homomorphisms(ancestor.body, target, injective=True, distinct_atoms=True):
        if not all(isinstance(image, Variable) for image in mapping.values()):
            continue
        mapped_conditions = [rename_condition(c, mapping) for c in ancestor.conditions]
        if not set(mapped_conditions) <= rule_conditions:
            continue
        remaining_conditions = [c for c in rule.conditions if c not in set(mapped_conditions)]
        outside: Set[Variable] = set(rule.head_variables())
        for index, atom in enumerate(rule.body):
            if index not in chosen:
                outside.update(atom.variables())
        for cond in remaining_conditions:
            outside.update(cond.variables())
        if any(mapping[var] in outside for var in internal):
            continue
        if supply is None:
            supply = NameSupply(v.name for v in rule.variables())
        head_mapping: Dict = dict(mapping)
        for name in sorted(ancestor.existentials):
            head_mapping[Variable(name)] = supply.fresh(name)
        folded_head = rename_atom(ancestor.head, head_mapping)
        first = min(chosen)
        body = []
        for index, atom in enumerate(rule.body):
            if index == first:
                body.append(folded_head)
            elif index not in chosen:
                body.append(atom)
        return replace(rule, body=tuple(body), conditions=tuple(remaining_conditions))
    return None


def _harmful_variables(rule: Rule, affected: Iterable[Position]) -> List[Variable]:
    names = {join.variable for join in rule_harmful_joins(rule, affected)}
    return [v for v in rule.body_variables() if v.name in names]


def grounding(rule: Rule, affected: Iterable[Position], predicates: FreshPredicates) -> List[Rule]:
    """Rewrite a harmful join to run over the active domain.

    For the atom ``A`` holding every harmful join variable ``h``::

        dom_n(h), A -> A'
        A' -> A
        rule with A replaced by A'

    When no single atom holds them all, a greedy cover of atoms gets one
    such pair each, followed by the rewritten rule.

    Raises:
        NotHarmfulJoin: the rule joins no atoms on a harmful variable.
    """
    harmful = _harmful_variables(rule, affected)
    if not harmful:
        raise NotHarmfulJoin(f"Rule {rule.id} has no harmful join")
    uncovered = list(harmful)
    cover: List[int] = []
    while uncovered:
        best = max(
            (i for i, atom in enumerate(rule.body) if not (atom.is_dom or atom.is_skolem)),
            key=lambda i: (sum(1 for v in uncovered if v in rule.body[i].variables()), -i),
        )
        cover.append(best)
        held = set(rule.body[best].variables())
        uncovered = [v for v in uncovered if v not in held]

    emitted: List[Rule] = []
    body = list(rule.body)
    counter = itertools.count(1)
    for index in sorted(cover):
        atom = rule.body[index]
        covered = [v for v in harmful if v in atom.variables()]
        grounded = Atom(predicates.fresh(atom.predicate), atom.terms)
        emitted.append(Rule(f"{rule.id}_g{next(counter)}", (Atom(dom_predicate(len(covered)), tuple(covered)), atom), grounded))
        emitted.append(Rule(f"{rule.id}_g{next(counter)}", (grounded,), atom))
        body[index] = grounded
    emitted.append(replace(rule, id=f"{rule.id}_g{next(counter)}", body=tuple(body)))
    logger.debug("Grounded %s over %s", rule.id, ", ".join(v.name for v in harmful))
    return emitted


def _skolem_bindings(rule: Rule, subst: Substitution) -> Substitution:
    """Unify Skolem-binding atoms until they agree with each other.

    The same bound variable under two atoms forces equal Skolem terms; the
    same Skolem term under two atoms forces equal bound variables.

    Raises:
        NonUnifiable: the bindings can never hold together.
    """
    while True:
        by_bound: Dict[Variable, SkolemTerm] = {}
        by_term: Dict[SkolemTerm, Variable] = {}
        before = dict(subst)
        for atom in rule.body:
            if not atom.is_skolem:
                continue
            bound = apply_term(atom.terms[-1], subst)
            term = apply_term(SkolemTerm(atom.predicate, atom.terms[:-1]), subst)
            if not isinstance(bound, Variable):
                raise NonUnifiable(f"Skolem value bound to {bound}")
            if bound in set(term_variables(term)):
                raise NonUnifiable(f"{bound} would contain itself")
            if bound in by_bound:
                subst = unify(by_bound[bound], term, subst)
            else:
                by_bound[bound] = term
            if term in by_term and by_term[term] != bound:
                subst = unify(by_term[term], bound, subst)
            else:
                by_term.setdefault(term, bound)
        if subst == before:
            return subst


def simplify_rule(rule: Rule) -> Optional[Rule]:
    """Simplify the Skolem-binding atoms of ``rule``.

    Returns None when the rule can never fire: two distinct Skolem
    functors would have to agree, or a Skolem value would have to be a
    constant, an active-domain value or take part in a comparison.
    """
    try:
        subst = _skolem_bindings(rule, {})
        rule = apply_rule(rule, subst)
    except NonUnifiable as e:
        logger.debug("Dropping %s: %s", rule.id, e)
        return None
    skolem_values = {atom.terms[-1] for atom in rule.body if atom.is_skolem}
    for atom in rule.body:
        if atom.is_dom and skolem_values & set(atom.terms):
            return None
    for cond in rule.conditions:
        if skolem_values & {cond.left, cond.right}:
            return None

    body: List[Atom] = []
    for atom in rule.body:
        if atom not in body:
            body.append(atom)
    kept = []
    for index, atom in enumerate(body):
        if atom.is_skolem:
            bound = atom.terms[-1]
            used = bound in rule.head.terms or any(
                bound in set(other.variables()) for j, other in enumerate(body) if j != index
            )
            if not used:
                continue
        kept.append(atom)
    conditions = list(dict.fromkeys(rule.conditions))
    if rule.head in kept:
        return None
    return replace(rule, body=tuple(kept), conditions=tuple(conditions))


def skolem_simplify(rules: Iterable[Rule], seen: Optional[Set[RuleKey]] = None) -> List[Rule]:
    """Simplify every rule, drop the ones that never fire, then deduplicate.

    ``seen`` carries canonical keys across calls so several rule groups
    share one deduplication pool.
    """
    if seen is None:
        seen = set()
    result = []
    for rule in rules:
        simplified = simplify_rule(rule)
        if simplified is None:
            continue
        key = rule_key(simplified)
        if key in seen:
            logger.debug("Dropping %s: duplicate rule", rule.id)
            continue
        seen.add(key)
        result.append(simplified)
    return result


def subsumes(general: Rule, specific: Rule) -> bool:
    """Whether ``general`` derives everything ``specific`` derives.

    Holds when a variable mapping sends the head of ``general`` onto the head
    of ``specific``, its body into the body of ``specific`` (Skolem-binding
    atoms only match atoms of the same functor) and its conditions among
    those of ``specific``. Existential head variables must map one-to-one
    onto existential head variables.
    """
    if (general.head.predicate, general.head.arity) != (specific.head.predicate, specific.head.arity):
        return False
    if len(general.existentials) != len(specific.existentials):
        return False
    conditions = set(specific.conditions)
    for head_mapping, _ in homomorphisms([general.head], index_atoms([specific.head])):
        images = [head_mapping[Variable(name)] for name in general.existentials]
        if len(set(images)) != len(images):
            continue
        if not all(isinstance(image, Variable) and image.name in specific.existentials for image in images):
            continue
        frontier = [var for var in general.head_variables() if var.name not in general.existentials]
        if any(
            isinstance(head_mapping[var], Variable) and head_mapping[var].name in specific.existentials
            for var in frontier
        ):
            continue
        for mapping, _ in homomorphisms(general.body, index_atoms(specific.body), initial=head_mapping):
            if all(rename_condition(c, mapping) in conditions for c in general.conditions):
                return True
    return False


def merge_leaves(rules: Iterable[Rule], fixed: Iterable[Rule] = ()) -> List[Rule]:
    """Keep only rules no other rule subsumes, first occurrence winning.

    ``fixed`` rules are never dropped but may subsume members of ``rules``.
    """
    fixed = list(fixed)
    kept: List[Rule] = []
    for rule in rules:
        if any(subsumes(other, rule) for other in itertools.chain(fixed, kept)):
            logger.debug("Merging %s into a more general rule", rule.id)
            continue
        kept = [other for other in kept if not subsumes(rule, other)]
        kept.append(rule)
    return kept
