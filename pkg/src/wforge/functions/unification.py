"""Substitutions, most general unifiers and renaming apart."""

import itertools
from dataclasses import replace
from typing import Callable, Dict, Iterable, Optional, Set

from ..exceptions import NonUnifiable
from ..rulespec import Atom, Condition, Rule, SkolemTerm, Term, Variable

Substitution = Dict[Variable, Term]


class NameSupply:
    """Hands out variable names that never clash with ``avoid``."""

    def __init__(self, avoid: Iterable[str] = (), prefix: str = "G"):
        self._used: Set[str] = set(avoid)
        self._prefix = prefix
        self._counter = itertools.count(1)

    def fresh(self, hint: Optional[str] = None) -> Variable:
        """Return an unused variable.

        Args:
            hint: Name the fresh variable derives from, e.g. ``X`` gives ``X_G1``.

        Returns:
            A variable whose name is now reserved.
        """
        base = self._prefix if hint is None else f"{hint}_{self._prefix}"
        while True:
            name = f"{base}{next(self._counter)}"
            if name not in self._used:
                self._used.add(name)
                return Variable(name)


def walk(term: Term, subst: Substitution) -> Term:
    """Follow variable bindings in ``subst`` until an unbound term is reached."""
    while isinstance(term, Variable) and term in subst:
        term = subst[term]
    return term


def apply_term(term: Term, subst: Substitution) -> Term:
    """Fully resolve ``term`` under ``subst``, including Skolem arguments."""
    term = walk(term, subst)
    if isinstance(term, SkolemTerm):
        return SkolemTerm(term.functor, tuple(apply_term(a, subst) for a in term.args))
    return term


def apply_atom(atom: Atom, subst: Substitution) -> Atom:
    if not subst:
        return atom
    return Atom(atom.predicate, tuple(apply_term(t, subst) for t in atom.terms))


def apply_condition(cond: Condition, subst: Substitution) -> Condition:
    return Condition(apply_term(cond.left, subst), cond.op, apply_term(cond.right, subst))


def rename_term(term: Term, renaming: Substitution) -> Term:
    """Simultaneous (single-step) replacement, unlike :func:`apply_term`."""
    if isinstance(term, Variable):
        return renaming.get(term, term)
    if isinstance(term, SkolemTerm):
        return SkolemTerm(term.functor, tuple(rename_term(a, renaming) for a in term.args))
    return term


def rename_atom(atom: Atom, renaming: Substitution) -> Atom:
    """Rename the variables of ``atom`` in one step; see :func:`rename_term`."""
    return Atom(atom.predicate, tuple(rename_term(t, renaming) for t in atom.terms))


def rename_condition(cond: Condition, renaming: Substitution) -> Condition:
    return Condition(rename_term(cond.left, renaming), cond.op, rename_term(cond.right, renaming))


def rename_rule(rule: Rule, renaming: Substitution) -> Rule:
    """Rename every variable of ``rule`` in one step, existentials included."""
    return _map_rule(rule, lambda term: rename_term(term, renaming))


def apply_rule(rule: Rule, subst: Substitution) -> Rule:
    """Apply ``subst`` everywhere; existentials follow variable renamings."""
    if not subst:
        return rule
    return _map_rule(rule, lambda term: apply_term(term, subst))


def _map_rule(rule: Rule, image_of: Callable[[Term], Term]) -> Rule:
    existentials = set()
    for name in rule.existentials:
        image = image_of(Variable(name))
        if not isinstance(image, Variable):
            raise NonUnifiable(f"Existential {name} of {rule.id} cannot be bound to {image}")
        existentials.add(image.name)
    return replace(
        rule,
        body=tuple(Atom(a.predicate, tuple(image_of(t) for t in a.terms)) for a in rule.body),
        head=Atom(rule.head.predicate, tuple(image_of(t) for t in rule.head.terms)),
        existentials=frozenset(existentials),
        conditions=tuple(Condition(image_of(c.left), c.op, image_of(c.right)) for c in rule.conditions),
    )


def occurs_in(var: Variable, term: Term, subst: Substitution) -> bool:
    """True if ``var`` occurs in ``term`` once bindings are followed."""
    term = walk(term, subst)
    if term == var:
        return True
    if isinstance(term, SkolemTerm):
        return any(occurs_in(var, a, subst) for a in term.args)
    return False


def unify(p: Term, q: Term, subst: Optional[Substitution] = None, prefer: Optional[Set[Variable]] = None) -> Substitution:
    """Robinson unification extending ``subst``.

    When two variables meet, the one in ``prefer`` is bound so that the
    other side's names survive.

    Raises:
        NonUnifiable: constants, nulls or Skolem functors clash, or the
            occurs check fails.
    """
    subst = dict(subst or {})
    stack = [(p, q)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, subst), walk(b, subst)
        if a == b:
            continue
        if isinstance(a, Variable) and isinstance(b, Variable):
            if prefer is not None and b in prefer and a not in prefer:
                a, b = b, a
            subst[a] = b
        elif isinstance(a, Variable) or isinstance(b, Variable):
            var, other = (a, b) if isinstance(a, Variable) else (b, a)
            if occurs_in(var, other, subst):
                raise NonUnifiable(f"{var} occurs in {other}")
            subst[var] = other
        elif isinstance(a, SkolemTerm) and isinstance(b, SkolemTerm):
            if a.functor != b.functor or len(a.args) != len(b.args):
                raise NonUnifiable(f"Distinct Skolem functors {a.functor} and {b.functor}")
            stack.extend(zip(a.args, b.args))
        else:
            # constants, nulls or a clash between kinds
            raise NonUnifiable(f"Cannot unify {a} with {b}")
    return subst


def unify_atoms(a: Atom, b: Atom, subst: Optional[Substitution] = None, prefer: Optional[Set[Variable]] = None) -> Substitution:
    """Unify two atoms argument by argument.

    Args:
        a: First atom.
        b: Second atom.
        subst: Bindings to extend.
        prefer: Variables to bind first when two variables meet.

    Returns:
        The extended substitution.

    Raises:
        NonUnifiable: the predicates differ or some arguments clash.
    """
    if a.predicate != b.predicate or a.arity != b.arity:
        raise NonUnifiable(f"Cannot unify {a} with {b}")
    subst = dict(subst or {})
    for x, y in zip(a.terms, b.terms):
        subst = unify(x, y, subst, prefer)
    return subst


def rename_apart(rule: Rule, supply: NameSupply) -> Rule:
    """Copy of ``rule`` whose variables are all fresh in ``supply``."""
    renaming: Substitution = {var: supply.fresh(var.name) for var in rule.variables()}
    return rename_rule(rule, renaming)
