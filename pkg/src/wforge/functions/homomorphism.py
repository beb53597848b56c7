"""Backtracking search for homomorphisms between atom sets.

One matcher serves the chase (rule bodies onto facts), fold (ancestor
bodies onto rule bodies) and the equivalence check (instances with nulls
onto instances).
"""

from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Type

from ..rulespec import Atom, Term, Variable

Mapping = Dict[Term, Term]
AtomIndex = Dict[Tuple[str, int], List[Tuple[int, Atom]]]


def index_atoms(atoms: Iterable[Atom]) -> AtomIndex:
    """Group atoms by (predicate, arity), remembering their position."""
    index: AtomIndex = {}
    for position, atom in enumerate(atoms):
        index.setdefault((atom.predicate, atom.arity), []).append((position, atom))
    return index


def _extend(
    pattern: Atom,
    target: Atom,
    mapping: Mapping,
    mappable: Tuple[Type, ...],
    injective: bool,
    images: Set[Term],
) -> Optional[Tuple[Mapping, Set[Term]]]:
    new_mapping = mapping
    new_images = images
    copied = False
    for source, image in zip(pattern.terms, target.terms):
        if isinstance(source, mappable):
            bound = new_mapping.get(source)
            if bound is not None:
                if bound != image:
                    return None
                continue
            if injective and image in new_images:
                return None
            if not copied:
                new_mapping, new_images, copied = dict(mapping), set(images), True
            new_mapping[source] = image
            new_images.add(image)
        elif source != image:
            return None
    return new_mapping, new_images


def homomorphisms(
    pattern: Sequence[Atom],
    target: AtomIndex,
    initial: Optional[Mapping] = None,
    mappable: Tuple[Type, ...] = (Variable,),
    injective: bool = False,
    distinct_atoms: bool = False,
) -> Iterator[Tuple[Mapping, Tuple[int, ...]]]:
    """Yield every mapping sending ``pattern`` into ``target``.

    Args:
        pattern: atoms whose ``mappable`` terms act as variables; other
            terms must match exactly.
        target: result of :func:`index_atoms`.
        initial: bindings every result must extend.
        mappable: term classes that may be mapped.
        injective: distinct pattern terms need distinct images.
        distinct_atoms: distinct pattern atoms need distinct target atoms.

    Yields:
        (mapping, positions) where ``positions[i]`` is the target position
        chosen for ``pattern[i]``.
    """
    mapping: Mapping = dict(initial or {})
    images: Set[Term] = set(mapping.values()) if injective else set()
    chosen: List[int] = []

    def search(i: int, mapping: Mapping, images: Set[Term]) -> Iterator[Tuple[Mapping, Tuple[int, ...]]]:
        if i == len(pattern):
            yield mapping, tuple(chosen)
            return
        atom = pattern[i]
        for position, candidate in target.get((atom.predicate, atom.arity), ()):
            if distinct_atoms and position in chosen:
                continue
            extended = _extend(atom, candidate, mapping, mappable, injective, images)
            if extended is None:
                continue
            chosen.append(position)
            yield from search(i + 1, *extended)
            chosen.pop()

    yield from search(0, mapping, images)


def find_homomorphism(
    pattern: Sequence[Atom],
    target: AtomIndex,
    initial: Optional[Mapping] = None,
    mappable: Tuple[Type, ...] = (Variable,),
) -> Optional[Mapping]:
    for mapping, _ in homomorphisms(pattern, target, initial, mappable):
        return mapping
    return None
