"""Sample programs shared by the tests."""

import itertools
from typing import List, Tuple

from wforge.functions.dialect import parse
from wforge.rulespec import Program

# idb1 is affected through s1 directly, idb2 through s2 and then s1
HU_EXAMPLE = """
@input e1
@output out
s1: idb1(X, ?Z) :- e1(X).
s2: idb2(Y, X) :- idb1(X, Y).
rho: out(X, W) :- idb1(X, Y), idb2(Y, W).
"""

# beta carries the null of s1 along edges; without folding the tree never closes
RECURSIVE_BETA = """
@input start
@input edge
@output out
s1: reach(X, ?Z) :- start(X).
beta: reach(X2, Y) :- reach(X, Y), edge(X, X2).
s2: tag(Y, X) :- reach(X, Y).
rho: out(X, W) :- reach(X, Y), tag(Y, W).
"""

HARMLESS = """
@input e
@output t
t1: t(X, Y) :- e(X, Y).
t2: t(X, Z) :- t(X, Y), e(Y, Z).
"""

NOT_WARDED = """
@input e
@output p
n1: q(X, ?Z) :- e(X).
n2: r(Z, X) :- q(X, Z).
n3: p(Y, Z) :- q(X, Y), r(Y, Z).
"""

TRANSITIVE_CLOSURE = HARMLESS


def hu_example() -> Program:
    return parse(HU_EXAMPLE)


def recursive_beta() -> Program:
    return parse(RECURSIVE_BETA)


def kd_family_text(k: int, d: int) -> str:
    """Harmful join whose left atom has ``k`` causes on each of ``d`` levels.

    ``a0`` is reached from ``a1`` by ``k`` rules, ``a1`` from ``a2`` and so
    on down to ``a<d>``, which gets its null from ``delta``. The right atom
    ``b0`` has the single direct cause ``gamma``.
    """
    lines = ["@input base", "@input bb", "@output out"]
    for level in range(1, d + 1):
        lines.append(f"@input c{level}_1")
        for i in range(2, k + 1):
            lines.append(f"@input c{level}_{i}")
    lines.append(f"delta: a{d}(X, ?Z) :- base(X).")
    for level in range(1, d + 1):
        for i in range(1, k + 1):
            lines.append(f"s{level}_{i}: a{level - 1}(X, Y) :- a{level}(X, Y), c{level}_{i}(X).")
    lines.append("gamma: b0(?Z, W) :- bb(W).")
    lines.append("rho: out(X, W) :- a0(X, Y), b0(Y, W).")
    return "\n".join(lines) + "\n"


def kd_family(k: int, d: int) -> Program:
    return parse(kd_family_text(k, d))


def kd_family_paths(k: int, d: int) -> List[Tuple[str, ...]]:
    """Every root-to-leaf sequence of causes in the HU-tree of ``rho``."""
    levels = [[f"s{level}_{i}" for i in range(1, k + 1)] for level in range(1, d + 1)]
    return [tuple(choice) + ("delta", "gamma") for choice in itertools.product(*levels)]


def prefix_counts(paths: List[Tuple[str, ...]]) -> Tuple[int, int]:
    """(distinct nonempty prefixes, sum of their lengths) over ``paths``."""
    prefixes = {path[:n] for path in paths for n in range(1, len(path) + 1)}
    return len(prefixes), sum(len(prefix) for prefix in prefixes)


# the null of delta reaches both sides of rho through either of two mirrored chains
SYMMETRIC_CHAINS = """
@input base
@input c
@input d
@output out
delta: a(X, ?Z) :- base(X).
l1: b(X, Y) :- a(X, Y), c(X).
l2: b(X, Y) :- a(X, Y), d(X).
rho: out(X, W) :- b(X, Y), b(W, Y).
"""


def symmetric_chains() -> Program:
    return parse(SYMMETRIC_CHAINS)
