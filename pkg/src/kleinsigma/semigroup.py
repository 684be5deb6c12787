"""Numerical semigroups: gaps, weights, Young diagrams and the Buchweitz test.

A numerical semigroup is given by a list of generators with gcd 1.  All
quantities here are exact integers; nothing is cached beyond the frozen
dataclass fields.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import reduce
from math import gcd

from .errors import InfiniteComplement


def _check_generators(generators) -> tuple[int, ...]:
    gens = tuple(sorted({int(a) for a in generators}))
    if not gens or gens[0] <= 0:
        raise ValueError("generators must be positive integers")
    if reduce(gcd, gens) != 1:
        raise InfiniteComplement(f"gcd of {list(gens)} is not 1")
    return gens


def apery_set(generators) -> list[int]:
    """Smallest semigroup element in each residue class mod the least generator.

    Dijkstra over the residues, exact and linear in the Frobenius number.
    """
    gens = _check_generators(generators)
    m = gens[0]
    best: list[int | None] = [None] * m
    heap = [(0, 0)]
    while heap:
        v, r = heapq.heappop(heap)
        if best[r] is not None:
            continue
        best[r] = v
        for a in gens[1:]:
            s = (v + a) % m
            if best[s] is None:
                heapq.heappush(heap, (v + a, s))
    return best


def gaps(generators) -> list[int]:
    """Sorted list of non-negative integers not in the semigroup."""
    ap = apery_set(generators)
    m = len(ap)
    out = []
    for r, w in enumerate(ap):
        out.extend(range(r, w, m))
    return sorted(out)


def minimal_generators(generators) -> tuple[int, ...]:
    """Drop every generator that is a sum of smaller semigroup elements."""
    gens = _check_generators(generators)
    top = max(gens)
    reach = [False] * (top + 1)
    reach[0] = True
    minimal = []
    for a in gens:
        if reach[a]:
            continue
        minimal.append(a)
        for v in range(a, top + 1):
            if reach[v - a]:
                reach[v] = True
    return tuple(minimal)


@dataclass(frozen=True)
class GapProfile:
    alpha: tuple[int, ...]
    weight: int
    young: tuple[int, ...]
    alpha_min: int


@dataclass(frozen=True)
class NumericalSemigroup:
    generators: tuple[int, ...]
    gaps: tuple[int, ...] = field(init=False)

    def __init__(self, generators):
        object.__setattr__(self, "generators", minimal_generators(generators))
        object.__setattr__(self, "gaps", tuple(gaps(self.generators)))

    @property
    def genus(self) -> int:
        return len(self.gaps)

    @property
    def frobenius(self) -> int:
        return self.gaps[-1] if self.gaps else -1

    def __contains__(self, n: int) -> bool:
        return n >= 0 and n not in self.gaps

    def non_gaps(self, upto: int) -> list[int]:
        """Semigroup elements in ``[0, upto]``."""
        return [n for n in range(upto + 1) if n in self]

    def count_upto(self, n: int) -> int:
        """Number of non-gaps in ``[0, n]`` (zero for negative ``n``)."""
        return len(self.non_gaps(n)) if n >= 0 else 0


def profile(sg: NumericalSemigroup) -> GapProfile:
    alpha = tuple(ell - i - 1 for i, ell in enumerate(sg.gaps))
    return GapProfile(alpha=alpha, weight=sum(alpha),
                      young=young_diagram(sg), alpha_min=min(sg.generators))


def canonical_orders(sg: NumericalSemigroup, count: int) -> list[int]:
    """First ``count`` elements of ``{x >= 0 : F - x not in H}``.

    For a symmetric semigroup this is the semigroup itself; otherwise it is
    the pole-order sequence of the numerators of holomorphic differentials,
    up to an overall shift.
    """
    F = sg.frobenius
    out, x = [], 0
    while len(out) < count:
        if (F - x) not in sg:
            out.append(x)
        x += 1
    return out


def young_diagram(sg: NumericalSemigroup) -> tuple[int, ...]:
    """Partition with rows ``N(g) - N(i-1) - g + i - 1`` for i = 1..g.

    ``N`` enumerates the canonical orders, which are the non-gaps when the
    semigroup is symmetric.
    """
    g = sg.genus
    N = canonical_orders(sg, g + 1)
    return tuple(N[g] - N[i - 1] - g + i - 1 for i in range(1, g + 1))


def is_symmetric(sg: NumericalSemigroup) -> bool:
    return (2 * sg.genus - 1) in sg.gaps


def buchweitz_l2(sg: NumericalSemigroup) -> tuple[int, int, bool]:
    """Size of the set of pairwise gap sums against ``3g - 3``."""
    sums = {a + b for a in sg.gaps for b in sg.gaps}
    bound = 3 * sg.genus - 3
    return len(sums), bound, len(sums) > bound


def summary(sg: NumericalSemigroup) -> dict:
    prof = profile(sg)
    count, bound, obstructed = buchweitz_l2(sg)
    return {
        "generators": list(sg.generators),
        "gaps": list(sg.gaps),
        "genus": sg.genus,
        "alpha": list(prof.alpha),
        "weight": prof.weight,
        "young": list(prof.young),
        "symmetric": is_symmetric(sg),
        "buchweitz": {"count": count, "bound": bound, "obstructed": obstructed},
    }


H4 = (3, 7, 8)
H12 = (6, 13, 14, 15, 16)
H_BUCHWEITZ = (13, 14, 15, 16, 17, 18, 20, 22, 23)
