"""Small finite groups given by Cayley tables.

Used to build trivial groupoids X x X x G and as the brute-force oracle for
normality and normalizers inside isotropy groups.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence


@dataclass(frozen=True)
class FiniteGroup:
    name: str
    table: tuple[tuple[int, ...], ...]  # table[a][b] = a*b
    identity: int
    inverse: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def conj(self, g: int, h: int) -> int:
        return self.table[self.table[g][h]][self.inverse[g]]


def _closure(gens: Sequence[Hashable], mul: Callable, identity: Hashable) -> list:
    elems = [identity]
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = mul(a, g)
                if b not in seen:
                    seen.add(b)
                    elems.append(b)
                    nxt.append(b)
        frontier = nxt
    return elems


def from_elements(name: str, elems: Sequence[Hashable], mul: Callable) -> FiniteGroup:
    index = {e: i for i, e in enumerate(elems)}
    table = tuple(tuple(index[mul(a, b)] for b in elems) for a in elems)
    n = len(elems)
    identity = next(i for i in range(n) if all(table[i][j] == j for j in range(n)))
    inverse = tuple(next(j for j in range(n) if table[i][j] == identity) for i in range(n))
    return FiniteGroup(name, table, identity, inverse)


def _perm_mul(p: tuple, q: tuple) -> tuple:
    # (p*q)(i) = p(q(i))
    return tuple(p[i] for i in q)


def permutation_group(name: str, gens: Sequence[Sequence[int]]) -> FiniteGroup:
    gens = [tuple(g) for g in gens]
    n = len(gens[0])
    elems = _closure(gens, _perm_mul, tuple(range(n)))
    return from_elements(name, elems, _perm_mul)


def cyclic(n: int) -> FiniteGroup:
    return from_elements(f"Z{n}", list(range(n)), lambda a, b: (a + b) % n)


def symmetric3() -> FiniteGroup:
    return permutation_group("S3", [(1, 0, 2), (1, 2, 0)])


def dihedral(n: int) -> FiniteGroup:
    """Symmetries of the regular n-gon, order 2n."""
    rot = tuple((i + 1) % n for i in range(n))
    ref = tuple((-i) % n for i in range(n))
    return permutation_group(f"D{n}", [rot, ref])


def quaternion() -> FiniteGroup:
    # elements (sign, unit) with unit in 1,i,j,k
    units = {("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
             ("i", "1"): (1, "i"), ("i", "i"): (-1, "1"), ("i", "j"): (1, "k"), ("i", "k"): (-1, "j"),
             ("j", "1"): (1, "j"), ("j", "i"): (-1, "k"), ("j", "j"): (-1, "1"), ("j", "k"): (1, "i"),
             ("k", "1"): (1, "k"), ("k", "i"): (1, "j"), ("k", "j"): (-1, "i"), ("k", "k"): (-1, "1")}

    def mul(a, b):
        s, u = units[(a[1], b[1])]
        return (a[0] * b[0] * s, u)

    elems = [(s, u) for s in (1, -1) for u in "1ijk"]
    return from_elements("Q8", elems, mul)


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    elems = list(itertools.product(range(g.order), range(h.order)))
    return from_elements(
        f"{g.name}x{h.name}", elems, lambda a, b: (g.table[a[0]][b[0]], h.table[a[1]][b[1]])
    )


def small_groups(max_order: int = 8) -> list[FiniteGroup]:
    """One representative of every isomorphism class of order <= max_order (max 8)."""
    out = [cyclic(n) for n in range(1, max_order + 1)]
    if max_order >= 4:
        out.append(direct_product(cyclic(2), cyclic(2)))
    if max_order >= 6:
        out.append(symmetric3())
    if max_order >= 8:
        out += [
            direct_product(cyclic(2), cyclic(4)),
            direct_product(direct_product(cyclic(2), cyclic(2)), cyclic(2)),
            dihedral(4),
            quaternion(),
        ]
    return out


def subgroup_closure(group: FiniteGroup, gens: Iterable[int]) -> frozenset[int]:
    return frozenset(_closure(list(gens), group.mul, group.identity))


def is_subgroup(group: FiniteGroup, sub: Iterable[int]) -> bool:
    sub = frozenset(sub)
    if group.identity not in sub:
        return False
    return all(group.mul(a, group.inverse[b]) in sub for a in sub for b in sub)


def normalizer(group: FiniteGroup, sub: Iterable[int]) -> frozenset[int]:
    sub = frozenset(sub)
    return frozenset(
        g for g in range(group.order) if {group.conj(g, h) for h in sub} == sub
    )


def is_normal_subgroup(group: FiniteGroup, sub: Iterable[int]) -> bool:
    sub = frozenset(sub)
    return all(group.conj(g, h) in sub for g in range(group.order) for h in sub)
