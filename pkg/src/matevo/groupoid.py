"""Exact finite groupoids stored as composition tables.

Convention: an arrow g goes from ``src(g)`` to ``tgt(g)`` and the product
``g*h`` is defined exactly when ``src(g) == tgt(h)``; then
``src(g*h) = src(h)`` and ``tgt(g*h) = tgt(g)``.

Internally arrows and objects are addressed by integer index; string ids are
kept for interchange files and reports.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import groups as grp


class GroupoidFormatError(ValueError):
    """Interchange data is malformed or not index-consistent."""


@dataclass(frozen=True)
class Arrow:
    id: str
    src: str
    tgt: str


class FiniteGroupoid:
    def __init__(
        self,
        objects: Sequence[str],
        arrows: Sequence[Arrow],
        compose: dict[tuple[str, str], str],
        identity: dict[str, str],
        inverse: dict[str, str],
    ):
        self.objects = tuple(objects)
        self.arrows = tuple(arrows)
        self._obj_index = {o: i for i, o in enumerate(self.objects)}
        self._arrow_index = {a.id: i for i, a in enumerate(self.arrows)}
        if len(self._obj_index) != len(self.objects):
            raise GroupoidFormatError("duplicate object id")
        if len(self._arrow_index) != len(self.arrows):
            raise GroupoidFormatError("duplicate arrow id")
        try:
            self.src = tuple(self._obj_index[a.src] for a in self.arrows)
            self.tgt = tuple(self._obj_index[a.tgt] for a in self.arrows)
            self.table = {
                (self._arrow_index[g], self._arrow_index[h]): self._arrow_index[gh]
                for (g, h), gh in compose.items()
            }
            self.identity = tuple(self._arrow_index[identity[o]] for o in self.objects)
            self.inverse = tuple(self._arrow_index[inverse[a.id]] for a in self.arrows)
        except KeyError as exc:
            raise GroupoidFormatError(f"unknown id {exc.args[0]!r}") from None
        self._hom: dict[tuple[int, int], list[int]] = {}
        for i in range(len(self.arrows)):
            self._hom.setdefault((self.src[i], self.tgt[i]), []).append(i)

    def __len__(self) -> int:
        return len(self.arrows)

    def __repr__(self) -> str:
        return f"FiniteGroupoid({len(self.objects)} objects, {len(self.arrows)} arrows)"

    def obj(self, name: str) -> int:
        try:
            return self._obj_index[name]
        except KeyError:
            raise KeyError(f"unknown object {name!r}") from None

    def arrow(self, name: str) -> int:
        try:
            return self._arrow_index[name]
        except KeyError:
            raise KeyError(f"unknown arrow {name!r}") from None

    def mul(self, g: int, h: int) -> int | None:
        return self.table.get((g, h))

    def hom(self, x: int, y: int) -> list[int]:
        """Arrows with source x and target y."""
        return self._hom.get((x, y), [])

    def conj(self, g: int, h: int) -> int:
        # g*h*g^-1, requires src(g) == tgt(h) == src(h)
        return self.table[(self.table[(g, h)], self.inverse[g])]

    def ids(self, arrows: Iterable[int]) -> list[str]:
        return [self.arrows[i].id for i in sorted(arrows)]


@dataclass(frozen=True)
class FiniteSubgroupoid:
    parent: FiniteGroupoid
    base: frozenset[int]
    arrows: frozenset[int]
    _hom: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        hom: dict[tuple[int, int], list[int]] = {}
        for g in sorted(self.arrows):
            hom.setdefault((self.parent.src[g], self.parent.tgt[g]), []).append(g)
        object.__setattr__(self, "_hom", hom)

    def __len__(self) -> int:
        return len(self.arrows)

    def hom(self, x: int, y: int) -> list[int]:
        return self._hom.get((x, y), [])

    def isotropy(self, x: int) -> frozenset[int]:
        return frozenset(self.hom(x, x))

    def as_groupoid(self) -> FiniteGroupoid:
        return restrict(self.parent, self.base, self.arrows)


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple[str, ...]
    message: str


@dataclass
class ValidationResult:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_groupoid(G: FiniteGroupoid) -> ValidationResult:
    """Check the groupoid axioms on every applicable tuple.

    Reports the first violating tuple in each axiom family: ``composition``
    (definedness and endpoints), ``associativity``, ``identity``, ``inverse``.
    """
    found: dict[str, Violation] = {}

    def report(axiom, arrows, message):
        if axiom not in found:
            found[axiom] = Violation(axiom, tuple(G.arrows[a].id for a in arrows), message)

    n = len(G.arrows)
    for g, h in itertools.product(range(n), repeat=2):
        gh = G.mul(g, h)
        if G.src[g] != G.tgt[h]:
            if gh is not None:
                report("composition", (g, h), "product defined for non-composable pair")
            continue
        if gh is None:
            report("composition", (g, h), "product missing for composable pair")
        elif G.src[gh] != G.src[h] or G.tgt[gh] != G.tgt[g]:
            report("composition", (g, h, gh), "product has wrong source or target")

    if "composition" not in found:
        leaving = [[f for f in range(n) if G.src[f] == x] for x in range(len(G.objects))]
        for g, h in itertools.product(range(n), repeat=2):
            if "associativity" in found:
                break
            if G.src[g] != G.tgt[h]:
                continue
            gh = G.table[(g, h)]
            for f in leaving[G.tgt[g]]:
                if G.table[(f, gh)] != G.table[(G.table[(f, g)], h)]:
                    report("associativity", (f, g, h), "(f*g)*h != f*(g*h)")
                    break

    for x in range(len(G.objects)):
        e = G.identity[x]
        if G.src[e] != x or G.tgt[e] != x:
            report("identity", (e,), f"identity of {G.objects[x]!r} is not a loop at it")
    if "identity" not in found:
        for g in range(n):
            if (G.mul(g, G.identity[G.src[g]]) != g
                    or G.mul(G.identity[G.tgt[g]], g) != g):
                report("identity", (g,), "identities do not act trivially")
                break

    for g in range(n):
        gi = G.inverse[g]
        if G.mul(gi, g) != G.identity[G.src[g]] or G.mul(g, gi) != G.identity[G.tgt[g]]:
            report("inverse", (g, gi), "inverse does not cancel")
            break

    order = ["composition", "associativity", "identity", "inverse"]
    return ValidationResult([found[k] for k in order if k in found])


def validate_subgroupoid(H: FiniteSubgroupoid) -> ValidationResult:
    G = H.parent
    out = []
    for x in sorted(H.base):
        if G.identity[x] not in H.arrows:
            out.append(Violation("identity", (G.arrows[G.identity[x]].id,),
                                 f"missing identity at {G.objects[x]!r}"))
            break
    for g in sorted(H.arrows):
        if G.src[g] not in H.base or G.tgt[g] not in H.base:
            out.append(Violation("base", (G.arrows[g].id,), "endpoint outside base"))
            break
    for g in sorted(H.arrows):
        if G.inverse[g] not in H.arrows:
            out.append(Violation("inverse", (G.arrows[g].id,), "not closed under inverse"))
            break
    bad = next(((g, h) for g in sorted(H.arrows) for h in sorted(H.arrows)
                if G.src[g] == G.tgt[h] and G.table[(g, h)] not in H.arrows), None)
    if bad is not None:
        out.append(Violation("composition", tuple(G.arrows[a].id for a in bad),
                             "not closed under composition"))
    return ValidationResult(out)


def _as_groupoid(G) -> FiniteGroupoid:
    return G.as_groupoid() if isinstance(G, FiniteSubgroupoid) else G


def orbits(G: FiniteGroupoid | FiniteSubgroupoid) -> list[list[str]]:
    """Partition of the objects into orbits, in order of first appearance."""
    G = _as_groupoid(G)
    parent = list(range(len(G.objects)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in range(len(G.arrows)):
        a, b = find(G.src[g]), find(G.tgt[g])
        if a != b:
            parent[max(a, b)] = min(a, b)
    blocks: dict[int, list[str]] = {}
    for x, name in enumerate(G.objects):
        blocks.setdefault(find(x), []).append(name)
    return list(blocks.values())


def isotropy_group(G: FiniteGroupoid | FiniteSubgroupoid, x: str) -> set[str]:
    G = _as_groupoid(G)
    i = G.obj(x)
    return {G.arrows[g].id for g in G.hom(i, i)}


def is_transitive(G: FiniteGroupoid | FiniteSubgroupoid) -> bool:
    return len(orbits(G)) == 1


def normality_witness(G: FiniteGroupoid, H: FiniteSubgroupoid) -> tuple[int, int, int] | None:
    """First (g, h, g*h*g^-1) with h in H, src(g) = src(h) = tgt(h), product outside H."""
    for g in range(len(G.arrows)):
        x = G.src[g]
        if x not in H.base:
            continue
        for h in H.hom(x, x):
            c = G.conj(g, h)
            if c not in H.arrows:
                return g, h, c
    return None


def is_normal_subgroupoid(G: FiniteGroupoid, H: FiniteSubgroupoid) -> bool:
    return normality_witness(G, H) is None


def normalizoid(G: FiniteGroupoid, H: FiniteSubgroupoid) -> FiniteSubgroupoid:
    """Largest subgroupoid of G over H's base in which H is normal.

    Membership is ``g * H(src g) * g^-1 == H(tgt g)`` (set equality).
    """
    members = set()
    for g in range(len(G.arrows)):
        x, y = G.src[g], G.tgt[g]
        if x not in H.base or y not in H.base:
            continue
        if {G.conj(g, h) for h in H.hom(x, x)} == H.isotropy(y):
            members.add(g)
    return FiniteSubgroupoid(G, H.base, frozenset(members))


# -- construction ------------------------------------------------------------

def restrict(G: FiniteGroupoid, base: Iterable[int], arrows: Iterable[int]) -> FiniteGroupoid:
    base = sorted(set(base))
    keep = sorted(set(arrows))
    ks = set(keep)
    ids = {g: G.arrows[g].id for g in keep}
    return FiniteGroupoid(
        [G.objects[x] for x in base],
        [G.arrows[g] for g in keep],
        {(ids[g], ids[h]): ids[G.table[(g, h)]] for g in keep for h in keep
         if G.src[g] == G.tgt[h] and G.table[(g, h)] in ks},
        {G.objects[x]: G.arrows[G.identity[x]].id for x in base},
        {ids[g]: G.arrows[G.inverse[g]].id for g in keep if G.inverse[g] in ks},
    )


def pair_groupoid(objects: Sequence[str]) -> FiniteGroupoid:
    """One arrow (x, y) from x to y for each ordered pair."""
    aid = {(x, y): f"({x},{y})" for x in objects for y in objects}
    arrows = [Arrow(aid[x, y], x, y) for x in objects for y in objects]
    compose = {(aid[y, z], aid[x, y]): aid[x, z]
               for x in objects for y in objects for z in objects}
    identity = {x: aid[x, x] for x in objects}
    inverse = {aid[x, y]: aid[y, x] for x in objects for y in objects}
    return FiniteGroupoid(objects, arrows, compose, identity, inverse)


def trivial_groupoid(objects: Sequence[str], group: grp.FiniteGroup) -> FiniteGroupoid:
    """X x X x G with (y, z, a) * (x, y, b) = (x, z, a*b)."""
    n = group.order

    def aid(x, y, a):
        return f"{x}>{y}:{a}"

    arrows = [Arrow(aid(x, y, a), x, y) for x in objects for y in objects for a in range(n)]
    compose = {
        (aid(y, z, a), aid(x, y, b)): aid(x, z, group.mul(a, b))
        for x in objects for y in objects for z in objects
        for a in range(n) for b in range(n)
    }
    identity = {x: aid(x, x, group.identity) for x in objects}
    inverse = {aid(x, y, a): aid(y, x, group.inverse[a])
               for x in objects for y in objects for a in range(n)}
    return FiniteGroupoid(objects, arrows, compose, identity, inverse)


def disjoint_union(*parts: FiniteGroupoid) -> FiniteGroupoid:
    objects, arrows, compose, identity, inverse = [], [], {}, {}, {}
    for G in parts:
        objects += G.objects
        arrows += G.arrows
        for (g, h), gh in G.table.items():
            compose[G.arrows[g].id, G.arrows[h].id] = G.arrows[gh].id
        identity.update({o: G.arrows[G.identity[i]].id for i, o in enumerate(G.objects)})
        inverse.update({a.id: G.arrows[G.inverse[i]].id for i, a in enumerate(G.arrows)})
    return FiniteGroupoid(objects, arrows, compose, identity, inverse)


def subgroupoid_closure(
    G: FiniteGroupoid, seeds: Iterable[int], base: Iterable[int] | None = None
) -> FiniteSubgroupoid:
    """Smallest subgroupoid containing the seed arrows and identities over base."""
    seeds = set(seeds)
    base = set(base) if base is not None else set()
    base |= {G.src[g] for g in seeds} | {G.tgt[g] for g in seeds}
    members = seeds | {G.identity[x] for x in base}
    members |= {G.inverse[g] for g in members}
    frontier = set(members)
    while frontier:
        new = set()
        for g in frontier:
            for h in list(members):
                for a, b in ((g, h), (h, g)):
                    ab = G.mul(a, b)
                    if ab is not None and ab not in members and ab not in new:
                        new.add(ab)
        new |= {G.inverse[g] for g in new}
        new -= members
        members |= new
        frontier = new
    return FiniteSubgroupoid(G, frozenset(base), frozenset(members))


def subgroupoid_from_ids(G: FiniteGroupoid, arrows: Iterable[str],
                         base: Iterable[str] | None = None) -> FiniteSubgroupoid:
    arrows = frozenset(G.arrow(a) for a in arrows)
    if base is None:
        objs = {G.src[g] for g in arrows} | {G.tgt[g] for g in arrows}
    else:
        objs = {G.obj(x) for x in base}
    return FiniteSubgroupoid(G, frozenset(objs), arrows)


def counterexample() -> tuple[FiniteGroupoid, FiniteSubgroupoid]:
    """{x,y} x {x,y} x S3 with H = S3 at x, trivial at y, no cross arrows.

    Every isotropy group of H is normal in the ambient isotropy group, yet H
    is not a normal subgroupoid.
    """
    s3 = grp.symmetric3()
    G = trivial_groupoid(["x", "y"], s3)
    x, y = G.obj("x"), G.obj("y")
    arrows = set(G.hom(x, x)) | {G.identity[y]}
    return G, FiniteSubgroupoid(G, frozenset({x, y}), frozenset(arrows))


# -- random sampling ---------------------------------------------------------

def random_trivial_groupoid(rng: random.Random, max_objects: int = 5,
                            max_order: int = 8) -> tuple[FiniteGroupoid, grp.FiniteGroup]:
    group = rng.choice(grp.small_groups(max_order))
    k = rng.randint(1, max_objects)
    return trivial_groupoid([f"o{i}" for i in range(k)], group), group


def random_subgroupoid(rng: random.Random, G: FiniteGroupoid, *,
                       transitive: bool, n_seeds: int | None = None) -> FiniteSubgroupoid:
    """Closure of random arrow seeds over the full base.

    With ``transitive=True`` the seeds include a random arrow from the first
    object to every other object, so the closure is transitive.
    """
    n_obj = len(G.objects)
    base = range(n_obj)
    seeds = []
    if transitive:
        for x in range(1, n_obj):
            seeds.append(rng.choice(G.hom(0, x)))
    if n_seeds is None:
        n_seeds = rng.randint(0, 2)
    for _ in range(n_seeds):
        seeds.append(rng.randrange(len(G.arrows)))
    if not transitive:
        # keep only loops so orbits stay split
        seeds = [g for g in seeds if G.src[g] == G.tgt[g]]
    return subgroupoid_closure(G, seeds, base)


# -- interchange -------------------------------------------------------------

def groupoid_to_dict(G: FiniteGroupoid) -> dict:
    return {
        "objects": list(G.objects),
        "arrows": [{"id": a.id, "src": a.src, "tgt": a.tgt} for a in G.arrows],
        "compose": [[G.arrows[g].id, G.arrows[h].id, G.arrows[gh].id]
                    for (g, h), gh in sorted(G.table.items())],
        "identity": {o: G.arrows[G.identity[i]].id for i, o in enumerate(G.objects)},
        "inverse": {a.id: G.arrows[G.inverse[i]].id for i, a in enumerate(G.arrows)},
    }


def groupoid_from_dict(data: dict) -> FiniteGroupoid:
    try:
        objects = [str(o) for o in data["objects"]]
        arrows = [Arrow(str(a["id"]), str(a["src"]), str(a["tgt"])) for a in data["arrows"]]
        compose = {}
        for row in data["compose"]:
            if len(row) != 3:
                raise GroupoidFormatError(f"compose entry {row!r} is not a triple")
            compose[str(row[0]), str(row[1])] = str(row[2])
        identity = {str(k): str(v) for k, v in data["identity"].items()}
        inverse = {str(k): str(v) for k, v in data["inverse"].items()}
    except (KeyError, TypeError, AttributeError) as exc:
        raise GroupoidFormatError(f"malformed groupoid data: {exc}") from None
    return FiniteGroupoid(objects, arrows, compose, identity, inverse)


def subgroupoid_to_dict(H: FiniteSubgroupoid) -> dict:
    G = H.parent
    return {"base": [G.objects[x] for x in sorted(H.base)], "arrows": G.ids(H.arrows)}


def subgroupoid_from_dict(G: FiniteGroupoid, data: dict) -> FiniteSubgroupoid:
    try:
        return subgroupoid_from_ids(G, data["arrows"], data.get("base"))
    except (KeyError, TypeError, AttributeError) as exc:
        raise GroupoidFormatError(f"malformed subgroupoid data: {exc}") from None


def load_groupoid(path: str | Path) -> FiniteGroupoid:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GroupoidFormatError(f"{path}: {exc}") from None
    return groupoid_from_dict(data)


def load_subgroupoid(G: FiniteGroupoid, path: str | Path) -> FiniteSubgroupoid:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GroupoidFormatError(f"{path}: {exc}") from None
    return subgroupoid_from_dict(G, data)
