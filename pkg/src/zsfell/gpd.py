"""Finite groupoids, matched pairs and their Zappa-Szep products.

Everything here is a finite table. Composition ``comp[(a, b)]`` is the
product ``ab`` and is defined exactly when ``src(a) == rng(b)`` (so ``b``
acts first). A matched pair carries an action ``act[(h, x)] = h.x`` of the
H-arrows on the G-arrows and a restriction ``res[(h, x)] = h|x``, both defined
exactly when ``src_H(h) == rng_G(x)``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from typing import Callable, Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence

from .report import STRUCTURE, StructuralError, ValidationReport

ArrowId = Hashable
UnitId = Hashable


class Arrow(NamedTuple):
    id: ArrowId
    src: UnitId
    rng: UnitId


class CompositionError(ValueError):
    """Raised when two arrows are not composable."""

    def __init__(self, a: ArrowId, b: ArrowId, msg: str = "arrows are not composable"):
        super().__init__(f"{msg}: {a!r}, {b!r}")
        self.pair = (a, b)


class FactorizationError(ValueError):
    """An arrow has no factorization, or more than one, through the given subgroupoids."""

    def __init__(self, arrow: ArrowId, count: int):
        super().__init__(f"arrow {arrow!r} has {count} factorizations (expected exactly 1)")
        self.arrow = arrow
        self.count = count


class FiniteGroupoid:
    """A finite groupoid given by explicit tables.

    The constructor stores the tables as given and only rejects an empty unit
    set; :func:`validate_groupoid` reports everything else.
    """

    def __init__(
        self,
        units: Iterable[UnitId],
        arrows: Iterable[Arrow | tuple],
        comp: Mapping[tuple[ArrowId, ArrowId], ArrowId],
        inv: Mapping[ArrowId, ArrowId],
        unit_arrow: Mapping[UnitId, ArrowId],
        name: str = "",
    ):
        self.units: tuple = tuple(dict.fromkeys(units))
        if not self.units:
            raise StructuralError("a groupoid needs at least one unit")
        self._raw_arrows = tuple(Arrow(*a) for a in arrows)
        self.arrows: tuple = tuple(dict.fromkeys(a.id for a in self._raw_arrows))
        self.src = {a.id: a.src for a in self._raw_arrows}
        self.rng = {a.id: a.rng for a in self._raw_arrows}
        self.comp = dict(comp)
        self.inv = dict(inv)
        self.unit_arrow = dict(unit_arrow)
        self.name = name
        self.index = {a: i for i, a in enumerate(self.arrows)}
        self._unit_of = {a: u for u, a in self.unit_arrow.items()}
        self._range_fibers: dict | None = None
        self._source_fibers: dict | None = None
        self._composable: list | None = None

    def __len__(self) -> int:
        return len(self.arrows)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<FiniteGroupoid{label}: {len(self.units)} units, {len(self.arrows)} arrows>"

    def s(self, a: ArrowId) -> UnitId:
        return self.src[a]

    def r(self, a: ArrowId) -> UnitId:
        return self.rng[a]

    def compose(self, a: ArrowId, b: ArrowId) -> ArrowId:
        if a not in self.src or b not in self.src or self.src[a] != self.rng[b]:
            raise CompositionError(a, b)
        try:
            return self.comp[(a, b)]
        except KeyError:
            raise CompositionError(a, b, "missing table entry") from None

    def invert(self, a: ArrowId) -> ArrowId:
        return self.inv[a]

    def is_unit_arrow(self, a: ArrowId) -> bool:
        return a in self._unit_of

    def unit_of(self, a: ArrowId) -> UnitId:
        """The unit whose identity arrow is ``a``."""
        return self._unit_of[a]

    @property
    def is_group(self) -> bool:
        return len(self.units) == 1

    def range_fiber(self, v: UnitId) -> tuple:
        """Arrows with range ``v``, in declaration order."""
        if self._range_fibers is None:
            fib = defaultdict(list)
            for a in self.arrows:
                fib[self.rng[a]].append(a)
            self._range_fibers = {u: tuple(fib[u]) for u in self.units}
        return self._range_fibers.get(v, ())

    def source_fiber(self, v: UnitId) -> tuple:
        if self._source_fibers is None:
            fib = defaultdict(list)
            for a in self.arrows:
                fib[self.src[a]].append(a)
            self._source_fibers = {u: tuple(fib[u]) for u in self.units}
        return self._source_fibers.get(v, ())

    def composable(self) -> list[tuple[ArrowId, ArrowId, ArrowId]]:
        """All triples ``(a, b, ab)``, in declaration order."""
        if self._composable is None:
            out = []
            for a in self.arrows:
                for b in self.range_fiber(self.src[a]):
                    out.append((a, b, self.comp[(a, b)]))
            self._composable = out
        return self._composable

    def same_tables(self, other: FiniteGroupoid) -> bool:
        return self is other or (
            set(self.units) == set(other.units)
            and self.arrows == other.arrows
            and self.src == other.src
            and self.rng == other.rng
            and self.comp == other.comp
            and self.inv == other.inv
            and self.unit_arrow == other.unit_arrow
        )


def compose(G: FiniteGroupoid, a: ArrowId, b: ArrowId) -> ArrowId:
    return G.compose(a, b)


def invert(G: FiniteGroupoid, a: ArrowId) -> ArrowId:
    return G.invert(a)


# ---------------------------------------------------------------------------
# validation


def validate_groupoid(G: FiniteGroupoid) -> ValidationReport:
    rep = ValidationReport(subject=f"groupoid {G.name}".strip())
    struct = rep.check("STRUCT", kind=STRUCTURE)
    units = set(G.units)
    seen = set()
    for a in G._raw_arrows:
        struct.record(a.id not in seen, ("duplicate arrow", a.id))
        seen.add(a.id)
        struct.record(a.src in units and a.rng in units, ("undeclared unit", a.id))
    for u in G.units:
        struct.record(u in G.unit_arrow and G.unit_arrow[u] in G.src, ("unit arrow missing", u))
    for a in G.arrows:
        struct.record(G.inv.get(a) in G.src, ("inverse missing", a))
    for (a, b), c in G.comp.items():
        ok = a in G.src and b in G.src and c in G.src and G.src[a] == G.rng[b]
        struct.record(ok, ("dangling or off-domain composition", a, b))
    for a in G.arrows:
        for b in G.arrows:
            if G.src[a] == G.rng[b]:
                struct.record((a, b) in G.comp, ("composition missing", a, b))
    if not struct.passed:
        return rep

    typing = rep.check("COMP_TYPE")
    for a, b, ab in G.composable():
        typing.record(G.src[ab] == G.src[b] and G.rng[ab] == G.rng[a], (a, b))

    assoc = rep.check("ASSOC")
    for a in G.arrows:
        for b in G.range_fiber(G.src[a]):
            ab = G.comp[(a, b)]
            for c in G.range_fiber(G.src[b]):
                left = G.comp.get((ab, c))
                right = G.comp.get((a, G.comp[(b, c)]))
                assoc.record(left is not None and left == right, (a, b, c))

    unit = rep.check("UNIT")
    for u in G.units:
        e = G.unit_arrow[u]
        unit.record(G.src[e] == u and G.rng[e] == u, (e,))
    for a in G.arrows:
        unit.record(G.comp.get((a, G.unit_arrow[G.src[a]])) == a, (a, "right"))
        unit.record(G.comp.get((G.unit_arrow[G.rng[a]], a)) == a, (a, "left"))

    inverse = rep.check("INV")
    for a in G.arrows:
        b = G.inv[a]
        ok = (
            G.src[b] == G.rng[a]
            and G.rng[b] == G.src[a]
            and G.comp.get((a, b)) == G.unit_arrow[G.rng[a]]
            and G.comp.get((b, a)) == G.unit_arrow[G.src[a]]
        )
        inverse.record(ok, (a,))
    return rep


def is_isomorphism(G1: FiniteGroupoid, G2: FiniteGroupoid, f: Mapping[ArrowId, ArrowId]) -> bool:
    """Exact check that the arrow map ``f`` is a groupoid isomorphism."""
    if set(f) != set(G1.arrows) or set(f.values()) != set(G2.arrows) or len(G1) != len(G2):
        return False
    for a, b, ab in G1.composable():
        if G2.src[f[a]] != G2.rng[f[b]] or G2.comp[(f[a], f[b])] != f[ab]:
            return False
    # composability must be reflected too
    pairs1 = len(G1.composable())
    return pairs1 == len(G2.composable())


def _fingerprint(G: FiniteGroupoid, a: ArrowId) -> tuple:
    loop = G.src[a] == G.rng[a]
    order = 0
    if loop:
        p, order = a, 1
        while not G.is_unit_arrow(p):
            p, order = G.comp[(p, a)], order + 1
    return (
        G.is_unit_arrow(a),
        loop,
        order,
        len(G.range_fiber(G.rng[a])),
        len(G.source_fiber(G.src[a])),
    )


def find_isomorphism(G1: FiniteGroupoid, G2: FiniteGroupoid) -> dict | None:
    """Search for an arrow bijection G1 -> G2 respecting composition.

    Candidates are pruned by an (unit?, loop?, order, fiber sizes)
    fingerprint; meant for desk-scale groupoids.
    """
    if len(G1) != len(G2) or len(G1.units) != len(G2.units):
        return None
    fp2 = defaultdict(list)
    for b in G2.arrows:
        fp2[_fingerprint(G2, b)].append(b)
    order = sorted(G1.arrows, key=lambda a: (len(fp2[_fingerprint(G1, a)]), G1.index[a]))
    cands = {a: fp2[_fingerprint(G1, a)] for a in order}
    f: dict = {}
    used: set = set()
    umap: dict = {}

    def consistent(a, b) -> bool:
        for x, y in ((G1.src[a], G2.src[b]), (G1.rng[a], G2.rng[b])):
            if umap.get(x, y) != y:
                return False
        for c, d in f.items():
            if G1.src[a] == G1.rng[c]:
                ac = G1.comp[(a, c)]
                if G2.src[b] != G2.rng[d]:
                    return False
                if ac in f and f[ac] != G2.comp[(b, d)]:
                    return False
            if G1.src[c] == G1.rng[a]:
                ca = G1.comp[(c, a)]
                if G2.src[d] != G2.rng[b]:
                    return False
                if ca in f and f[ca] != G2.comp[(d, b)]:
                    return False
        return True

    def search(i: int) -> bool:
        if i == len(order):
            return True
        a = order[i]
        for b in cands[a]:
            if b in used or not consistent(a, b):
                continue
            added = [x for x in (G1.src[a], G1.rng[a]) if x not in umap]
            umap.update({G1.src[a]: G2.src[b], G1.rng[a]: G2.rng[b]})
            f[a] = b
            used.add(b)
            if search(i + 1):
                return True
            del f[a]
            used.discard(b)
            for x in added:
                umap.pop(x, None)
        return False

    if search(0) and is_isomorphism(G1, G2, f):
        return f
    return None


def relabel(G: FiniteGroupoid, f: Mapping[ArrowId, ArrowId], name: str = "") -> FiniteGroupoid:
    """Rename arrows through the bijection ``f``; units are kept."""
    return FiniteGroupoid(
        G.units,
        [Arrow(f[a], G.src[a], G.rng[a]) for a in G.arrows],
        {(f[a], f[b]): f[c] for (a, b), c in G.comp.items()},
        {f[a]: f[b] for a, b in G.inv.items()},
        {u: f[a] for u, a in G.unit_arrow.items()},
        name=name or G.name,
    )


def check_groupoid_hom(G: FiniteGroupoid, K: FiniteGroupoid, f: Mapping[ArrowId, ArrowId]) -> ValidationReport:
    """Exact check that ``f`` is a groupoid homomorphism ``G -> K``."""
    rep = ValidationReport(subject="groupoid homomorphism")
    struct = rep.check("STRUCT", kind=STRUCTURE)
    for a in G.arrows:
        struct.record(a in f and f[a] in K.src, (a,))
    if not struct.passed:
        return rep
    comp = rep.check("COMP")
    for a, b, ab in G.composable():
        comp.record(K.src[f[a]] == K.rng[f[b]] and K.comp.get((f[a], f[b])) == f[ab], (a, b))
    units = rep.check("UNIT")
    for u in G.units:
        units.record(K.is_unit_arrow(f[G.unit_arrow[u]]), (u,))
    inv = rep.check("INV")
    for a in G.arrows:
        inv.record(K.inv[f[a]] == f[G.inv[a]], (a,))
    return rep


# ---------------------------------------------------------------------------
# builders


def group_groupoid(
    elements: Sequence[ArrowId],
    mul: Callable[[ArrowId, ArrowId], ArrowId],
    identity: ArrowId,
    unit: UnitId = "o",
    name: str = "",
) -> FiniteGroupoid:
    """A group viewed as a one-unit groupoid."""
    elements = list(elements)
    comp = {(a, b): mul(a, b) for a in elements for b in elements}
    inv = {}
    for a in elements:
        for b in elements:
            if comp[(a, b)] == identity:
                inv[a] = b
                break
    arrows = [Arrow(a, unit, unit) for a in elements]
    return FiniteGroupoid([unit], arrows, comp, inv, {unit: identity}, name=name)


def cyclic_group(n: int, gen: str = "a", unit: UnitId = "o") -> FiniteGroupoid:
    names = ["e"] + [gen if k == 1 else f"{gen}^{k}" for k in range(1, n)]
    return group_groupoid(
        names, lambda a, b: names[(names.index(a) + names.index(b)) % n], "e", unit, name=f"Z{n}"
    )


def permutation_name(p: Sequence[int]) -> str:
    """Cycle notation on 1..n, e.g. ``(123)``; the identity is ``e``."""
    n = len(p)
    seen, cycles = set(), []
    for i in range(n):
        if i in seen or p[i] == i:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = p[j]
        cycles.append("(" + "".join(map(str, cyc)) + ")")
    return "".join(cycles) or "e"


def symmetric_group(n: int, unit: UnitId = "o") -> FiniteGroupoid:
    """S_n acting on 1..n, product ``(pq)(i) = p(q(i))``."""
    perms = sorted(itertools.permutations(range(n)), key=lambda p: (p != tuple(range(n)), p))
    names = {p: permutation_name(p) for p in perms}
    back = {v: k for k, v in names.items()}

    def mul(a, b):
        p, q = back[a], back[b]
        return names[tuple(p[q[i]] for i in range(n))]

    return group_groupoid([names[p] for p in perms], mul, "e", unit, name=f"S{n}")


def discrete_groupoid(units: Iterable[UnitId]) -> FiniteGroupoid:
    """Only unit arrows; each unit arrow is named after its unit."""
    units = list(units)
    return FiniteGroupoid(
        units,
        [Arrow(u, u, u) for u in units],
        {(u, u): u for u in units},
        {u: u for u in units},
        {u: u for u in units},
        name="discrete",
    )


def pair_groupoid(units: Iterable[UnitId]) -> FiniteGroupoid:
    """One arrow ``"r:s"`` between every ordered pair of units."""
    units = list(units)
    name = {(r, s): f"{r}:{s}" for r in units for s in units}
    arrows = [Arrow(name[(r, s)], s, r) for r in units for s in units]
    comp = {
        (name[(r, s)], name[(s, t)]): name[(r, t)] for r in units for s in units for t in units
    }
    inv = {name[(r, s)]: name[(s, r)] for r in units for s in units}
    return FiniteGroupoid(units, arrows, comp, inv, {u: name[(u, u)] for u in units}, name="pair")


def subgroupoid(K: FiniteGroupoid, arrows: Iterable[ArrowId], name: str = "") -> FiniteGroupoid:
    """Restrict ``K`` to a subset of arrows containing every unit arrow."""
    keep = set(arrows)
    missing = [u for u in K.units if K.unit_arrow[u] not in keep]
    if missing:
        raise StructuralError(f"subgroupoid misses unit arrows at {missing!r}")
    order = [a for a in K.arrows if a in keep]
    comp = {}
    for a in order:
        for b in order:
            if K.src[a] == K.rng[b]:
                c = K.comp[(a, b)]
                if c not in keep:
                    raise StructuralError(f"not closed under composition: {a!r}{b!r}")
                comp[(a, b)] = c
    inv = {}
    for a in order:
        if K.inv[a] not in keep:
            raise StructuralError(f"not closed under inversion: {a!r}")
        inv[a] = K.inv[a]
    return FiniteGroupoid(
        K.units, [Arrow(a, K.src[a], K.rng[a]) for a in order], comp, inv, K.unit_arrow, name=name
    )


def generated_subgroup(K: FiniteGroupoid, gens: Iterable[ArrowId]) -> list[ArrowId]:
    """Arrows of the subgroupoid generated by ``gens`` and all unit arrows."""
    out = set(K.unit_arrow.values()) | set(gens)
    changed = True
    while changed:
        changed = False
        for a in list(out):
            for b in list(out):
                if K.src[a] == K.rng[b] and K.comp[(a, b)] not in out:
                    out.add(K.comp[(a, b)])
                    changed = True
            if K.inv[a] not in out:
                out.add(K.inv[a])
                changed = True
    return [a for a in K.arrows if a in out]


# ---------------------------------------------------------------------------
# matched pairs


class MatchedPair:
    """Two groupoids on one unit set with action ``act`` and restriction ``res``."""

    def __init__(
        self,
        G: FiniteGroupoid,
        H: FiniteGroupoid,
        act: Mapping[tuple[ArrowId, ArrowId], ArrowId],
        res: Mapping[tuple[ArrowId, ArrowId], ArrowId],
        name: str = "",
    ):
        self.G, self.H = G, H
        self.act = dict(act)
        self.res = dict(res)
        self.name = name
        self._product: FiniteGroupoid | None = None

    def __repr__(self) -> str:
        return f"<MatchedPair {self.name!r}: |G|={len(self.G)}, |H|={len(self.H)}>"

    def domain(self) -> Iterator[tuple[ArrowId, ArrowId]]:
        """Pairs ``(h, x)`` with ``src_H(h) == rng_G(x)``, in declaration order."""
        for h in self.H.arrows:
            for x in self.G.range_fiber(self.H.src[h]):
                yield (h, x)

    def embed_G(self, x: ArrowId) -> tuple:
        """``x -> (x, s(x))`` into the product groupoid."""
        return (x, self.H.unit_arrow[self.G.src[x]])

    def embed_H(self, h: ArrowId) -> tuple:
        """``h -> (r(h), h)`` into the product groupoid."""
        return (self.G.unit_arrow[self.H.rng[h]], h)


def check_matched_pair(P: MatchedPair) -> ValidationReport:
    G, H, act, res = P.G, P.H, P.act, P.res
    rep = ValidationReport(subject=f"matched pair {P.name}".strip())
    struct = rep.check("STRUCT", kind=STRUCTURE)
    struct.record(set(G.units) == set(H.units), ("unit sets differ",))
    for label, X in (("G", G), ("H", H)):
        sub = validate_groupoid(X)
        struct.record(sub.ok, (f"{label} is not a groupoid", [c.id for c in sub.failures]))
    if not struct.passed:
        return rep
    dom = set(P.domain())
    for table_name, table, target in (("act", act, G), ("res", res, H)):
        for key, val in table.items():
            struct.record(key in dom, (f"{table_name} defined off its domain", *key))
            struct.record(val in target.src, (f"{table_name} value is not an arrow", *key))
        for key in dom:
            struct.record(key in table, (f"{table_name} missing", *key))
    if not struct.passed:
        return rep

    def gcomp(a, b):
        return G.comp.get((a, b)) if G.src[a] == G.rng[b] else None

    def hcomp(a, b):
        return H.comp.get((a, b)) if H.src[a] == H.rng[b] else None

    zs = {k: rep.check(k) for k in (f"ZS{i}" for i in range(1, 14))}
    for h1, h2, h12 in H.composable():
        for x in G.range_fiber(H.src[h2]):
            inner = act[(h2, x)]
            zs["ZS1"].record(act[(h12, x)] == act.get((h1, inner)), (h1, h2, x))
            right = res.get((h1, inner))
            zs["ZS9"].record(
                right is not None and res[(h12, x)] == hcomp(right, res[(h2, x)]), (h1, h2, x)
            )
    for h, x in dom:
        y, k = act[(h, x)], res[(h, x)]
        zs["ZS2"].record(G.rng[y] == H.rng[h], (h, x))
        zs["ZS5"].record(H.src[k] == G.src[x], (h, x))
        zs["ZS7"].record(G.src[y] == H.rng[k], (h, x))
        zs["ZS12"].record(G.inv[y] == act.get((k, G.inv[x])), (h, x))
        zs["ZS13"].record(H.inv[k] == res.get((H.inv[h], y)), (h, x))
    for x in G.arrows:
        zs["ZS3"].record(act[(H.unit_arrow[G.rng[x]], x)] == x, (x,))
        zs["ZS11"].record(res[(H.unit_arrow[G.rng[x]], x)] == H.unit_arrow[G.src[x]], (x,))
    for h in H.arrows:
        e = G.unit_arrow[H.src[h]]
        zs["ZS6"].record(res[(h, e)] == h, (h,))
        zs["ZS10"].record(act[(h, e)] == G.unit_arrow[H.rng[h]], (h,))
    for x, y, xy in G.composable():
        for h in H.source_fiber(G.rng[x]):
            k = res[(h, x)]
            zs["ZS4"].record(res[(h, xy)] == res.get((k, y)), (h, x, y))
            right = act.get((k, y))
            zs["ZS8"].record(
                right is not None and act[(h, xy)] == gcomp(act[(h, x)], right), (h, x, y)
            )
    return rep


def zs_groupoid(P: MatchedPair) -> FiniteGroupoid:
    """The Zappa-Szep product: arrows ``(x, h)`` with ``src_G(x) == rng_H(h)``.

    ``(x, h)(y, g) = (x (h.y), h|y g)`` and ``(x, h)^-1 = (h^-1 . x^-1, h^-1 | x^-1)``.
    The result is cached on the pair.
    """
    if P._product is not None:
        return P._product
    G, H, act, res = P.G, P.H, P.act, P.res
    arrows = [
        Arrow((x, h), H.src[h], G.rng[x]) for x in G.arrows for h in H.range_fiber(G.src[x])
    ]
    comp = {}
    for xh in arrows:
        x, h = xh.id
        for y in G.range_fiber(H.src[h]):
            for g in H.range_fiber(G.src[y]):
                comp[((x, h), (y, g))] = (
                    G.comp[(x, act[(h, y)])],
                    H.comp[(res[(h, y)], g)],
                )
    inv = {}
    for xh in arrows:
        x, h = xh.id
        hi, xi = H.inv[h], G.inv[x]
        inv[(x, h)] = (act[(hi, xi)], res[(hi, xi)])
    unit_arrow = {u: (G.unit_arrow[u], H.unit_arrow[u]) for u in G.units}
    name = f"{P.name} product".strip()
    P._product = FiniteGroupoid(G.units, arrows, comp, inv, unit_arrow, name=name)
    return P._product


def internal_factorization(
    K: FiniteGroupoid, A: Iterable[ArrowId], B: Iterable[ArrowId], name: str = ""
) -> MatchedPair:
    """Read a matched pair off a groupoid in which every arrow is uniquely ``ab``.

    ``h.y`` and ``h|y`` are the factors of ``hy = (h.y)(h|y)``.
    """
    A, B = list(A), list(B)
    G = subgroupoid(K, A, name="A")
    H = subgroupoid(K, B, name="B")
    factors: dict = defaultdict(list)
    for a in G.arrows:
        for b in H.range_fiber(G.src[a]):
            factors[K.comp[(a, b)]].append((a, b))
    for k in K.arrows:
        if len(factors[k]) != 1:
            raise FactorizationError(k, len(factors[k]))
    act, res = {}, {}
    for h in H.arrows:
        for y in G.range_fiber(H.src[h]):
            a, b = factors[K.comp[(h, y)]][0]
            act[(h, y)], res[(h, y)] = a, b
    return MatchedPair(G, H, act, res, name=name)


# ---------------------------------------------------------------------------
# self-similar actions


class SelfSimilarAction:
    """A group ``H`` acting on the arrows of ``G`` by ``ast`` with cocycle ``bullet``."""

    def __init__(
        self,
        G: FiniteGroupoid,
        H: FiniteGroupoid,
        ast: Mapping[tuple[ArrowId, ArrowId], ArrowId],
        bullet: Mapping[tuple[ArrowId, ArrowId], ArrowId],
        name: str = "",
    ):
        if not H.is_group:
            raise StructuralError("the acting H must be a group (one unit)")
        self.G, self.H = G, H
        self.ast = dict(ast)
        self.bullet = dict(bullet)
        self.name = name


def check_self_similar(S: SelfSimilarAction) -> ValidationReport:
    """Properties (1)-(4) of a self-similar action, plus the group-action laws for ``ast``.

    Whether ``h*`` preserves units is only noted, not required.
    """
    G, H, ast, bullet = S.G, S.H, S.ast, S.bullet
    rep = ValidationReport(subject=f"self-similar action {S.name}".strip())
    struct = rep.check("STRUCT", kind=STRUCTURE)
    for h in H.arrows:
        for x in G.arrows:
            struct.record(ast.get((h, x)) in G.src, ("ast missing", h, x))
            struct.record(bullet.get((h, x)) in H.src, ("bullet missing", h, x))
    if not struct.passed:
        return rep
    e = H.unit_arrow[H.units[0]]
    action = rep.check("ACTION")
    for x in G.arrows:
        action.record(ast[(e, x)] == x, (e, x))
    for g, h, gh in H.composable():
        for x in G.arrows:
            action.record(ast[(gh, x)] == ast[(g, ast[(h, x)])], (g, h, x))
    p1, p2, p3, p4 = (rep.check(f"SS{i}") for i in range(1, 5))
    for h in H.arrows:
        for u in G.units:
            p1.record(bullet[(h, G.unit_arrow[u])] == h, (h, u))
    for x in G.arrows:
        p1.record(bullet[(e, x)] == e, (e, x))
    for x, y, xy in G.composable():
        for h in H.arrows:
            hx = bullet[(h, x)]
            p2.record(bullet[(h, xy)] == bullet[(hx, y)], (h, x, y))
            a, b = ast[(h, x)], ast[(hx, y)]
            ok = G.src[a] == G.rng[b] and ast[(h, xy)] == G.comp[(a, b)]
            p3.record(ok, (h, x, y))
    for g, h, gh in H.composable():
        for x in G.arrows:
            p4.record(bullet[(gh, x)] == H.comp[(bullet[(g, ast[(h, x)])], bullet[(h, x)])], (g, h, x))
    for h in H.arrows:
        for u in G.units:
            if not G.is_unit_arrow(ast[(h, G.unit_arrow[u])]):
                rep.notes.append(f"{h!r} * {u!r} is not a unit arrow")
    return rep


def _unit_image(S: SelfSimilarAction, h: ArrowId, u: UnitId) -> UnitId:
    img = S.ast[(h, S.G.unit_arrow[u])]
    if not S.G.is_unit_arrow(img):
        raise StructuralError(f"{h!r} does not map the unit {u!r} to a unit")
    return S.G.unit_of(img)


def transformation_groupoid(S: SelfSimilarAction) -> FiniteGroupoid:
    """``G0 x| H``: arrows ``(u, h)`` from ``h^-1 * u`` to ``u``."""
    G, H = S.G, S.H
    arrows = [Arrow((u, h), _unit_image(S, H.inv[h], u), u) for u in G.units for h in H.arrows]
    src = {a.id: a.src for a in arrows}
    comp = {}
    for a in arrows:
        u, h = a.id
        for k in H.arrows:
            comp[((u, h), (a.src, k))] = (u, H.comp[(h, k)])
    inv = {(u, h): (src[(u, h)], H.inv[h]) for u in G.units for h in H.arrows}
    e = H.unit_arrow[H.units[0]]
    return FiniteGroupoid(
        G.units, arrows, comp, inv, {u: (u, e) for u in G.units}, name=f"{S.name} transformation"
    )


def transformation_matched_pair(S: SelfSimilarAction) -> MatchedPair:
    """``(G, G0 x| H)`` with ``(u,h).x = h*x`` and ``(u,h)|x = (h*s(x), h.x)``."""
    rep = check_self_similar(S)
    if not rep.ok:
        bad = rep.failures[0]
        raise StructuralError(f"self-similar property {bad.id} fails at {bad.witness!r}")
    G = S.G
    T = transformation_groupoid(S)
    act, res = {}, {}
    for uh in T.arrows:
        u, h = uh
        for x in G.range_fiber(T.src[uh]):
            act[(uh, x)] = S.ast[(h, x)]
            res[(uh, x)] = (_unit_image(S, h, G.src[x]), S.bullet[(h, x)])
    return MatchedPair(G, T, act, res, name=S.name)


def self_similar_groupoid(S: SelfSimilarAction) -> FiniteGroupoid:
    """The groupoid of pairs ``(x, h)`` with ``(x,h)(y,k) = (x (h*y), (h.y) k)``.

    Built straight from ``ast`` and ``bullet``; used to cross-check the
    product groupoid of :func:`transformation_matched_pair`.
    """
    G, H, ast, bullet = S.G, S.H, S.ast, S.bullet
    arrows = [
        Arrow((x, h), _unit_image(S, H.inv[h], G.src[x]), G.rng[x]) for x in G.arrows for h in H.arrows
    ]
    comp = {}
    for a in arrows:
        x, h = a.id
        for y in G.range_fiber(_unit_image(S, H.inv[h], G.src[x])):
            for k in H.arrows:
                comp[((x, h), (y, k))] = (G.comp[(x, ast[(h, y)])], H.comp[(bullet[(h, y)], k)])
    inv = {}
    for a in arrows:
        x, h = a.id
        hi, xi = H.inv[h], G.inv[x]
        inv[(x, h)] = (ast[(hi, xi)], bullet[(hi, xi)])
    e = H.unit_arrow[H.units[0]]
    return FiniteGroupoid(
        G.units, arrows, comp, inv, {u: (G.unit_arrow[u], e) for u in G.units}, name=f"{S.name} self-similar"
    )
