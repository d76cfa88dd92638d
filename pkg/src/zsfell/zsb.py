"""Compatible actions and the Zappa-Szep product of a Fell bundle.

A compatible action of the H side of a matched pair on a bundle over G is a
family of linear maps ``beta[(h, x)]: fiber(x) -> fiber(h.x)``, stored as
matrices in the fiber bases. :class:`ZSProductBundle` builds the product
bundle over ``zs_groupoid(pair)`` by the twisted formulas

    (a, g)(b, h) = (a beta_g(b), g|p(b) h)
    (b, h)*      = (beta_{h^-1}(b*), h^-1|p(b)^-1)

and never re-embeds anything into matrices.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .fell import (
    DEFAULT_TOL,
    Element,
    FellBundle,
    PullbackBundle,
    check_bundle_hom,
    line_bundle,
    random_unit_element,
)
from .gpd import ArrowId, MatchedPair, UnitId, discrete_groupoid, zs_groupoid
from .report import STRUCTURE, StructuralError, ValidationReport

IsomorphismReport = ValidationReport


class CompatibleAction:
    def __init__(
        self,
        pair: MatchedPair,
        base: FellBundle,
        beta: Mapping[tuple[ArrowId, ArrowId], np.ndarray],
        name: str = "",
    ):
        self.pair = pair
        self.base = base
        self.beta = {k: np.asarray(v, dtype=complex) for k, v in beta.items()}
        self.name = name

    def __repr__(self) -> str:
        return f"<CompatibleAction {self.name!r} on {self.pair.name!r}>"

    def apply(self, h: ArrowId, b: Element) -> Element:
        """``beta_h(b)``."""
        return Element(self.pair.act[(h, b.arrow)], self.beta[(h, b.arrow)] @ b.vec)


def validate_action(A: CompatibleAction, tol: float = DEFAULT_TOL, seed: int = 0) -> ValidationReport:
    """Check A1-A5, that each ``beta_h`` is a unital *-isomorphism of unit fibers,
    and that every ``beta_h`` is isometric."""
    P, B, beta = A.pair, A.base, A.beta
    G, H = P.G, P.H
    rng = np.random.default_rng(seed)
    rep = ValidationReport(subject=f"compatible action {A.name}".strip(), tol=tol)
    struct = rep.check("STRUCT", kind=STRUCTURE)
    struct.record(B.groupoid.same_tables(G), ("base bundle is not over G",))
    if not struct.passed:
        return rep
    dom = list(P.domain())
    dom_set = set(dom)
    for key in beta:
        struct.record(key in dom_set, ("beta defined off its domain", *key))
    for key in dom:
        struct.record(key in beta, ("beta missing", *key))
    if not struct.passed:
        return rep

    a1 = rep.check("A1")
    for h, x in dom:
        shape = (B.dim(P.act[(h, x)]), B.dim(x))
        a1.record(beta[(h, x)].shape == shape, (h, x))
        a1.record(bool(np.all(np.isfinite(beta[(h, x)]))), (h, x, "finite"))
    if not a1.passed:
        return rep

    a2 = rep.check("A2")
    for g, h, gh in H.composable():
        for x in G.range_fiber(H.src[h]):
            hx = P.act[(h, x)]
            lhs = beta[(gh, x)]
            rhs = beta[(g, hx)] @ beta[(h, x)]
            if lhs.size:
                a2.measure(np.abs(lhs - rhs).max(), tol, (g, h, x), float(np.abs(lhs).max()))

    a3 = rep.check("A3")
    for u in G.units:
        e = H.unit_arrow[u]
        for x in G.range_fiber(u):
            m = beta[(e, x)]
            if m.size:
                a3.measure(np.abs(m - np.eye(m.shape[0])).max(), tol, (e, x))

    a4 = rep.check("A4")
    for x, y, xy in G.composable():
        T = B.mult_tensor(x, y)
        if not T.size:
            continue
        for h in H.source_fiber(G.rng[x]):
            k = P.res[(h, x)]
            hx, ky = P.act[(h, x)], P.act[(k, y)]
            lhs = np.einsum("ijm,nm->ijn", T, beta[(h, xy)])
            rhs = np.einsum("ai,bj,abn->ijn", beta[(h, x)], beta[(k, y)], B.mult_tensor(hx, ky))
            a4.measure(np.abs(lhs - rhs).max(), tol, (h, x, y), float(np.abs(lhs).max(initial=0)))

    a5 = rep.check("A5")
    for h, x in dom:
        k = P.res[(h, x)]
        hx, xi = P.act[(h, x)], G.inv[x]
        if not B.dim(x):
            continue
        lhs = beta[(h, x)].T.conj() @ B.star_matrix(hx)
        rhs = B.star_matrix(x) @ beta[(k, xi)].T
        a5.measure(np.abs(lhs - rhs).max(), tol, (h, x))

    prop = rep.check("PROP")
    for h in H.arrows:
        e = G.unit_arrow[H.src[h]]
        m = beta[(h, e)]
        square = m.shape[0] == m.shape[1]
        prop.record(square, (h, "not square"))
        if square and m.size:
            sv = np.linalg.svd(m, compute_uv=False)
            prop.record(sv[-1] > 1e-8 * sv[0], (h, "not bijective"))
        one_s, one_r = B.unit_element(H.src[h]), B.unit_element(H.rng[h])
        if one_s is not None and one_r is not None:
            prop.measure(np.linalg.norm(m @ one_s.vec - one_r.vec), tol, (h, "unital"))

    iso = rep.check("ISO")
    for h, x in dom:
        samples = B.basis(x)
        if B.dim(x):
            samples.append(random_unit_element(B, x, rng))
        for i, b in enumerate(samples):
            nb = B.norm(b)
            iso.measure(abs(B.norm(A.apply(h, b)) - nb), tol, (h, x, i), nb)
    return rep


class ZSProductBundle(FellBundle):
    """Fibers over ``(x, h)`` are copies of the base fiber over ``x``."""

    def __init__(self, A: CompatibleAction):
        self.action = A
        self.base = A.base
        self.pair = A.pair
        self.groupoid = zs_groupoid(A.pair)
        self.name = f"{A.name} product".strip()

    def dim(self, x: ArrowId) -> int:
        return self.base.dim(x[0])

    def split(self, c: Element) -> tuple[Element, ArrowId]:
        """``(b, h)`` with ``b`` in the base bundle."""
        x, h = c.arrow
        return Element(x, c.vec), h

    def make(self, b: Element, h: ArrowId) -> Element:
        return Element((b.arrow, h), b.vec)

    def _twisted_factors(self, c1: Element, c2: Element) -> tuple[Element, Element, ArrowId]:
        self._check_composable(c1, c2)
        (x, g), (y, _) = c1.arrow, c2.arrow
        moved = self.action.apply(g, Element(y, c2.vec))
        return Element(x, c1.vec), moved, self.groupoid.comp[(c1.arrow, c2.arrow)]

    def mult(self, c1: Element, c2: Element) -> Element:
        a, moved, target = self._twisted_factors(c1, c2)
        return Element(target, self.base.mult(a, moved).vec)

    def mult_residual(self, c1: Element, c2: Element) -> float:
        a, moved, _ = self._twisted_factors(c1, c2)
        return self.base.mult_residual(a, moved)

    def star(self, c: Element) -> Element:
        b, h = self.split(c)
        hi = self.pair.H.inv[h]
        return Element(self.groupoid.inv[c.arrow], self.action.apply(hi, self.base.star(b)).vec)

    def star_residual(self, c: Element) -> float:
        return self.base.star_residual(self.split(c)[0])

    def norm(self, c: Element) -> float:
        return self.base.norm(self.split(c)[0])

    def positivity_defect(self, c: Element) -> float:
        return self.base.positivity_defect(self.split(c)[0])

    def trace(self, c: Element) -> complex:
        return self.base.trace(self.split(c)[0])

    def unit_element(self, u: UnitId) -> Element | None:
        one = self.base.unit_element(u)
        if one is None:
            return None
        return Element(self.groupoid.unit_arrow[u], one.vec)


def zs_bundle(A: CompatibleAction) -> ZSProductBundle:
    """The product bundle of ``A``, cached so that sections built from ``A`` share it."""
    if "_product_bundle" not in A.__dict__:
        A._product_bundle = ZSProductBundle(A)
    return A._product_bundle


def canonical_embeddings(A: CompatibleAction) -> tuple[Callable, Callable]:
    """``phi(b) = (b, s(b))`` and ``psi(z, h) = (z 1_r(h), h)``."""
    P, B = A.pair, A.base

    def phi(b: Element) -> Element:
        return Element(P.embed_G(b.arrow), b.vec)

    def psi(z: complex, h: ArrowId) -> Element:
        one = B.unit_element(P.H.rng[h])
        if one is None:
            raise ValueError("psi needs a unit in every unit fiber of the base")
        return Element(P.embed_H(h), complex(z) * one.vec)

    return phi, psi


def check_embeddings(A: CompatibleAction, tol: float = DEFAULT_TOL) -> dict[str, ValidationReport]:
    """Run the generic homomorphism checker on both canonical embeddings."""
    P = A.pair
    Z = zs_bundle(A)
    phi, psi = canonical_embeddings(A)
    out = {"phi": check_bundle_hom(A.base, Z, {x: P.embed_G(x) for x in P.G.arrows}, phi, tol)}
    if A.base.unital:
        LH = line_bundle(P.H)
        out["psi"] = check_bundle_hom(
            LH, Z, {h: P.embed_H(h) for h in P.H.arrows}, lambda e: psi(e.vec[0], e.arrow), tol
        )
    return out


# ---------------------------------------------------------------------------
# unitary families


class UnitaryFamily:
    """``u[h]`` in the fiber of ``bundle`` over ``(r(h), h)``."""

    def __init__(self, bundle: FellBundle, pair: MatchedPair, u: Mapping[ArrowId, Element], name: str = ""):
        self.bundle, self.pair, self.u, self.name = bundle, pair, dict(u), name


def validate_unitary_family(
    C: FellBundle, pair: MatchedPair, u: Mapping[ArrowId, Element], tol: float = DEFAULT_TOL
) -> ValidationReport:
    H = pair.H
    rep = ValidationReport(subject="unitary family", tol=tol)
    struct = rep.check("STRUCT", kind=STRUCTURE)
    struct.record(C.groupoid.same_tables(zs_groupoid(pair)), ("bundle is not over the product groupoid",))
    if not struct.passed:
        return rep
    for h in H.arrows:
        ok = h in u and u[h].arrow == pair.embed_H(h) and u[h].vec.shape == (C.dim(pair.embed_H(h)),)
        struct.record(ok, ("u_h not in the fiber over (r(h), h)", h))
    if not struct.passed:
        return rep
    u1 = rep.check("U1")
    for h, k, hk in H.composable():
        u1.measure(np.linalg.norm(C.mult(u[h], u[k]).vec - u[hk].vec), tol, (h, k))
    for h in H.arrows:
        u1.measure(np.linalg.norm(C.star(u[h]).vec - u[H.inv[h]].vec), tol, (h, "star"))
    u2 = rep.check("U2")
    uni = rep.check("UNITARY")
    for v in H.units:
        one = C.unit_element(v)
        u2.record(one is not None, (v, "no unit"))
        if one is not None:
            u2.measure(np.linalg.norm(u[H.unit_arrow[v]].vec - one.vec), tol, (v,))
    for h in H.arrows:
        one_r, one_s = C.unit_element(H.rng[h]), C.unit_element(H.src[h])
        if one_r is None or one_s is None:
            continue
        us = C.star(u[h])
        uni.measure(np.linalg.norm(C.mult(u[h], us).vec - one_r.vec), tol, (h, "u u*"))
        uni.measure(np.linalg.norm(C.mult(us, u[h]).vec - one_s.vec), tol, (h, "u* u"))
    return rep


def action_from_unitary_family(
    C: FellBundle, pair: MatchedPair, u: Mapping[ArrowId, Element], name: str = ""
) -> tuple[PullbackBundle, CompatibleAction]:
    """Pull ``C`` back along ``x -> (x, s(x))`` and set ``beta_h(a) = u_h a u_{h|x}*``."""
    if not C.groupoid.same_tables(zs_groupoid(pair)):
        raise StructuralError("bundle is not over the product groupoid of the given pair")
    G = pair.G
    iota = {x: pair.embed_G(x) for x in G.arrows}
    base = PullbackBundle(C, iota, G, name=f"pullback({C.name})")
    beta = {}
    for h, x in pair.domain():
        k = pair.res[(h, x)]
        target = iota[pair.act[(h, x)]]
        uk_star = C.star(u[k])
        cols = []
        for e in C.basis(iota[x]):
            v = C.mult(C.mult(u[h], e), uk_star)
            if v.arrow != target:
                raise StructuralError(f"u_h a u_(h|x)* left the expected fiber at {(h, x)!r}")
            cols.append(v.vec)
        beta[(h, x)] = np.array(cols, dtype=complex).T.reshape(C.dim(target), C.dim(iota[x]))
    return base, CompatibleAction(pair, base, beta, name=name or f"{C.name} unitary family")


def theta_map(A: CompatibleAction, u: Mapping[ArrowId, Element], C: FellBundle) -> Callable[[Element], Element]:
    """``Theta(a, h) = a u_h`` from the product bundle into ``C``."""
    P = A.pair

    def theta(c: Element) -> Element:
        x, h = c.arrow
        return C.mult(Element(P.embed_G(x), c.vec), u[h])

    return theta


def theta_iso(
    base: FellBundle,
    A: CompatibleAction,
    u: Mapping[ArrowId, Element],
    C: FellBundle,
    tol: float = DEFAULT_TOL,
) -> IsomorphismReport:
    """Residuals for Theta being a fiber-preserving isometric *-isomorphism onto ``C``."""
    Z = zs_bundle(A)
    K = Z.groupoid
    if base is not A.base:
        raise ValueError("base must be the bundle the action was built on")
    theta = theta_map(A, u, C)
    rep = check_bundle_hom(Z, C, {k: k for k in K.arrows}, theta, tol)
    rep.subject = "Theta isomorphism"
    bij = rep.check("BIJECTIVE")
    trip = rep.check("ROUNDTRIP")
    P = A.pair
    for k in K.arrows:
        x, h = k
        cols = [theta(e).vec for e in Z.basis(k)]
        dz, dc = Z.dim(k), C.dim(k)
        bij.record(dz == dc, (k, "dimension"))
        if dz and dz == dc:
            sv = np.linalg.svd(np.array(cols).T, compute_uv=False)
            bij.record(sv[-1] > 1e-8 * sv[0], (k, "rank"))
        uh_star = C.star(u[h])
        for i, c in enumerate(C.basis(k)):
            a = C.mult(c, uh_star)
            trip.record(a.arrow == P.embed_G(x), (k, i, "arrow"))
            back = theta(Element(k, a.vec))
            trip.measure(np.linalg.norm(back.vec - c.vec), tol, (k, i))
    return rep


# ---------------------------------------------------------------------------
# standard actions


def trivial_h_pair(G) -> MatchedPair:
    """``G`` matched with the discrete groupoid on its units."""
    H = discrete_groupoid(G.units)
    act = {(G.rng[x], x): x for x in G.arrows}
    res = {(G.rng[x], x): G.src[x] for x in G.arrows}
    return MatchedPair(G, H, act, res, name=f"{G.name} with trivial H".strip())


def trivial_action(base: FellBundle) -> CompatibleAction:
    """Units act as identities."""
    P = trivial_h_pair(base.groupoid)
    beta = {(h, x): np.eye(base.dim(x), dtype=complex) for h, x in P.domain()}
    return CompatibleAction(P, base, beta, name=f"trivial({base.name})")


def line_action(pair: MatchedPair) -> CompatibleAction:
    """``beta(h, (z, x)) = (z, h.x)`` on the line bundle over G."""
    base = line_bundle(pair.G)
    beta = {key: np.ones((1, 1), dtype=complex) for key in pair.domain()}
    return CompatibleAction(pair, base, beta, name=f"line_canonical:{pair.name}")
