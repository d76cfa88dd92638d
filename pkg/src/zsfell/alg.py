"""The convolution *-algebra of sections of a finite Fell bundle.

A :class:`Section` is one coefficient vector per arrow, stored as a single flat
vector in the order fixed by :class:`AlgebraIndex`. The C*-norm is the
operator norm of left convolution on the GNS space of the trace
``phi(sigma) = sum_u tr sigma(u)``. Finite groupoids are amenable, so this
reduced norm is also the universal one.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple

import numpy as np

from .fell import Element, FellBundle, line_bundle
from .gpd import ArrowId
from .zsb import CompatibleAction, zs_bundle

NORM_TOL = 1e-8
RANK_TOL = 1e-8


class AlgebraIndex:
    """Global basis: (arrow, fiber index) pairs in declaration order."""

    def __init__(self, bundle: FellBundle):
        self.bundle = bundle
        self.offsets: dict[ArrowId, int] = {}
        off = 0
        for x in bundle.groupoid.arrows:
            self.offsets[x] = off
            off += bundle.dim(x)
        self.dim = off

    def slice(self, x: ArrowId) -> slice:
        o = self.offsets[x]
        return slice(o, o + self.bundle.dim(x))

    def labels(self) -> list[tuple[ArrowId, int]]:
        return [(x, i) for x in self.bundle.groupoid.arrows for i in range(self.bundle.dim(x))]


def algebra_index(bundle: FellBundle) -> AlgebraIndex:
    cache = bundle.__dict__
    if "_alg_index" not in cache:
        cache["_alg_index"] = AlgebraIndex(bundle)
    return cache["_alg_index"]


class Section:
    def __init__(self, bundle: FellBundle, vec=None):
        self.bundle = bundle
        self.index = algebra_index(bundle)
        if vec is None:
            vec = np.zeros(self.index.dim, dtype=complex)
        self.vec = np.asarray(vec, dtype=complex).reshape(-1)
        if self.vec.shape != (self.index.dim,):
            raise ValueError(f"section needs {self.index.dim} coefficients, got {self.vec.shape}")
        if not np.all(np.isfinite(self.vec)):
            raise ValueError("section coefficients must be finite")

    @classmethod
    def from_coeffs(cls, bundle: FellBundle, coeffs: Mapping[ArrowId, object]) -> Section:
        s = cls(bundle)
        for x, c in coeffs.items():
            s.vec[s.index.slice(x)] = np.asarray(c, dtype=complex).reshape(-1)
        return s

    def __getitem__(self, x: ArrowId) -> np.ndarray:
        return self.vec[self.index.slice(x)]

    def at(self, x: ArrowId) -> Element:
        return Element(x, self[x])

    @property
    def coeffs(self) -> dict[ArrowId, np.ndarray]:
        return {x: self[x].copy() for x in self.bundle.groupoid.arrows}

    def _same(self, other: Section) -> None:
        if other.bundle is not self.bundle:
            raise ValueError("sections live in different bundles")

    def __add__(self, other: Section) -> Section:
        self._same(other)
        return Section(self.bundle, self.vec + other.vec)

    def __sub__(self, other: Section) -> Section:
        self._same(other)
        return Section(self.bundle, self.vec - other.vec)

    def __mul__(self, z: complex) -> Section:
        return Section(self.bundle, z * self.vec)

    __rmul__ = __mul__

    def __neg__(self) -> Section:
        return Section(self.bundle, -self.vec)

    def __repr__(self) -> str:
        support = [x for x in self.bundle.groupoid.arrows if np.any(self[x])]
        return f"<Section over {self.bundle.name!r} supported on {support!r}>"


def delta(bundle: FellBundle, b: Element) -> Section:
    """The section equal to ``b`` at its arrow and zero elsewhere."""
    return Section.from_coeffs(bundle, {b.arrow: b.vec})


def basis_sections(bundle: FellBundle) -> list[Section]:
    idx = algebra_index(bundle)
    return [Section(bundle, v) for v in np.eye(idx.dim, dtype=complex)]


def unit_section(bundle: FellBundle) -> Section:
    """Sum of the unit elements of all unit fibers."""
    s = Section(bundle)
    for u in bundle.groupoid.units:
        one = bundle.unit_element(u)
        if one is None:
            raise ValueError(f"unit fiber at {u!r} has no unit")
        s.vec[s.index.slice(one.arrow)] = one.vec
    return s


def convolve(sigma: Section, tau: Section) -> Section:
    """``(sigma tau)(x) = sum over yz = x of sigma(y) tau(z)``."""
    sigma._same(tau)
    B = sigma.bundle
    out = Section(B)
    for y, z, yz in B.groupoid.composable():
        a, b = sigma[y], tau[z]
        if not (a.any() and b.any()):
            continue
        out.vec[out.index.slice(yz)] += np.einsum("i,j,ijk->k", a, b, B.mult_tensor(y, z))
    return out


def star_section(sigma: Section) -> Section:
    """``sigma*(x) = sigma(x^-1)*``."""
    B = sigma.bundle
    out = Section(B)
    for x in B.groupoid.arrows:
        xi = B.groupoid.inv[x]
        out.vec[out.index.slice(x)] = sigma[xi].conj() @ B.star_matrix(xi)
    return out


def left_matrix(sigma: Section) -> np.ndarray:
    """Matrix of ``tau -> sigma tau`` in the global basis."""
    B = sigma.bundle
    idx = sigma.index
    L = np.zeros((idx.dim, idx.dim), dtype=complex)
    for y, z, yz in B.groupoid.composable():
        a = sigma[y]
        if not a.any():
            continue
        L[idx.slice(yz), idx.slice(z)] += np.einsum("i,ijk->kj", a, B.mult_tensor(y, z))
    return L


def i_norm_r(sigma: Section) -> float:
    B, G = sigma.bundle, sigma.bundle.groupoid
    return max(sum(B.norm(sigma.at(x)) for x in G.range_fiber(v)) for v in G.units)


def i_norm_s(sigma: Section) -> float:
    B, G = sigma.bundle, sigma.bundle.groupoid
    return max(sum(B.norm(sigma.at(x)) for x in G.source_fiber(v)) for v in G.units)


def i_norm(sigma: Section) -> float:
    return max(i_norm_r(sigma), i_norm_s(sigma))


def trace_functional(sigma: Section) -> complex:
    """``phi(sigma) = sum_u tr sigma(u)``."""
    B = sigma.bundle
    return complex(sum(sigma[B.groupoid.unit_arrow[u]] @ B.trace_vector(u) for u in B.groupoid.units))


def gns_gram(bundle: FellBundle) -> np.ndarray:
    """``Q`` with ``<sigma, tau> = phi(tau* sigma) = tau^H Q sigma``; block diagonal by arrow."""
    cache = bundle.__dict__
    if "_gns_gram" not in cache:
        G = bundle.groupoid
        idx = algebra_index(bundle)
        Q = np.zeros((idx.dim, idx.dim), dtype=complex)
        for x in G.arrows:
            if not bundle.dim(x):
                continue
            xi = G.inv[x]
            T = bundle.mult_tensor(xi, x)
            t = bundle.trace_vector(G.src[x])
            block = np.einsum("ja,aik,k->ji", bundle.star_matrix(x), T, t)
            Q[idx.slice(x), idx.slice(x)] = (block + block.conj().T) / 2
        cache["_gns_gram"] = Q
    return cache["_gns_gram"]


def gns_factor(bundle: FellBundle) -> tuple[np.ndarray, np.ndarray]:
    """``R`` and ``R^-1`` with ``Q = R^H R``."""
    cache = bundle.__dict__
    if "gns_factor" not in cache:
        Q = gns_gram(bundle)
        R = np.linalg.cholesky(Q).conj().T
        cache["gns_factor"] = (R, np.linalg.inv(R))
    return cache["gns_factor"]


def gns_inner(sigma: Section, tau: Section) -> complex:
    sigma._same(tau)
    return complex(tau.vec.conj() @ gns_gram(sigma.bundle) @ sigma.vec)


def gns_operator(sigma: Section) -> np.ndarray:
    """Left convolution by ``sigma`` in GNS-orthonormal coordinates."""
    R, Ri = gns_factor(sigma.bundle)
    return R @ left_matrix(sigma) @ Ri


def cstar_norm(sigma: Section) -> float:
    M = gns_operator(sigma)
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


# ---------------------------------------------------------------------------
# the homomorphisms i and j


def hom_i(sigma: Section, A: CompatibleAction) -> Section:
    """``i(sigma)(x, h) = (sigma(x), h)`` when ``h`` is a unit, else zero."""
    if not sigma.bundle.groupoid.same_tables(A.pair.G):
        raise ValueError("section is not over the base groupoid of the action")
    Z = zs_bundle(A)
    out = Section(Z)
    for x in A.pair.G.arrows:
        out.vec[out.index.slice(A.pair.embed_G(x))] = sigma[x]
    return out


def hom_j(f, A: CompatibleAction) -> Section:
    """``j(f)(x, h) = (f(h) 1_x, h)`` when ``x = r(h)``, else zero.

    ``f`` is a mapping from H-arrows to scalars or a section of the line
    bundle over H.
    """
    P = A.pair
    if isinstance(f, Section):
        f = {h: f[h][0] for h in P.H.arrows}
    Z = zs_bundle(A)
    out = Section(Z)
    for h in P.H.arrows:
        one = A.base.unit_element(P.H.rng[h])
        if one is None:
            raise ValueError("j needs a unit in every unit fiber of the base")
        out.vec[out.index.slice(P.embed_H(h))] = complex(f.get(h, 0)) * one.vec
    return out


def h_algebra_bundle(A: CompatibleAction) -> FellBundle:
    """The line bundle over H, whose sections form the algebra that ``j`` maps from."""
    cache = A.__dict__
    if "_h_line" not in cache:
        cache["_h_line"] = line_bundle(A.pair.H)
    return cache["_h_line"]


class BlendRank(NamedTuple):
    rank: int
    full_dim: int


def _rank(rows: list[np.ndarray]) -> int:
    if not rows:
        return 0
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(sv > RANK_TOL * sv[0])) if sv[0] > 0 else 0


def blend_ranks(A: CompatibleAction) -> tuple[int, int, int]:
    """Ranks of the spans of ``i(e) j(d)`` and ``j(d) i(e)``, and ``dim Gamma(K)``.

    ``e`` runs over the global basis of sections of the base bundle and
    ``d`` over delta functions on H-arrows.
    """
    Z = zs_bundle(A)
    if not A.base.unital:
        raise ValueError("blend rank needs unital unit fibers")
    i_gens = [hom_i(s, A) for s in basis_sections(A.base)]
    j_gens = [hom_j({h: 1.0}, A) for h in A.pair.H.arrows]
    ij = [convolve(a, b).vec for a in i_gens for b in j_gens]
    ji = [convolve(b, a).vec for a in i_gens for b in j_gens]
    return _rank(ij), _rank(ji), algebra_index(Z).dim


def blend_rank(A: CompatibleAction) -> BlendRank:
    r_ij, r_ji, full = blend_ranks(A)
    if r_ij != r_ji:
        raise ArithmeticError(f"i.j and j.i spans differ in rank: {r_ij} != {r_ji}")
    return BlendRank(r_ij, full)


def is_star_hom_residual(
    f, sources: list[Section], target_product=convolve, target_star=star_section
) -> tuple[float, float]:
    """Worst ``|f(st) - f(s)f(t)|`` and ``|f(s*) - f(s)*|`` over ``sources``."""
    mult = star = 0.0
    for s in sources:
        fs = f(s)
        star = max(star, float(np.linalg.norm(f(star_section(s)).vec - target_star(fs).vec)))
        for t in sources:
            lhs = f(convolve(s, t))
            rhs = target_product(fs, f(t))
            mult = max(mult, float(np.linalg.norm(lhs.vec - rhs.vec)))
    return mult, star

