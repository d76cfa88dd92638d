"""Covariant representations and their integrated forms.

Hilbert bundles are finite: ``H(v) = C^m(v)`` over each unit, and the space of
square-integrable sections is ``sum_v C^m(v)`` with inner product
``sum_v mu(v) <xi(v), eta(v)>``. The modular cocycle of a weighted counting
measure is ``Delta(e) = mu(r(e)) / mu(s(e))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .alg import Section, algebra_index, convolve, gns_factor, hom_i, i_norm, star_section
from .fell import DEFAULT_TOL, Element, FellBundle
from .gpd import ArrowId, FiniteGroupoid, UnitId, zs_groupoid
from .report import STRUCTURE, StructuralError, ValidationReport
from .zsb import CompatibleAction, ZSProductBundle

NORM_TOL = 1e-8


class UnitMeasure:
    """Strictly positive weights on the units."""

    def __init__(self, weights: Mapping[UnitId, float]):
        self.weights = {u: float(w) for u, w in weights.items()}
        bad = [u for u, w in self.weights.items() if not (np.isfinite(w) and w > 0)]
        if bad:
            raise ValueError(f"unit measure must be strictly positive, fails at {bad!r}")

    @classmethod
    def uniform(cls, units: Iterable[UnitId]) -> UnitMeasure:
        return cls({u: 1.0 for u in units})

    def __getitem__(self, u: UnitId) -> float:
        return self.weights[u]

    def modular(self, G: FiniteGroupoid, e: ArrowId) -> float:
        """``Delta(e) = mu(r(e)) / mu(s(e))``."""
        return self.weights[G.rng[e]] / self.weights[G.src[e]]

    def is_uniform(self) -> bool:
        return len(set(self.weights.values())) <= 1


@dataclass
class FiniteHilbertBundle:
    m: dict
    order: tuple = field(default=())

    def __post_init__(self):
        if not self.order:
            self.order = tuple(self.m)
        if any(int(k) < 0 for k in self.m.values()):
            raise ValueError("fiber dimensions must be non-negative")
        self.offsets = {}
        off = 0
        for u in self.order:
            self.offsets[u] = off
            off += self.m[u]
        self.dim = off

    def slice(self, u: UnitId) -> slice:
        return slice(self.offsets[u], self.offsets[u] + self.m[u])


class BlockOperator:
    """A matrix on ``sum_v C^m(v)`` with the mu-weighted inner product."""

    def __init__(self, matrix: np.ndarray, hb: FiniteHilbertBundle, mu: UnitMeasure):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.hb, self.mu = hb, mu
        if self.matrix.shape != (hb.dim, hb.dim):
            raise StructuralError(f"operator shape {self.matrix.shape} does not match bundle dim {hb.dim}")

    def _weights(self) -> np.ndarray:
        return np.concatenate([np.full(self.hb.m[u], self.mu[u]) for u in self.hb.order]) if self.hb.dim else np.zeros(0)

    def block(self, v: UnitId, w: UnitId) -> np.ndarray:
        return self.matrix[self.hb.slice(v), self.hb.slice(w)]

    def adjoint(self) -> BlockOperator:
        """Adjoint for the weighted inner product: ``W^-1 A^H W``."""
        w = self._weights()
        return BlockOperator((self.matrix.conj().T * w[None, :]) / w[:, None], self.hb, self.mu)

    def norm(self) -> float:
        if not self.hb.dim:
            return 0.0
        s = np.sqrt(self._weights())
        return float(np.linalg.norm(s[:, None] * self.matrix / s[None, :], 2))

    def inner(self, xi: np.ndarray, eta: np.ndarray) -> complex:
        return complex(np.sum(self._weights() * xi * eta.conj()))

    def __matmul__(self, other: BlockOperator) -> BlockOperator:
        return BlockOperator(self.matrix @ other.matrix, self.hb, self.mu)

    def __sub__(self, other: BlockOperator) -> BlockOperator:
        return BlockOperator(self.matrix - other.matrix, self.hb, self.mu)


class StrictRep:
    """``psi[x][i]``: image of basis element ``i`` of the fiber over ``x``, a map ``H(s(x)) -> H(r(x))``."""

    def __init__(
        self,
        bundle: FellBundle,
        hb: FiniteHilbertBundle,
        psi: Mapping[ArrowId, np.ndarray],
        mu: UnitMeasure | None = None,
    ):
        self.bundle, self.hb = bundle, hb
        self.psi = {x: np.asarray(v, dtype=complex) for x, v in psi.items()}
        self.mu = mu or UnitMeasure.uniform(bundle.groupoid.units)

    def apply(self, b: Element) -> np.ndarray:
        return np.tensordot(b.vec, self.psi[b.arrow], axes=1)


@dataclass
class CovariantRep:
    mu: UnitMeasure
    hb: FiniteHilbertBundle
    pi: dict  # G-arrow -> array (dim fiber, m(r), m(s))
    M: dict  # H-arrow -> array (m(r), m(s))

    def apply_pi(self, b: Element) -> np.ndarray:
        return np.tensordot(b.vec, self.pi[b.arrow], axes=1)


def _shape_ok(arr: np.ndarray, shape: tuple) -> bool:
    return arr.shape == shape and bool(np.all(np.isfinite(arr)))


def _check_star_functor(
    rep: ValidationReport, B: FellBundle, maps: Mapping, hb: FiniteHilbertBundle, tol: float, prefix: str
) -> None:
    G = B.groupoid
    mult, star = rep.check(f"{prefix}_MULT"), rep.check(f"{prefix}_STAR")
    for x, y, xy in G.composable():
        T = B.mult_tensor(x, y)
        if not T.size:
            continue
        lhs = np.einsum("ijk,kab->ijab", T, maps[xy])
        rhs = np.einsum("iab,jbc->ijac", maps[x], maps[y])
        if lhs.size:
            mult.measure(np.abs(lhs - rhs).max(), tol, (x, y), float(np.abs(lhs).max()))
    for x in G.arrows:
        if not B.dim(x):
            continue
        lhs = np.einsum("ia,abc->ibc", B.star_matrix(x), maps[G.inv[x]])
        rhs = np.conj(np.transpose(maps[x], (0, 2, 1)))
        if lhs.size:
            star.measure(np.abs(lhs - rhs).max(), tol, (x,))


def validate_strict_rep(R: StrictRep, tol: float = DEFAULT_TOL) -> ValidationReport:
    B, G, hb = R.bundle, R.bundle.groupoid, R.hb
    rep = ValidationReport(subject="strict representation", tol=tol)
    struct = rep.check("STRUCT", kind=STRUCTURE)
    for x in G.arrows:
        shape = (B.dim(x), hb.m[G.rng[x]], hb.m[G.src[x]])
        struct.record(x in R.psi and _shape_ok(R.psi[x], shape), (x,))
    if not struct.passed:
        return rep
    _check_star_functor(rep, B, R.psi, hb, tol, "PSI")
    return rep


def validate_covariant_rep(R: CovariantRep, A: CompatibleAction, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Residuals for the *-functor laws of ``pi``, the homomorphism and unitarity
    laws of ``M``, and covariance ``M_h pi(b) = pi(beta_h b) M_{h|p(b)}``."""
    P, B = A.pair, A.base
    G, H, hb = P.G, P.H, R.hb
    rep = ValidationReport(subject="covariant representation", tol=tol)
    struct = rep.check("STRUCT", kind=STRUCTURE)
    struct.record(set(hb.m) == set(G.units) and set(R.mu.weights) == set(G.units), ("unit sets",))
    if not struct.passed:
        return rep
    for x in G.arrows:
        shape = (B.dim(x), hb.m[G.rng[x]], hb.m[G.src[x]])
        struct.record(x in R.pi and _shape_ok(R.pi[x], shape), ("pi", x))
    for h in H.arrows:
        shape = (hb.m[H.rng[h]], hb.m[H.src[h]])
        struct.record(h in R.M and _shape_ok(R.M[h], shape), ("M", h))
    if not struct.passed:
        return rep

    K = zs_groupoid(P)
    cocycle = rep.check("DELTA")
    for a, b, ab in K.composable():
        d = R.mu.modular(K, ab)
        cocycle.measure(abs(d - R.mu.modular(K, a) * R.mu.modular(K, b)), tol, (a, b), d)

    _check_star_functor(rep, B, R.pi, hb, tol, "PI")

    hom, unit, unitary = rep.check("M_HOM"), rep.check("M_UNIT"), rep.check("UNITARY")
    for h, k, hk in H.composable():
        lhs, rhs = R.M[hk], R.M[h] @ R.M[k]
        if lhs.size:
            hom.measure(np.abs(lhs - rhs).max(), tol, (h, k))
    for u in H.units:
        m = R.M[H.unit_arrow[u]]
        if m.size:
            unit.measure(np.abs(m - np.eye(m.shape[0])).max(), tol, (u,))
    for h in H.arrows:
        m = R.M[h]
        unitary.record(m.shape[0] == m.shape[1], (h, "not square"))
        if m.size and m.shape[0] == m.shape[1]:
            unitary.measure(np.abs(m.conj().T @ m - np.eye(m.shape[1])).max(), tol, (h,))
            unitary.measure(np.abs(m @ m.conj().T - np.eye(m.shape[0])).max(), tol, (h, "co"))

    cov = rep.check("COV")
    for h, x in P.domain():
        if not B.dim(x):
            continue
        k = P.res[(h, x)]
        hx = P.act[(h, x)]
        lhs = np.einsum("ab,ibc->iac", R.M[h], R.pi[x])
        moved = np.einsum("ji,jab->iab", A.beta[(h, x)], R.pi[hx])
        rhs = np.einsum("iab,bc->iac", moved, R.M[k])
        if lhs.size:
            cov.measure(np.abs(lhs - rhs).max(), tol, (h, x), float(np.abs(lhs).max()))
    return rep


def integrate(R: CovariantRep, sigma: Section) -> BlockOperator:
    """``L(sigma) xi(v) = sum over e = (x, h) in K^v of pi(sigma_B(e)) M_h xi(s(e)) Delta(e)^-1/2``."""
    Z = sigma.bundle
    if not isinstance(Z, ZSProductBundle):
        raise TypeError("integrate expects a section of a Zappa-Szep product bundle")
    K, hb = Z.groupoid, R.hb
    L = np.zeros((hb.dim, hb.dim), dtype=complex)
    for e in K.arrows:
        c = sigma[e]
        if not c.any():
            continue
        x, h = e
        block = np.tensordot(c, R.pi[x], axes=1) @ R.M[h] / np.sqrt(R.mu.modular(K, e))
        L[hb.slice(K.rng[e]), hb.slice(K.src[e])] += block
    return BlockOperator(L, hb, R.mu)


def integrate_strict(psi: StrictRep, sigma: Section, mu: UnitMeasure | None = None) -> BlockOperator:
    """``L(sigma) xi(v) = sum over e in K^v of psi(sigma(e)) xi(s(e)) Delta(e)^-1/2``."""
    mu = mu or psi.mu
    K, hb = sigma.bundle.groupoid, psi.hb
    L = np.zeros((hb.dim, hb.dim), dtype=complex)
    for e in K.arrows:
        c = sigma[e]
        if not c.any():
            continue
        block = np.tensordot(c, psi.psi[e], axes=1) / np.sqrt(mu.modular(K, e))
        L[hb.slice(K.rng[e]), hb.slice(K.src[e])] += block
    return BlockOperator(L, hb, mu)


def check_integrated_form(
    R: CovariantRep,
    sections: list[Section],
    tol: float = DEFAULT_TOL,
    norm_tol: float = NORM_TOL,
) -> ValidationReport:
    """``L`` multiplicative, *-preserving for the weighted adjoint, and I-norm decreasing."""
    rep = ValidationReport(subject="integrated form", tol=tol)
    mult, star, bound = rep.check("L_MULT"), rep.check("L_STAR"), rep.check("I_NORM")
    ops = [integrate(R, s) for s in sections]
    for i, (s, L) in enumerate(zip(sections, ops)):
        scale = max(1.0, L.norm())
        star.measure(np.abs(integrate(R, star_section(s)).matrix - L.adjoint().matrix).max(), tol, (i,), scale)
        bound.measure(max(0.0, L.norm() - i_norm(s)), norm_tol, (i,), i_norm(s))
        t, Lt = sections[(i + 1) % len(sections)], ops[(i + 1) % len(sections)]
        lhs = integrate(R, convolve(s, t)).matrix
        rhs = (L @ Lt).matrix
        mult.measure(np.abs(lhs - rhs).max(), tol, (i,), scale * max(1.0, Lt.norm()))
    return rep


def regular_strict_rep(C: FellBundle, mu: UnitMeasure | None = None) -> StrictRep:
    """``H(v)`` is the sum of the fibers over arrows ending at ``v``; ``psi(c)`` is left multiplication.

    Coordinates are orthonormal for the trace inner product
    ``<a, b> = tr(b* a)``, which is the HS inner product on matrix fibers.
    """
    G = C.groupoid
    idx = algebra_index(C)
    R, Ri = gns_factor(C)
    local: dict = {}
    m = {}
    for v in G.units:
        off = 0
        for x in G.range_fiber(v):
            local[x] = slice(off, off + C.dim(x))
            off += C.dim(x)
        m[v] = off
    hb = FiniteHilbertBundle(m, tuple(G.units))
    psi = {x: np.zeros((C.dim(x), m[G.rng[x]], m[G.src[x]]), dtype=complex) for x in G.arrows}
    for x, e, xe in G.composable():
        T = C.mult_tensor(x, e)
        if not T.size:
            continue
        r_out = R[idx.slice(xe), idx.slice(xe)]
        r_in = Ri[idx.slice(e), idx.slice(e)]
        # column j of the block is the product e_i e_j, in whitened coordinates
        psi[x][:, local[xe], local[e]] = np.einsum("ab,ijb,jc->iac", r_out, T, r_in)
    return StrictRep(C, hb, psi, mu or UnitMeasure.uniform(G.units))


def disintegrate(psi: StrictRep, A: CompatibleAction) -> CovariantRep:
    """``pi(b) = psi(b, s(b))`` and ``M_h = psi(1_r(h), h)``."""
    P, B = A.pair, A.base
    if not psi.bundle.groupoid.same_tables(zs_groupoid(P)):
        raise ValueError("strict representation is not of the product bundle of this action")
    pi = {x: psi.psi[P.embed_G(x)] for x in P.G.arrows}
    M = {}
    for h in P.H.arrows:
        one = B.unit_element(P.H.rng[h])
        if one is None:
            raise ValueError("disintegration needs a unit in every unit fiber of the base")
        M[h] = np.tensordot(one.vec, psi.psi[P.embed_H(h)], axes=1)
    return CovariantRep(psi.mu, psi.hb, pi, M)


def twisted_amplification(pi: StrictRep, A: CompatibleAction) -> CovariantRep:
    """The covariant pair ``(Pi, M)`` on ``l2(G x H) (x) H_pi`` for a pair of groups.

    ``Pi(b)(d_(x,h) (x) xi) = d_(p(b)x, h) (x) pi(beta(h^-1 | (p(b)x)^-1, b)) xi`` and
    ``M_h(d_(x,k) (x) xi) = d_((e,h)(x,k)) (x) xi``.
    """
    P, B = A.pair, A.base
    G, H = P.G, P.H
    if not (G.is_group and H.is_group):
        raise ValueError("twisted amplification is only defined for a pair of groups")
    K = zs_groupoid(P)
    u = G.units[0]
    m = pi.hb.m[u]
    n = len(K) * m
    pos = {k: K.index[k] * m for k in K.arrows}
    e_G = G.unit_arrow[u]

    def blk(k):
        return slice(pos[k], pos[k] + m)

    Pi = {}
    for y in G.arrows:
        mats = np.zeros((B.dim(y), n, n), dtype=complex)
        for x, h in K.arrows:
            yx = G.comp[(y, x)]
            k = P.res[(H.inv[h], G.inv[yx])]
            ky = P.act[(k, y)]
            # pi(beta_k(e_i)) for every basis element e_i of the fiber over y
            images = np.einsum("ji,jab->iab", A.beta[(k, y)], pi.psi[ky])
            mats[:, blk((yx, h)), blk((x, h))] = images
        Pi[y] = mats
    M = {}
    for h in H.arrows:
        mat = np.zeros((n, n), dtype=complex)
        for k in K.arrows:
            target = K.comp[((e_G, h), k)]
            mat[blk(target), blk(k)] = np.eye(m)
        M[h] = mat
    return CovariantRep(UnitMeasure({u: 1.0}), FiniteHilbertBundle({u: n}, (u,)), Pi, M)


def injectivity_check(sigma: Section, A: CompatibleAction, tol: float = NORM_TOL) -> ValidationReport:
    """Certify ``||L(i(sigma sigma*))|| >= ||sum_x sigma(x) sigma(x)*||`` for a pair of groups.

    The universal representation of the unit fiber is replaced by the regular
    strict representation, which is faithful and hence isometric there.
    """
    P, B = A.pair, A.base
    G = P.G
    if not (G.is_group and P.H.is_group):
        raise ValueError("injectivity check needs a pair of groups")
    u = G.units[0]
    e = G.unit_arrow[u]
    if B.unit_element(u) is None:
        raise ValueError("injectivity check needs a unital unit fiber")
    rep = ValidationReport(subject="injectivity", tol=tol)
    rep.notes.append("universal representation replaced by the faithful regular strict representation")

    tau = convolve(sigma, star_section(sigma))
    direct = B.zero(e)
    for x in G.arrows:
        s = sigma.at(x)
        direct = direct + B.mult(s, B.star(s))
    tau_e = tau.at(e)
    rep.check("TAU_E").measure(np.linalg.norm(tau_e.vec - direct.vec), DEFAULT_TOL, (e,), max(1.0, B.norm(direct)))

    pi = regular_strict_rep(B)
    cov = twisted_amplification(pi, A)
    L = integrate(cov, hom_i(tau, A))
    K = zs_groupoid(P)
    m = pi.hb.m[u]
    f0 = K.index[(e, P.H.unit_arrow[u])] * m
    compressed = L.matrix[f0:f0 + m, f0:f0 + m]
    pi_tau = pi.apply(tau_e)
    rep.check("COEFF").measure(np.abs(compressed - pi_tau).max() if m else 0.0, DEFAULT_TOL, (e,), max(1.0, B.norm(tau_e)))
    norm_tau = B.norm(tau_e)
    norm_pi = float(np.linalg.norm(pi_tau, 2)) if m else 0.0
    rep.check("FAITHFUL").measure(abs(norm_pi - norm_tau), tol, (e,), norm_tau)
    norm_L = L.norm()
    rep.check("BOUND").measure(max(0.0, norm_tau - norm_L), tol, (e,))
    nonzero = bool(np.any(sigma.vec))
    rep.check("NONZERO").record(not nonzero or norm_L > 0, ("L(i(sigma)) vanished",))
    rep.values.update(norm_L=norm_L, norm_tau_e=norm_tau, sigma_nonzero=nonzero)
    return rep


def round_trip_residual(psi: StrictRep, A: CompatibleAction, sections: Iterable[Section]) -> float:
    """Worst ``|integrate(disintegrate(psi), s) - integrate_strict(psi, s)|``."""
    R = disintegrate(psi, A)
    worst = 0.0
    for s in sections:
        diff = integrate(R, s).matrix - integrate_strict(psi, s).matrix
        worst = max(worst, float(np.abs(diff).max(initial=0.0)))
    return worst


def covariant_from_strict_base(psi: StrictRep, A: CompatibleAction) -> CovariantRep:
    """For trivial H: ``pi = psi`` and every ``M`` an identity."""
    P = A.pair
    if any(not P.H.is_unit_arrow(h) for h in P.H.arrows):
        raise ValueError("only meaningful when H has unit arrows only")
    M = {h: np.eye(psi.hb.m[P.H.rng[h]], dtype=complex) for h in P.H.arrows}
    return CovariantRep(psi.mu, psi.hb, dict(psi.psi), M)

