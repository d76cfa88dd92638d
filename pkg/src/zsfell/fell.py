"""Finite-dimensional Fell bundles over finite groupoids.

:class:`FellBundle` is the capability interface: fiber dimensions, a
bilinear product, a conjugate-linear involution, a norm, a positivity test on
unit fibers and a trace on unit fibers. Elements carry coordinates in a fixed
basis of their fiber, so every bundle also exposes structure constants
(:meth:`FellBundle.mult_tensor`, :meth:`FellBundle.star_matrix`) computed by
calling its own operations on basis elements.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .gpd import ArrowId, CompositionError, FiniteGroupoid, UnitId, check_groupoid_hom
from .report import STRUCTURE, StructuralError, ValidationReport

DEFAULT_TOL = 1e-9
# Gram-Schmidt rejects a basis vector whose remaining norm falls below this
# fraction of the largest input norm.
RANK_TOL = 1e-8


class Element:
    """A point of a bundle: an arrow and a coordinate vector in that fiber's basis."""

    __slots__ = ("arrow", "vec")

    def __init__(self, arrow: ArrowId, vec):
        self.arrow = arrow
        self.vec = np.asarray(vec, dtype=complex).reshape(-1)

    def _same(self, other: Element) -> None:
        if other.arrow != self.arrow:
            raise ValueError(f"elements live over different arrows: {self.arrow!r}, {other.arrow!r}")

    def __add__(self, other: Element) -> Element:
        self._same(other)
        return Element(self.arrow, self.vec + other.vec)

    def __sub__(self, other: Element) -> Element:
        self._same(other)
        return Element(self.arrow, self.vec - other.vec)

    def __neg__(self) -> Element:
        return Element(self.arrow, -self.vec)

    def __mul__(self, z: complex) -> Element:
        return Element(self.arrow, z * self.vec)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Element({self.arrow!r}, {np.round(self.vec, 12).tolist()})"


BundleElement = Element


class FellBundle(ABC):
    groupoid: FiniteGroupoid
    name: str = ""

    @abstractmethod
    def dim(self, x: ArrowId) -> int: ...

    @abstractmethod
    def mult(self, b: Element, c: Element) -> Element: ...

    @abstractmethod
    def star(self, b: Element) -> Element: ...

    @abstractmethod
    def norm(self, b: Element) -> float: ...

    @abstractmethod
    def positivity_defect(self, b: Element) -> float:
        """Zero iff ``b`` is positive; otherwise the size of the failure."""

    @abstractmethod
    def trace(self, b: Element) -> complex:
        """A faithful positive trace on each unit fiber."""

    def unit_element(self, u: UnitId) -> Element | None:
        return None

    def mult_residual(self, b: Element, c: Element) -> float:
        """Distance of the true product from the target fiber (zero unless realized concretely)."""
        return 0.0

    def star_residual(self, b: Element) -> float:
        return 0.0

    # derived helpers -------------------------------------------------------

    def element(self, x: ArrowId, coeffs) -> Element:
        e = Element(x, coeffs)
        if e.vec.shape != (self.dim(x),):
            raise StructuralError(f"fiber over {x!r} has dimension {self.dim(x)}, got {e.vec.shape}")
        return e

    def zero(self, x: ArrowId) -> Element:
        return Element(x, np.zeros(self.dim(x), dtype=complex))

    def basis(self, x: ArrowId) -> list[Element]:
        d = self.dim(x)
        return [Element(x, np.eye(d, dtype=complex)[i]) for i in range(d)]

    def is_positive(self, b: Element, tol: float = DEFAULT_TOL) -> bool:
        if not self.groupoid.is_unit_arrow(b.arrow):
            raise ValueError(f"positivity is only defined on unit fibers, got {b.arrow!r}")
        return self.positivity_defect(b) <= tol * max(1.0, self.norm(b))

    @property
    def unital(self) -> bool:
        return all(self.unit_element(u) is not None for u in self.groupoid.units)

    def _check_composable(self, b: Element, c: Element) -> ArrowId:
        G = self.groupoid
        if b.arrow not in G.src or c.arrow not in G.src or G.src[b.arrow] != G.rng[c.arrow]:
            raise CompositionError(b.arrow, c.arrow)
        return G.comp[(b.arrow, c.arrow)]

    def mult_tensor(self, x: ArrowId, y: ArrowId) -> np.ndarray:
        """``T[i, j, k]``: coefficient of basis ``k`` of fiber ``xy`` in ``e_i e_j``."""
        cache = self.__dict__.setdefault("_mult_cache", {})
        key = (x, y)
        if key not in cache:
            xy = self.groupoid.compose(x, y)
            dx, dy, dxy = self.dim(x), self.dim(y), self.dim(xy)
            T = np.zeros((dx, dy, dxy), dtype=complex)
            for i, b in enumerate(self.basis(x)):
                for j, c in enumerate(self.basis(y)):
                    p = self.mult(b, c)
                    if p.arrow != xy or p.vec.shape != (dxy,):
                        raise StructuralError(f"product over ({x!r}, {y!r}) left the fiber over {xy!r}")
                    T[i, j] = p.vec
            cache[key] = T
        return cache[key]

    def star_matrix(self, x: ArrowId) -> np.ndarray:
        """``S[i, a]``: coefficient of basis ``a`` of fiber ``x^-1`` in ``e_i*``."""
        cache = self.__dict__.setdefault("_star_cache", {})
        if x not in cache:
            xi = self.groupoid.inv[x]
            S = np.zeros((self.dim(x), self.dim(xi)), dtype=complex)
            for i, b in enumerate(self.basis(x)):
                p = self.star(b)
                if p.arrow != xi or p.vec.shape != (self.dim(xi),):
                    raise StructuralError(f"involution of the fiber over {x!r} left the fiber over {xi!r}")
                S[i] = p.vec
            cache[x] = S
        return cache[x]

    def trace_vector(self, u: UnitId) -> np.ndarray:
        """Trace of each basis element of the unit fiber at ``u``."""
        e = self.groupoid.unit_arrow[u]
        return np.array([self.trace(b) for b in self.basis(e)], dtype=complex)

    def norm_bound_basis(self, x: ArrowId) -> float:
        return max((self.norm(b) for b in self.basis(x)), default=0.0)


def multiply(B: FellBundle, b: Element, c: Element) -> Element:
    return B.mult(b, c)


def star(B: FellBundle, b: Element) -> Element:
    return B.star(b)


def norm(B: FellBundle, b: Element) -> float:
    return B.norm(b)


def is_positive(B: FellBundle, b: Element, tol: float = DEFAULT_TOL) -> bool:
    return B.is_positive(b, tol)


# ---------------------------------------------------------------------------
# concrete matrix bundles


def gram_schmidt(mats: Sequence[np.ndarray], rank_tol: float = RANK_TOL) -> list[np.ndarray]:
    """HS-orthonormalize ``mats``; raise if they are linearly dependent."""
    out: list[np.ndarray] = []
    scale = max((np.linalg.norm(m) for m in mats), default=0.0)
    for m in mats:
        v = np.array(m, dtype=complex)
        for _ in range(2):  # second pass for stability
            for q in out:
                v = v - np.vdot(q, v) * q
        nv = np.linalg.norm(v)
        if nv <= rank_tol * max(scale, 1e-300):
            raise StructuralError("fiber basis is rank-deficient")
        out.append(v / nv)
    return out


class ConcreteMatrixBundle(FellBundle):
    """Fibers are subspaces of rectangular complex matrices.

    The fiber over ``x`` lives in ``dims[rng(x)] x dims[src(x)]`` matrices;
    multiplication is the matrix product followed by projection onto the
    target fiber, and the involution is the conjugate transpose.
    """

    def __init__(
        self,
        groupoid: FiniteGroupoid,
        dims: Mapping[UnitId, int],
        fiber_basis: Mapping[ArrowId, Sequence],
        name: str = "",
        orthonormalize: bool = True,
    ):
        self.groupoid = groupoid
        self.name = name
        self.dims = {u: int(dims[u]) for u in groupoid.units}
        if any(n < 1 for n in self.dims.values()):
            raise StructuralError("unit dimensions must be at least 1")
        self.basis_mats: dict[ArrowId, np.ndarray] = {}
        for x in groupoid.arrows:
            shape = (self.dims[groupoid.rng[x]], self.dims[groupoid.src[x]])
            mats = [np.asarray(m, dtype=complex) for m in fiber_basis.get(x, [])]
            for m in mats:
                if m.shape != shape:
                    raise StructuralError(f"basis matrix over {x!r} has shape {m.shape}, expected {shape}")
                if not np.all(np.isfinite(m)):
                    raise StructuralError(f"non-finite entry in the fiber over {x!r}")
            if orthonormalize:
                mats = gram_schmidt(mats)
            self.basis_mats[x] = np.array(mats, dtype=complex).reshape(len(mats), *shape)
        self._units: dict = {}

    def dim(self, x: ArrowId) -> int:
        return self.basis_mats[x].shape[0]

    def to_matrix(self, b: Element) -> np.ndarray:
        return np.tensordot(b.vec, self.basis_mats[b.arrow], axes=1)

    def project(self, x: ArrowId, M: np.ndarray) -> tuple[Element, float]:
        """Orthogonal projection of ``M`` onto the fiber over ``x`` and the residual."""
        E = self.basis_mats[x]
        coeffs = np.einsum("kab,ab->k", E.conj(), M)
        resid = float(np.linalg.norm(M - np.tensordot(coeffs, E, axes=1)))
        return Element(x, coeffs), resid

    def from_matrix(self, x: ArrowId, M, tol: float = DEFAULT_TOL) -> Element:
        e, resid = self.project(x, np.asarray(M, dtype=complex))
        if resid > tol * max(1.0, float(np.linalg.norm(M))):
            raise ValueError(f"matrix is not in the fiber over {x!r} (residual {resid:.3e})")
        return e

    def mult(self, b: Element, c: Element) -> Element:
        xy = self._check_composable(b, c)
        return self.project(xy, self.to_matrix(b) @ self.to_matrix(c))[0]

    def mult_residual(self, b: Element, c: Element) -> float:
        xy = self._check_composable(b, c)
        return self.project(xy, self.to_matrix(b) @ self.to_matrix(c))[1]

    def star(self, b: Element) -> Element:
        return self.project(self.groupoid.inv[b.arrow], self.to_matrix(b).conj().T)[0]

    def star_residual(self, b: Element) -> float:
        return self.project(self.groupoid.inv[b.arrow], self.to_matrix(b).conj().T)[1]

    def norm(self, b: Element) -> float:
        # operator norm; the HS inner product is only used for coordinates
        M = self.to_matrix(b)
        return float(np.linalg.norm(M, 2)) if M.size else 0.0

    def positivity_defect(self, b: Element) -> float:
        M = self.to_matrix(b)
        herm = float(np.linalg.norm(M - M.conj().T, 2))
        low = float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])
        return max(herm, -low, 0.0)

    def trace(self, b: Element) -> complex:
        return complex(np.trace(self.to_matrix(b)))

    def unit_element(self, u: UnitId) -> Element | None:
        if u not in self._units:
            e = self.groupoid.unit_arrow[u]
            one = np.eye(self.dims[u], dtype=complex)
            elem, resid = self.project(e, one)
            self._units[u] = elem if resid <= DEFAULT_TOL * max(1.0, np.sqrt(self.dims[u])) else None
        return self._units[u]


def line_bundle(G: FiniteGroupoid) -> ConcreteMatrixBundle:
    """``C x G``: every fiber is spanned by the 1x1 identity."""
    one = np.ones((1, 1), dtype=complex)
    return ConcreteMatrixBundle(
        G, {u: 1 for u in G.units}, {x: [one] for x in G.arrows}, name=f"line({G.name})"
    )


def matrix_units(rows: int, cols: int) -> list[np.ndarray]:
    out = []
    for i in range(rows):
        for j in range(cols):
            m = np.zeros((rows, cols), dtype=complex)
            m[i, j] = 1
            out.append(m)
    return out


def full_matrix_bundle(G: FiniteGroupoid, dims: int | Mapping[UnitId, int]) -> ConcreteMatrixBundle:
    """Every fiber over ``x`` is all of ``M(dims[r(x)], dims[s(x)])``."""
    if isinstance(dims, int):
        dims = {u: dims for u in G.units}
    basis = {x: matrix_units(dims[G.rng[x]], dims[G.src[x]]) for x in G.arrows}
    return ConcreteMatrixBundle(G, dims, basis, name=f"full({G.name})", orthonormalize=False)


# ---------------------------------------------------------------------------
# pullbacks


class PullbackBundle(FellBundle):
    """The fiber over ``x`` is the fiber of ``C`` over ``f(x)``; operations delegate."""

    def __init__(self, C: FellBundle, f: Mapping[ArrowId, ArrowId], G: FiniteGroupoid, name: str = ""):
        hom = check_groupoid_hom(G, C.groupoid, f)
        if not hom.ok:
            bad = hom.failures[0]
            raise StructuralError(f"map is not a groupoid homomorphism ({bad.id} at {bad.witness!r})")
        self.C, self.f, self.groupoid = C, dict(f), G
        self.name = name or f"pullback({C.name})"

    def dim(self, x: ArrowId) -> int:
        return self.C.dim(self.f[x])

    def up(self, b: Element) -> Element:
        """The same vector viewed in ``C``."""
        return Element(self.f[b.arrow], b.vec)

    def mult(self, b: Element, c: Element) -> Element:
        xy = self._check_composable(b, c)
        return Element(xy, self.C.mult(self.up(b), self.up(c)).vec)

    def mult_residual(self, b: Element, c: Element) -> float:
        return self.C.mult_residual(self.up(b), self.up(c))

    def star(self, b: Element) -> Element:
        return Element(self.groupoid.inv[b.arrow], self.C.star(self.up(b)).vec)

    def star_residual(self, b: Element) -> float:
        return self.C.star_residual(self.up(b))

    def norm(self, b: Element) -> float:
        return self.C.norm(self.up(b))

    def positivity_defect(self, b: Element) -> float:
        return self.C.positivity_defect(self.up(b))

    def trace(self, b: Element) -> complex:
        return self.C.trace(self.up(b))

    def unit_element(self, u: UnitId) -> Element | None:
        e = self.groupoid.unit_arrow[u]
        one = self.C.unit_element(self.C.groupoid.unit_of(self.f[e]))
        return None if one is None else Element(e, one.vec)


def pullback_bundle(C: FellBundle, f: Mapping[ArrowId, ArrowId], G: FiniteGroupoid) -> PullbackBundle:
    return PullbackBundle(C, f, G)


# ---------------------------------------------------------------------------
# checkers


def _random_vec(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.standard_normal(d) + 1j * rng.standard_normal(d)


def random_unit_element(B: FellBundle, x: ArrowId, rng: np.random.Generator) -> Element | None:
    """A seeded random element of norm one (None on a zero fiber)."""
    d = B.dim(x)
    if d == 0:
        return None
    b = Element(x, _random_vec(rng, d))
    n = B.norm(b)
    return b * (1.0 / n) if n > 0 else b


def validate_fell_bundle(
    B: FellBundle, tol: float = DEFAULT_TOL, seed: int = 0, samples: int = 1
) -> ValidationReport:
    """Check the Fell bundle axioms F1-F10.

    Algebraic laws (F2, F3, F6-F8) are checked on every basis tuple through
    the structure constants, and the structure constants are tied back to the
    operations by seeded random bilinearity tests. Norm and positivity laws
    (F4, F9, F10) are checked on basis elements and on ``samples`` random
    norm-one combinations per arrow or arrow pair.
    """
    G = B.groupoid
    rng = np.random.default_rng(seed)
    rep = ValidationReport(subject=f"Fell bundle {B.name}".strip(), tol=tol)
    struct = rep.check("STRUCT", kind=STRUCTURE)
    try:
        T = {(x, y): B.mult_tensor(x, y) for x, y, _ in G.composable()}
        S = {x: B.star_matrix(x) for x in G.arrows}
    except (StructuralError, CompositionError, KeyError) as exc:
        struct.record(False, (str(exc),))
        return rep

    f = {k: rep.check(k) for k in (f"F{i}" for i in range(1, 11))}
    basis = {x: B.basis(x) for x in G.arrows}
    bnorm = {x: [B.norm(b) for b in basis[x]] for x in G.arrows}

    for x, y, xy in G.composable():
        Txy = T[(x, y)]
        for i, b in enumerate(basis[x]):
            for j, c in enumerate(basis[y]):
                scale = bnorm[x][i] * bnorm[y][j]
                f["F1"].measure(B.mult_residual(b, c), tol, (x, y, i, j), scale)
                prod = Element(xy, Txy[i, j])
                f["F4"].measure(max(0.0, B.norm(prod) - scale), tol, (x, y, i, j), scale)
        for _ in range(samples):
            if not (B.dim(x) and B.dim(y)):
                continue
            a1, a2 = random_unit_element(B, x, rng), random_unit_element(B, x, rng)
            c1, c2 = random_unit_element(B, y, rng), random_unit_element(B, y, rng)
            alpha = complex(*rng.standard_normal(2))
            lhs = B.mult(a1 * alpha + a2, c1).vec
            rhs = alpha * B.mult(a1, c1).vec + B.mult(a2, c1).vec
            f["F2"].measure(np.linalg.norm(lhs - rhs), tol, (x, y, "left"), abs(alpha) + 1)
            lhs = B.mult(a1, c1 * alpha + c2).vec
            rhs = alpha * B.mult(a1, c1).vec + B.mult(a1, c2).vec
            f["F2"].measure(np.linalg.norm(lhs - rhs), tol, (x, y, "right"), abs(alpha) + 1)
            direct = B.mult(a1, c1).vec
            via_tensor = np.einsum("i,j,ijk->k", a1.vec, c1.vec, Txy)
            f["F2"].measure(np.linalg.norm(direct - via_tensor), tol, (x, y, "tensor"))
            p = B.mult(a1, c1)
            f["F4"].measure(max(0.0, B.norm(p) - 1.0), tol, (x, y, "random"))

    for x, y, xy in G.composable():
        Txy = T[(x, y)]
        for z in G.range_fiber(G.src[y]):
            yz = G.comp[(y, z)]
            left = np.einsum("ijm,mkn->ijkn", Txy, T[(xy, z)])
            right = np.einsum("jkm,imn->ijkn", T[(y, z)], T[(x, yz)])
            if left.size:
                scale = float(max(np.abs(left).max(), np.abs(right).max()))
                f["F3"].measure(np.abs(left - right).max(), tol, (x, y, z), scale)
        # (bc)* = c* b*
        xi, yi = G.inv[x], G.inv[y]
        lhs = np.einsum("ijm,mn->ijn", Txy.conj(), S[xy])
        rhs = np.einsum("ja,ib,abn->ijn", S[y], S[x], T[(yi, xi)])
        if lhs.size:
            f["F7"].measure(np.abs(lhs - rhs).max(), tol, (x, y), float(np.abs(lhs).max()))

    for x in G.arrows:
        xi = G.inv[x]
        d = B.dim(x)
        for i, b in enumerate(basis[x]):
            f["F5"].measure(B.star_residual(b), tol, (x, i), bnorm[x][i])
        if d:
            back = S[x].conj() @ S[xi]
            f["F8"].measure(np.abs(back - np.eye(d)).max(), tol, (x,))
        for _ in range(samples):
            if not d:
                continue
            a1, a2 = random_unit_element(B, x, rng), random_unit_element(B, x, rng)
            alpha = complex(*rng.standard_normal(2))
            lhs = B.star(a1 * alpha + a2).vec
            rhs = np.conj(alpha) * B.star(a1).vec + B.star(a2).vec
            f["F6"].measure(np.linalg.norm(lhs - rhs), tol, (x,), abs(alpha) + 1)
            via_matrix = a1.vec.conj() @ S[x]
            f["F6"].measure(np.linalg.norm(B.star(a1).vec - via_matrix), tol, (x, "matrix"))
        samples_x = list(basis[x])
        samples_x += [random_unit_element(B, x, rng) for _ in range(samples if d else 0)]
        for k, b in enumerate(samples_x):
            bs = B.star(b)
            bsb = B.mult(bs, b)
            nb = B.norm(b)
            sq = nb * nb
            f["F9"].measure(abs(B.norm(bsb) - sq), tol, (x, k), sq)
            f["F9"].measure(abs(B.norm(bs) ** 2 - sq), tol, (x, k, "star"), sq)
            f["F10"].measure(B.positivity_defect(bsb), tol, (x, k), sq)

    if all(B.unit_element(u) is not None for u in G.units):
        unit = rep.check("UNIT")
        for x in G.arrows:
            one_r = B.unit_element(G.rng[x])
            one_s = B.unit_element(G.src[x])
            for i, b in enumerate(basis[x]):
                unit.measure(np.linalg.norm(B.mult(one_r, b).vec - b.vec), tol, (x, i, "left"))
                unit.measure(np.linalg.norm(B.mult(b, one_s).vec - b.vec), tol, (x, i, "right"))
    return rep


def check_bundle_hom(
    B1: FellBundle,
    B2: FellBundle,
    f: Mapping[ArrowId, ArrowId],
    phi: Callable[[Element], Element],
    tol: float = DEFAULT_TOL,
    isometric: bool = True,
    seed: int = 0,
    arrows: Iterable[ArrowId] | None = None,
) -> ValidationReport:
    """Check that ``phi`` is a bundle homomorphism ``B1 -> B2`` covering ``f``.

    H1: fibers map to the fibers over ``f(x)``, linearly. H2: multiplicative.
    H3: *-preserving. ISO (optional): isometric on basis and random elements.
    """
    G = B1.groupoid
    rng = np.random.default_rng(seed)
    arrows = list(G.arrows if arrows is None else arrows)
    rep = ValidationReport(subject="bundle homomorphism", tol=tol)
    h1, h2, h3 = rep.check("H1"), rep.check("H2"), rep.check("H3")
    iso = rep.check("ISO") if isometric else None
    keep = set(arrows)
    for x in arrows:
        for i, b in enumerate(B1.basis(x)):
            img = phi(b)
            h1.record(img.arrow == f[x] and img.vec.shape == (B2.dim(f[x]),), (x, i))
            if not h1.passed:
                return rep
            bs = phi(B1.star(b))
            h3.measure(np.linalg.norm(B2.star(img).vec - bs.vec), tol, (x, i))
            if iso is not None:
                iso.measure(abs(B2.norm(img) - B1.norm(b)), tol, (x, i))
        if B1.dim(x):
            a1, a2 = random_unit_element(B1, x, rng), random_unit_element(B1, x, rng)
            alpha = complex(*rng.standard_normal(2))
            lhs = phi(a1 * alpha + a2).vec
            rhs = alpha * phi(a1).vec + phi(a2).vec
            h1.measure(np.linalg.norm(lhs - rhs), tol, (x, "linear"), abs(alpha) + 1)
            if iso is not None:
                iso.measure(abs(B2.norm(phi(a1)) - 1.0), tol, (x, "random"))
    for x, y, xy in G.composable():
        if x not in keep or y not in keep:
            continue
        for i, b in enumerate(B1.basis(x)):
            for j, c in enumerate(B1.basis(y)):
                lhs = phi(B1.mult(b, c))
                rhs = B2.mult(phi(b), phi(c))
                h2.record(lhs.arrow == rhs.arrow, (x, y, i, j, "arrow"))
                if lhs.arrow == rhs.arrow:
                    h2.measure(np.linalg.norm(lhs.vec - rhs.vec), tol, (x, y, i, j))
    return rep
