"""Named example instances and seeded random generators.

Randomness always comes from ``numpy.random.default_rng(seed)``, which is the
PCG64 bit generator; the draw order inside each generator is fixed, so a seed
pins down the instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .alg import Section
from .fell import FellBundle, full_matrix_bundle
from .gpd import (
    FiniteGroupoid,
    MatchedPair,
    SelfSimilarAction,
    cyclic_group,
    discrete_groupoid,
    generated_subgroup,
    group_groupoid,
    internal_factorization,
    pair_groupoid,
    symmetric_group,
    transformation_matched_pair,
    zs_groupoid,
)
from .oracle import OracleReport, oracle_scan
from .rep import FiniteHilbertBundle, StrictRep, UnitMeasure, regular_strict_rep
from .zsb import (
    CompatibleAction,
    UnitaryFamily,
    action_from_unitary_family,
    line_action,
    trivial_h_pair,
    zs_bundle,
)


@dataclass
class CorpusEntry:
    name: str
    payload: Any
    notes: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return payload_kind(self.payload)


def payload_kind(obj) -> str:
    for cls, kind in (
        (MatchedPair, "matched_pair"),
        (CompatibleAction, "action"),
        (UnitaryFamily, "unitary_family"),
        (Section, "section"),
        (StrictRep, "strict_rep"),
        (FiniteGroupoid, "groupoid"),
    ):
        if isinstance(obj, cls):
            return kind
    raise TypeError(f"not a corpus payload: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# matched pairs


def direct_product_pair(A: FiniteGroupoid, B: FiniteGroupoid, name: str) -> MatchedPair:
    """Trivial action and restriction between two groups on the same unit."""
    act = {(h, x): x for h in B.arrows for x in A.arrows}
    res = {(h, x): h for h in B.arrows for x in A.arrows}
    return MatchedPair(A, B, act, res, name=name)


def _s3_pair(gen_a: str, gen_b: str, name: str) -> MatchedPair:
    K = symmetric_group(3)
    return internal_factorization(K, generated_subgroup(K, [gen_a]), generated_subgroup(K, [gen_b]), name=name)


def _flip_action(name: str) -> SelfSimilarAction:
    """Z2 swapping the two points of a discrete groupoid, with ``h.x = h``."""
    G = discrete_groupoid(["p", "q"])
    H = cyclic_group(2, gen="g")
    swap = {"p": "q", "q": "p"}
    ast = {("e", x): x for x in G.arrows} | {("g", x): swap[x] for x in G.arrows}
    bullet = {(h, x): h for h in H.arrows for x in G.arrows}
    return SelfSimilarAction(G, H, ast, bullet, name=name)


def _pair_swap_action(name: str) -> SelfSimilarAction:
    """Z2 acting on the pair groupoid over ``{p, q}`` by relabelling both ends."""
    G = pair_groupoid(["p", "q"])
    H = cyclic_group(2, gen="g")
    swap = {"p": "q", "q": "p"}

    def moved(x):
        r, s = x.split(":")
        return f"{swap[r]}:{swap[s]}"

    ast = {("e", x): x for x in G.arrows} | {("g", x): moved(x) for x in G.arrows}
    bullet = {(h, x): h for h in H.arrows for x in G.arrows}
    return SelfSimilarAction(G, H, ast, bullet, name=name)


def _z3_by_inversion() -> MatchedPair:
    """Z2 acting on Z3 by inversion, restriction trivial: a semidirect product."""
    A = cyclic_group(3)
    B = cyclic_group(2, gen="g")
    act = {("e", x): x for x in A.arrows} | {("g", x): A.inv[x] for x in A.arrows}
    res = {(h, x): h for h in B.arrows for x in A.arrows}
    return MatchedPair(A, B, act, res, name="z3z2_semidirect")


def _selfsim_s3() -> MatchedPair:
    """Z2 acting on Z3 with the restriction read off the S3 factorization.

    The action and cocycle of the factorization ``S3 = <(123)><(12)>`` form a
    self-similar action of ``<(12)>`` on ``<(123)>``.
    """
    P = _s3_pair("(123)", "(12)", "s3_factorized")
    H = group_groupoid(list(P.H.arrows), lambda a, b: P.H.comp[(a, b)], "e", name="B")
    S = SelfSimilarAction(P.G, H, dict(P.act), dict(P.res), name="selfsim_s3")
    return transformation_matched_pair(S)


def _pairs() -> dict:
    return {
        "trivial_pair": (
            lambda: direct_product_pair(cyclic_group(3), cyclic_group(2, gen="g"), "trivial_pair"),
            "Z3 and Z2 with trivial action and restriction: the direct product Z6",
        ),
        "z2z2_trivial": (
            lambda: direct_product_pair(cyclic_group(2), cyclic_group(2, gen="g"), "z2z2_trivial"),
            "Z2 and Z2 with trivial action and restriction",
        ),
        "s3_factorized": (
            lambda: _s3_pair("(123)", "(12)", "s3_factorized"),
            "S3 = <(123)> <(12)>, data solved from hy = (h.y)(h|y)",
        ),
        "s3_factorized_rev": (
            lambda: _s3_pair("(12)", "(123)", "s3_factorized_rev"),
            "S3 = <(12)> <(123)>, the factors in the other order",
        ),
        "z3z2_semidirect": (_z3_by_inversion, "Z2 acting on Z3 by inversion, trivial restriction"),
        "selfsim_flip": (
            lambda: transformation_matched_pair(_flip_action("selfsim_flip")),
            "Z2 swapping two units of a discrete groupoid; H is the 4-arrow transformation groupoid",
        ),
        "semidirect": (
            lambda: transformation_matched_pair(_pair_swap_action("semidirect")),
            "Z2 acting on the pair groupoid over {p, q} with h.x = h",
        ),
        "selfsim_s3": (_selfsim_s3, "self-similar action of Z2 on Z3 taken from the S3 factorization"),
        "trivial_h": (
            lambda: trivial_h_pair(pair_groupoid(["p", "q"])),
            "pair groupoid over {p, q} with H the discrete groupoid",
        ),
    }


PAIR_NAMES = tuple(_pairs())
GROUP_PAIR_NAMES = ("trivial_pair", "z2z2_trivial", "s3_factorized", "s3_factorized_rev", "z3z2_semidirect", "selfsim_s3")


def builtin_pair(name: str) -> MatchedPair:
    try:
        make = _pairs()[name][0]
    except KeyError:
        raise KeyError(f"unknown corpus pair {name!r}") from None
    return make()


# ---------------------------------------------------------------------------
# actions and unitary families


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def semidirect_matrix_action() -> CompatibleAction:
    """Full 2x2 bundle over the pair groupoid; ``(u, g)`` acts by conjugation with a Hadamard matrix."""
    P = builtin_pair("semidirect")
    base = full_matrix_bundle(P.G, 2)
    base.name = "full2(pair)"
    ad = np.kron(HADAMARD, HADAMARD.conj())  # vec(V b V*) for row-major vec
    beta = {}
    for (u, h), x in P.domain():
        beta[((u, h), x)] = ad if h == "g" else np.eye(4, dtype=complex)
    return CompatibleAction(P, base, beta, name="semidirect_matrix")


def regular_representation(H: FiniteGroupoid) -> dict:
    """Permutation matrices of left multiplication for a group."""
    elems = list(H.arrows)
    pos = {g: i for i, g in enumerate(elems)}
    out = {}
    for g in elems:
        m = np.zeros((len(elems), len(elems)), dtype=complex)
        for k in elems:
            m[pos[H.comp[(g, k)]], pos[k]] = 1
        out[g] = m
    return out


def unitary_family_from_matrices(pair: MatchedPair, d: int, U: dict, name: str) -> UnitaryFamily:
    """``u_h = U[h]`` in the full ``d x d`` bundle over the product groupoid."""
    K = zs_groupoid(pair)
    C = full_matrix_bundle(K, d)
    C.name = f"full{d}({pair.name})"
    u = {h: C.from_matrix(pair.embed_H(h), U[h]) for h in pair.H.arrows}
    return UnitaryFamily(C, pair, u, name=name)


def _unitary_family_matrix(d: int) -> UnitaryFamily:
    """Over the S3 factorization, ``U`` is the sign character, the regular rep, or regular plus trivial."""
    pair = builtin_pair("s3_factorized")
    H = pair.H
    if d == 1:
        U = {h: np.array([[1.0 if h == "e" else -1.0]], dtype=complex) for h in H.arrows}
    elif d in (2, 3):
        reg = regular_representation(H)
        U = {h: np.pad(reg[h], (0, d - 2)) + np.diag([0] * 2 + [1] * (d - 2)) for h in H.arrows}
    else:
        raise KeyError(f"unitary_family_matrix is defined for d in 1..3, not {d}")
    return unitary_family_from_matrices(pair, d, U, name=f"unitary_family_matrix:{d}")


def _family_entry(fam: UnitaryFamily, notes: str) -> CorpusEntry:
    base, action = action_from_unitary_family(fam.bundle, fam.pair, fam.u, name=fam.name)
    return CorpusEntry(fam.name, fam, notes, {"base": base, "action": action})


ACTION_NAMES = tuple(f"line_canonical:{p}" for p in PAIR_NAMES) + ("semidirect_matrix",)
FAMILY_NAMES = tuple(f"unitary_family_matrix:{d}" for d in (1, 2, 3))


def builtin_names() -> tuple[str, ...]:
    return PAIR_NAMES + ACTION_NAMES + FAMILY_NAMES


def builtin(name: str) -> CorpusEntry:
    """A deterministic named instance; raises ``KeyError`` for unknown names."""
    pairs = _pairs()
    if name in pairs:
        return CorpusEntry(name, pairs[name][0](), pairs[name][1])
    if name == "line_canonical":
        name = "line_canonical:s3_factorized"
    if name.startswith("line_canonical:"):
        pair = builtin_pair(name.split(":", 1)[1])
        return CorpusEntry(name, line_action(pair), "line bundle over G with beta(h, (z, x)) = (z, h.x)")
    if name == "semidirect_matrix":
        return CorpusEntry(name, semidirect_matrix_action(), "beta_(u,g) = Ad(Hadamard) on a full 2x2 bundle")
    if name.startswith("unitary_family_matrix"):
        _, _, d = name.partition(":")
        fam = _unitary_family_matrix(int(d or 2))
        return _family_entry(fam, "full matrix bundle over the S3 factorization with a fixed representation of H")
    raise KeyError(f"unknown corpus entry {name!r}")


# ---------------------------------------------------------------------------
# random generators


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Gaussian matrix with the phases of ``R`` divided out."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def group_characters(elems: list, comp: dict, identity) -> list[dict]:
    """All one-dimensional characters, by search over roots of unity of order ``len(elems)``."""
    n = len(elems)
    roots = [np.exp(2j * np.pi * k / n) for k in range(n)]
    others = [g for g in elems if g != identity]
    found = []
    for values in itertools.product(range(n), repeat=len(others)):
        chi = {identity: 0} | dict(zip(others, values))
        if all((chi[a] + chi[b]) % n == chi[comp[(a, b)]] for a in elems for b in elems):
            found.append({g: roots[k] for g, k in chi.items()})
    return found


def _isotropy_rep(H: FiniteGroupoid, b, d: int, rng: np.random.Generator) -> dict:
    """A random ``d``-dimensional unitary representation of the isotropy group at ``b``."""
    elems = [h for h in H.arrows if H.src[h] == b and H.rng[h] == b]
    e = H.unit_arrow[b]
    comp = {(g, h): H.comp[(g, h)] for g in elems for h in elems}
    blocks: list[dict] = []
    size = 0
    if len(elems) <= d and rng.random() < 0.5:
        pos = {g: i for i, g in enumerate(elems)}
        reg = {}
        for g in elems:
            m = np.zeros((len(elems), len(elems)), dtype=complex)
            for k in elems:
                m[pos[comp[(g, k)]], pos[k]] = 1
            reg[g] = m
        blocks.append(reg)
        size = len(elems)
    chars = group_characters(elems, comp, e) if len(elems) <= 6 else [{g: 1.0 + 0j for g in elems}]
    while size < d:
        chi = chars[int(rng.integers(len(chars)))]
        blocks.append({g: np.array([[chi[g]]]) for g in elems})
        size += 1
    V = haar_unitary(d, rng)
    out = {}
    for g in elems:
        m = np.zeros((d, d), dtype=complex)
        off = 0
        for blk in blocks:
            k = blk[g].shape[0]
            m[off : off + k, off : off + k] = blk[g]
            off += k
        out[g] = V @ m @ V.conj().T
    return out


def random_unitary_functor(H: FiniteGroupoid, d: int, rng: np.random.Generator) -> dict:
    """Unitary matrices ``U_h`` with ``U_h U_k = U_hk`` and ``U_h* = U_(h^-1)``.

    On each connected component a base unit ``b`` and arrows ``t_v: b -> v``
    are fixed; ``U_h = rho(t_r(h)^-1 h t_s(h))`` for a random representation
    ``rho`` of the isotropy group at ``b``, twisted by random unitaries on the
    other units.
    """
    U: dict = {}
    seen: set = set()
    for b in H.units:
        if b in seen:
            continue
        tree = {}
        for h in H.arrows:
            if H.src[h] == b and H.rng[h] not in tree:
                tree[H.rng[h]] = h
        tree[b] = H.unit_arrow[b]
        seen |= set(tree)
        rho = _isotropy_rep(H, b, d, rng)
        W = {v: (np.eye(d, dtype=complex) if v == b else haar_unitary(d, rng)) for v in tree}
        for h in H.arrows:
            if H.src[h] not in tree:
                continue
            ts, tr = tree[H.src[h]], tree[H.rng[h]]
            loop = H.comp[(H.inv[tr], H.comp[(h, ts)])]
            U[h] = W[H.rng[h]] @ rho[loop] @ W[H.src[h]].conj().T
    return U


def random_unitary_family(seed: int, pair_name: str | None = None, d: int | None = None) -> CorpusEntry:
    rng = np.random.default_rng(seed)
    names = list(PAIR_NAMES)
    if pair_name is None:
        pair_name = names[int(rng.integers(len(names)))]
    if d is None:
        d = int(rng.integers(1, 4))
    pair = builtin_pair(pair_name)
    U = random_unitary_functor(pair.H, d, rng)
    fam = unitary_family_from_matrices(pair, d, U, name=f"random_unitary_family:{seed}")
    return _family_entry(fam, f"seed {seed}: pair {pair_name}, fiber dimension {d}")


def random_section(bundle: FellBundle, rng: np.random.Generator) -> Section:
    s = Section(bundle)
    n = s.vec.shape[0]
    s.vec[:] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return s


def random_measure(units, rng: np.random.Generator) -> UnitMeasure:
    return UnitMeasure({u: float(rng.uniform(0.5, 2.0)) for u in units})


def random_strict_rep(bundle: FellBundle, rng: np.random.Generator, mu: UnitMeasure | None = None) -> StrictRep:
    """The regular strict representation conjugated by random unitaries on each ``H(v)``."""
    reg = regular_strict_rep(bundle, mu)
    V = {v: haar_unitary(reg.hb.m[v], rng) for v in reg.hb.order}
    G = bundle.groupoid
    psi = {
        x: np.einsum("ab,ibc,dc->iad", V[G.rng[x]], reg.psi[x], V[G.src[x]].conj())
        for x in G.arrows
    }
    return StrictRep(bundle, FiniteHilbertBundle(dict(reg.hb.m), reg.hb.order), psi, reg.mu)


def random_instance(kind: str, seed: int, **opts) -> CorpusEntry:
    """Reproducible random ``section``, ``unitary_family`` or ``strict_rep``.

    ``section`` and ``strict_rep`` take an optional ``bundle``; by default a
    section lives in the product bundle of ``line_canonical:s3_factorized``
    and a strict representation in the product bundle of a random unitary
    family drawn from the same seed.
    """
    if kind == "unitary_family":
        return random_unitary_family(seed, opts.get("pair"), opts.get("d"))
    if kind == "section":
        bundle = opts.get("bundle") or zs_bundle(builtin("line_canonical:s3_factorized").payload)
        rng = np.random.default_rng(seed)
        return CorpusEntry(f"random_section:{seed}", random_section(bundle, rng), f"seed {seed}")
    if kind == "strict_rep":
        bundle = opts.get("bundle")
        extras = {}
        if bundle is None:
            fam = random_unitary_family(seed)
            extras["action"] = fam.extras["action"]
            bundle = zs_bundle(fam.extras["action"])
        rng = np.random.default_rng([seed, 1])
        mu = random_measure(bundle.groupoid.units, rng) if opts.get("weighted") else None
        psi = random_strict_rep(bundle, rng, mu)
        return CorpusEntry(f"random_strict_rep:{seed}", psi, f"seed {seed}", extras)
    raise KeyError(f"unknown random kind {kind!r}")


__all__ = [
    "CorpusEntry",
    "OracleReport",
    "builtin",
    "builtin_names",
    "oracle_scan",
    "random_instance",
]
