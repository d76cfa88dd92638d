from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zsfell.corpus import (
    ACTION_NAMES,
    FAMILY_NAMES,
    HADAMARD,
    PAIR_NAMES,
    builtin,
    builtin_pair,
    random_instance,
    regular_representation,
    unitary_family_from_matrices,
)
from zsfell.fell import Element, check_bundle_hom, full_matrix_bundle, line_bundle, validate_fell_bundle
from zsfell.gpd import pair_groupoid, zs_groupoid
from zsfell.zsb import (
    CompatibleAction,
    action_from_unitary_family,
    canonical_embeddings,
    check_embeddings,
    line_action,
    theta_iso,
    trivial_action,
    validate_action,
    validate_unitary_family,
    zs_bundle,
)


def action_of(name):
    e = builtin(name)
    return e.payload if e.kind == "action" else e.extras["action"]


def test_trivial_h_identity_action_passes():
    A = trivial_action(full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 1, "q": 2}))
    assert validate_action(A).ok


@pytest.mark.parametrize("name", ACTION_NAMES + FAMILY_NAMES)
def test_corpus_actions_pass(name):
    rep = validate_action(action_of(name))
    assert rep.ok, str(rep)


def test_scaled_beta_fails():
    A = line_action(builtin_pair("s3_factorized"))
    beta = dict(A.beta)
    key = next(k for k in A.pair.domain() if k[0] != "e")
    beta[key] = 2 * beta[key]
    rep = validate_action(CompatibleAction(A.pair, A.base, beta))
    assert not rep.ok
    assert {c.id for c in rep.failures} & {"A2", "ISO"}


def test_beta_off_domain_is_structural():
    A = line_action(builtin_pair("semidirect"))
    beta = dict(A.beta)
    beta[(("p", "e"), "q:q")] = np.ones((1, 1))
    rep = validate_action(CompatibleAction(A.pair, A.base, beta))
    assert rep.structural_errors


@pytest.mark.parametrize("name", ACTION_NAMES + FAMILY_NAMES)
def test_product_bundle_is_a_fell_bundle(name):
    rep = validate_fell_bundle(zs_bundle(action_of(name)))
    assert rep.ok and rep.max_residual <= 1e-9


def test_trivial_h_product_is_isomorphic_to_base():
    base = full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1})
    A = trivial_action(base)
    Z = zs_bundle(A)
    f = {k: k[0] for k in Z.groupoid.arrows}
    assert check_bundle_hom(Z, base, f, lambda c: Element(c.arrow[0], c.vec)).ok


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_line_product_is_line_bundle_of_product(name):
    A = line_action(builtin_pair(name))
    Z = zs_bundle(A)
    K = Z.groupoid
    assert check_bundle_hom(Z, line_bundle(K), {k: k for k in K.arrows}, lambda c: c).ok


def test_semidirect_matrix_multiplication_formula(rng):
    A = action_of("semidirect_matrix")
    Z, B = zs_bundle(A), A.base
    K = Z.groupoid
    for c1, c2, _ in K.composable():
        (x, (_, h)), (y, _) = c1, c2
        b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        Bm, Cm = B.to_matrix(Element(x, b)), B.to_matrix(Element(y, c))
        if h == "g":
            Cm = HADAMARD @ Cm @ HADAMARD.conj().T
        prod = Z.mult(Element(c1, b), Element(c2, c))
        assert np.allclose(B.to_matrix(Element(prod.arrow[0], prod.vec)), Bm @ Cm)


def test_beta_inverse_undoes_beta():
    A = action_of("unitary_family_matrix:2")
    P = A.pair
    for h, x in P.domain():
        k = P.res[(h, x)]
        y = P.act[(h, x)]
        back = A.beta[(P.H.inv[h], y)]
        assert np.allclose(back @ A.beta[(h, x)], np.eye(A.base.dim(x)))
        assert P.res[(P.H.inv[h], y)] == P.H.inv[k]


@pytest.mark.parametrize("name", ["line_canonical:s3_factorized", "semidirect_matrix", "unitary_family_matrix:3"])
def test_canonical_embeddings(name):
    A = action_of(name)
    reps = check_embeddings(A)
    assert reps["phi"].ok and reps["psi"].ok
    phi, psi = canonical_embeddings(A)
    B = A.base
    x = A.pair.G.arrows[-1]
    b = Element(x, np.arange(1, B.dim(x) + 1, dtype=complex))
    assert zs_bundle(A).norm(phi(b)) == pytest.approx(B.norm(b))
    H = A.pair.H
    for h, k, hk in H.composable():
        prod = zs_bundle(A).mult(psi(2.0, h), psi(3j, k))
        assert np.allclose(prod.vec, psi(6j, hk).vec) and prod.arrow == psi(1, hk).arrow


def test_line_unitary_family_recovers_canonical_action():
    pair = builtin_pair("s3_factorized")
    U = {h: np.ones((1, 1)) for h in pair.H.arrows}
    fam = unitary_family_from_matrices(pair, 1, U, "ones")
    assert validate_unitary_family(fam.bundle, pair, fam.u).ok
    _, A = action_from_unitary_family(fam.bundle, pair, fam.u)
    canon = line_action(pair)
    for key in pair.domain():
        assert np.allclose(A.beta[key], canon.beta[key])


def test_trivial_family_gives_identity_action():
    from zsfell.zsb import trivial_h_pair

    pair = trivial_h_pair(pair_groupoid(["p", "q"]))
    U = {h: np.eye(2) for h in pair.H.arrows}
    fam = unitary_family_from_matrices(pair, 2, U, "id")
    _, A = action_from_unitary_family(fam.bundle, pair, fam.u)
    assert all(np.allclose(m, np.eye(4)) for m in A.beta.values())


def test_regular_representation_family_passes():
    pair = builtin_pair("s3_factorized")
    fam = unitary_family_from_matrices(pair, 2, regular_representation(pair.H), "reg")
    assert validate_unitary_family(fam.bundle, pair, fam.u).ok
    _, A = action_from_unitary_family(fam.bundle, pair, fam.u)
    assert validate_action(A).ok


def test_non_unitary_family_fails():
    pair = builtin_pair("s3_factorized")
    U = {h: (np.eye(2) if h == "e" else 2 * np.eye(2)) for h in pair.H.arrows}
    fam = unitary_family_from_matrices(pair, 2, U, "two")
    rep = validate_unitary_family(fam.bundle, pair, fam.u)
    assert not rep["UNITARY"].passed


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_theta_is_an_isometric_isomorphism(name):
    e = builtin(name)
    rep = theta_iso(e.extras["base"], e.extras["action"], e.payload.u, e.payload.bundle)
    assert rep.ok and rep.max_residual <= 1e-9
    assert rep["BIJECTIVE"].passed and rep["ROUNDTRIP"].passed


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_random_unitary_families_give_fell_bundles(seed):
    e = random_instance("unitary_family", seed)
    fam, A = e.payload, e.extras["action"]
    assert validate_unitary_family(fam.bundle, fam.pair, fam.u).ok
    assert validate_action(A).ok
    assert validate_fell_bundle(zs_bundle(A)).ok
    assert len(zs_groupoid(fam.pair)) <= 36 and all(fam.bundle.dims[u] <= 3 for u in fam.bundle.dims)
