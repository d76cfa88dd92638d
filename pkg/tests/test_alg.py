from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zsfell.alg import (
    Section,
    basis_sections,
    blend_rank,
    blend_ranks,
    convolve,
    cstar_norm,
    delta,
    h_algebra_bundle,
    hom_i,
    hom_j,
    i_norm,
    i_norm_r,
    i_norm_s,
    is_star_hom_residual,
    left_matrix,
    star_section,
    trace_functional,
    unit_section,
)
from zsfell.corpus import ACTION_NAMES, FAMILY_NAMES, builtin, builtin_pair
from zsfell.fell import ConcreteMatrixBundle, full_matrix_bundle, line_bundle
from zsfell.gpd import cyclic_group, pair_groupoid, symmetric_group
from zsfell.zsb import line_action, trivial_action, zs_bundle

# Frozen from zsfell.oracle: Z2 regular matrix of d_e + d_g has eigenvalues 2 and 0,
# and the S3 regular matrix of the sum of all deltas has operator norm 6.
Z2_NORM = 2.0
S3_NORM = 6.0


def action_of(name):
    e = builtin(name)
    return e.payload if e.kind == "action" else e.extras["action"]


def bundles():
    return [
        line_bundle(symmetric_group(3)),
        full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1}),
        zs_bundle(action_of("semidirect_matrix")),
        zs_bundle(action_of("unitary_family_matrix:2")),
    ]


BUNDLES = bundles()


@st.composite
def sections(draw, k=None):
    B = BUNDLES[draw(st.integers(0, len(BUNDLES) - 1))] if k is None else BUNDLES[k]
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = Section(B).vec.shape[0]
    mask = rng.random(n) < draw(st.floats(0.2, 1.0))
    return Section(B, mask * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))


@st.composite
def section_pairs(draw):
    k = draw(st.integers(0, len(BUNDLES) - 1))
    return draw(sections(k)), draw(sections(k))


def z2_all():
    B = line_bundle(cyclic_group(2, gen="g"))
    return Section.from_coeffs(B, {"e": [1], "g": [1]})


def test_unit_delta_is_a_left_identity():
    B = full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1})
    one = delta(B, B.unit_element("p"))
    s = Section.from_coeffs(B, {"p:p": [1, 2, 3, 4], "p:q": [5j, 6]})
    assert np.allclose(convolve(one, s).vec, s.vec)


def test_z2_convolution_square():
    s = z2_all()
    sq = convolve(s, s)
    assert np.allclose(sq["e"], [2]) and np.allclose(sq["g"], [2])


def test_i_norm_examples():
    B = full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1})
    s = Section.from_coeffs(B, {"p:q": [3, 4j]})
    assert i_norm(s) == pytest.approx(5.0)
    assert i_norm(z2_all()) == pytest.approx(2.0)


def test_cstar_norm_examples():
    assert cstar_norm(unit_section(line_bundle(symmetric_group(3)))) == pytest.approx(1.0, abs=1e-12)
    assert abs(cstar_norm(z2_all()) - Z2_NORM) <= 1e-10
    B = line_bundle(symmetric_group(3))
    s = Section.from_coeffs(B, {x: [1] for x in B.groupoid.arrows})
    assert abs(cstar_norm(s) - S3_NORM) <= 1e-8


def test_sections_from_different_bundles_do_not_mix():
    a = Section(line_bundle(cyclic_group(2)))
    b = Section(line_bundle(cyclic_group(2)))
    with pytest.raises(ValueError):
        convolve(a, b)


def test_wrong_length_section_rejected():
    with pytest.raises(ValueError):
        Section(line_bundle(cyclic_group(2)), [1, 2, 3])


@given(sections())
def test_star_is_involutive(s):
    assert np.allclose(star_section(star_section(s)).vec, s.vec)


@given(sections())
def test_i_norm_of_star(s):
    assert i_norm(star_section(s)) == pytest.approx(i_norm(s))
    assert i_norm_r(star_section(s)) == pytest.approx(i_norm_s(s))


@settings(max_examples=25)
@given(st.tuples(st.integers(0, 3), st.integers(0, 2**32 - 1)))
def test_convolution_is_associative(args):
    k, seed = args
    B = BUNDLES[k]
    rng = np.random.default_rng(seed)
    n = Section(B).vec.shape[0]
    a, b, c = (Section(B, rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(3))
    lhs = convolve(convolve(a, b), c).vec
    rhs = convolve(a, convolve(b, c)).vec
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1, np.abs(lhs).max()))


@given(section_pairs())
def test_star_is_an_anti_homomorphism(pair):
    s, t = pair
    assert np.allclose(star_section(convolve(s, t)).vec, convolve(star_section(t), star_section(s)).vec)


@given(sections())
def test_trace_is_faithful(s):
    val = trace_functional(convolve(star_section(s), s))
    hs = sum(float(np.vdot(s[x], s[x]).real) for x in s.bundle.groupoid.arrows)
    # fiber bases are HS-orthonormal, so the HS norm is the coefficient norm
    assert val.real == pytest.approx(hs, rel=1e-9, abs=1e-9)
    assert abs(val.imag) <= 1e-9 * max(1.0, hs)


@given(section_pairs())
def test_trace_property(pair):
    s, t = pair
    a, b = trace_functional(convolve(s, t)), trace_functional(convolve(t, s))
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@given(sections())
def test_cstar_identity(s):
    c = cstar_norm(s)
    assert abs(cstar_norm(convolve(star_section(s), s)) - c * c) <= 1e-8 * max(1.0, c * c)


@given(section_pairs())
def test_cstar_norm_submultiplicative(pair):
    s, t = pair
    assert cstar_norm(convolve(s, t)) <= cstar_norm(s) * cstar_norm(t) + 1e-8 * max(1, cstar_norm(s) * cstar_norm(t))


@given(sections())
def test_cstar_norm_below_i_norm(s):
    assert cstar_norm(s) <= i_norm(s) * (1 + 1e-9) + 1e-12


def test_left_matrix_matches_convolution(rng):
    B = BUNDLES[3]
    n = Section(B).vec.shape[0]
    s = Section(B, rng.standard_normal(n))
    t = Section(B, rng.standard_normal(n) + 1j)
    assert np.allclose(left_matrix(s) @ t.vec, convolve(s, t).vec)


# --- i and j -----------------------------------------------------------------


@pytest.mark.parametrize("name", ["line_canonical:s3_factorized", "semidirect_matrix", "unitary_family_matrix:2"])
def test_i_is_a_star_homomorphism(name, rng):
    A = action_of(name)
    n = Section(A.base).vec.shape[0]
    srcs = [Section(A.base, rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(4)]
    scale = max(float(np.abs(convolve(s, t).vec).max()) for s in srcs for t in srcs)
    mult, star = is_star_hom_residual(lambda s: hom_i(s, A), srcs)
    assert mult <= 1e-12 * scale
    assert star <= 1e-12
    for s in srcs:
        assert i_norm(hom_i(s, A)) <= i_norm(s) + 1e-12
        assert cstar_norm(hom_i(s, A)) <= cstar_norm(s) + 1e-8


def test_i_with_trivial_h_is_the_identification():
    base = full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1})
    A = trivial_action(base)
    s = Section(base, np.arange(Section(base).vec.shape[0], dtype=complex))
    img = hom_i(s, A)
    for x in base.groupoid.arrows:
        assert np.allclose(img[(x, base.groupoid.src[x])], s[x])


@pytest.mark.parametrize("name", ["line_canonical:selfsim_flip", "semidirect_matrix", "unitary_family_matrix:3"])
def test_j_is_a_star_homomorphism(name, rng):
    A = action_of(name)
    L = h_algebra_bundle(A)
    n = Section(L).vec.shape[0]
    srcs = [Section(L, rng.standard_normal(n) + 1j * rng.standard_normal(n)) for _ in range(4)]
    scale = max(float(np.abs(convolve(f, g).vec).max()) for f in srcs for g in srcs)
    mult, star = is_star_hom_residual(lambda f: hom_j(f, A), srcs)
    assert mult <= 1e-12 * scale and star <= 1e-12
    for f in srcs:
        assert i_norm(hom_j(f, A)) <= i_norm(f) + 1e-12


def test_j_of_unit_delta_is_an_idempotent():
    A = action_of("semidirect_matrix")
    u = A.pair.H.units[0]
    p = hom_j({A.pair.H.unit_arrow[u]: 1.0}, A)
    assert np.allclose(convolve(p, p).vec, p.vec)
    assert np.allclose(star_section(p).vec, p.vec)


def test_j_star_formula():
    A = action_of("line_canonical:s3_factorized_rev")
    H = A.pair.H
    f = {h: complex(i + 1, -i) for i, h in enumerate(H.arrows)}
    fstar = {h: np.conj(f[H.inv[h]]) for h in H.arrows}
    assert np.allclose(star_section(hom_j(f, A)).vec, hom_j(fstar, A).vec)


@pytest.mark.parametrize("name", ACTION_NAMES + FAMILY_NAMES)
def test_i_and_j_are_injective(name):
    A = action_of(name)
    imgs_i = np.array([hom_i(s, A).vec for s in basis_sections(A.base)])
    imgs_j = np.array([hom_j({h: 1.0}, A).vec for h in A.pair.H.arrows])
    assert np.linalg.matrix_rank(imgs_i) == imgs_i.shape[0]
    assert np.linalg.matrix_rank(imgs_j) == imgs_j.shape[0]


# --- blend -------------------------------------------------------------------


def test_blend_trivial_h_is_full():
    base = full_matrix_bundle(pair_groupoid(["p", "q"]), {"p": 2, "q": 1})
    r = blend_rank(trivial_action(base))
    assert r.rank == r.full_dim == 9


def test_blend_frozen_oracle_values():
    # naive exact row reduction in zsfell.oracle gives 4 and 6
    assert tuple(blend_rank(line_action(builtin_pair("z2z2_trivial")))) == (4, 4)
    assert tuple(blend_rank(line_action(builtin_pair("s3_factorized")))) == (6, 6)


@pytest.mark.parametrize("name", ACTION_NAMES + FAMILY_NAMES)
def test_blend_full_on_unital_corpus(name):
    r_ij, r_ji, full = blend_ranks(action_of(name))
    assert r_ij == r_ji == full


def test_blend_needs_unital_fibers():
    G = cyclic_group(1)
    E11 = np.array([[1, 0], [0, 0]])
    base = ConcreteMatrixBundle(G, {"o": 2}, {"e": [E11]})
    assert not base.unital
    with pytest.raises(ValueError):
        blend_ranks(trivial_action(base))
