from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zsfell.corpus import PAIR_NAMES, builtin, builtin_pair, direct_product_pair
from zsfell.gpd import (
    Arrow,
    CompositionError,
    FactorizationError,
    FiniteGroupoid,
    MatchedPair,
    SelfSimilarAction,
    check_matched_pair,
    compose,
    cyclic_group,
    discrete_groupoid,
    find_isomorphism,
    generated_subgroup,
    group_groupoid,
    internal_factorization,
    invert,
    pair_groupoid,
    relabel,
    self_similar_groupoid,
    symmetric_group,
    transformation_groupoid,
    transformation_matched_pair,
    validate_groupoid,
    zs_groupoid,
)
from zsfell.report import StructuralError

# Frozen from zsfell.oracle.permutation_table(3) and brute_force_factorization.
S3_TRANSPOSITION_PRODUCTS = {
    ("(12)", "(23)"): "(123)",
    ("(12)", "(13)"): "(132)",
    ("(23)", "(12)"): "(132)",
    ("(23)", "(13)"): "(123)",
    ("(13)", "(12)"): "(123)",
    ("(13)", "(23)"): "(132)",
}
S3_FACTOR_ACT = {
    ("e", "e"): "e",
    ("e", "(123)"): "(123)",
    ("e", "(132)"): "(132)",
    ("(12)", "e"): "e",
    ("(12)", "(123)"): "(132)",
    ("(12)", "(132)"): "(123)",
}
S3_FACTOR_RES = {
    ("e", "e"): "e",
    ("e", "(123)"): "e",
    ("e", "(132)"): "e",
    ("(12)", "e"): "(12)",
    ("(12)", "(123)"): "(12)",
    ("(12)", "(132)"): "(12)",
}
ZS_IDS = [f"ZS{i}" for i in range(1, 14)]


def z2_with(comp_gg: str) -> FiniteGroupoid:
    arrows = [Arrow("e", "o", "o"), Arrow("g", "o", "o")]
    comp = {("e", "e"): "e", ("e", "g"): "g", ("g", "e"): "g", ("g", "g"): comp_gg}
    return FiniteGroupoid(["o"], arrows, comp, {"e": "e", "g": "g"}, {"o": "e"})


def semidirect_cyclic(n: int, m: int, k: int) -> MatchedPair:
    """Z_m acting on Z_n by x -> k^h x, for k with k^m = 1 mod n."""
    A = cyclic_group(n)
    B = cyclic_group(m, gen="b")
    a_idx = {a: i for i, a in enumerate(A.arrows)}
    b_idx = {b: i for i, b in enumerate(B.arrows)}
    act = {(h, x): A.arrows[(pow(k, b_idx[h], n) * a_idx[x]) % n] for h in B.arrows for x in A.arrows}
    res = {(h, x): h for h in B.arrows for x in A.arrows}
    return MatchedPair(A, B, act, res, name=f"Z{n} x| Z{m}")


def admissible(n: int, m: int) -> list[int]:
    return [k for k in range(1, n) if math.gcd(k, n) == 1 and pow(k, m, n) == 1]


semidirect_params = st.tuples(st.integers(2, 7), st.integers(1, 4)).flatmap(
    lambda nm: st.tuples(st.just(nm[0]), st.just(nm[1]), st.sampled_from(admissible(*nm)))
)


# --- groupoids ---------------------------------------------------------------


def test_z2_is_a_groupoid():
    assert validate_groupoid(z2_with("e")).ok


def test_z2_with_gg_equal_g_breaks_inverse_law():
    rep = validate_groupoid(z2_with("g"))
    assert not rep["INV"].passed
    assert "g" in rep["INV"].witness


def test_discrete_groupoid_on_three_units():
    G = discrete_groupoid(["a", "b", "c"])
    assert validate_groupoid(G).ok
    assert len(G.arrows) == 3


def test_dangling_ids_are_structural_not_law_failures():
    arrows = [Arrow("e", "o", "o"), Arrow("g", "o", "o")]
    comp = {("e", "e"): "e", ("e", "g"): "g", ("g", "e"): "g", ("g", "g"): "zz"}
    G = FiniteGroupoid(["o"], arrows, comp, {"e": "e", "g": "g"}, {"o": "e"})
    rep = validate_groupoid(G)
    assert [c.id for c in rep.structural_errors] == ["STRUCT"]


def test_empty_groupoid_rejected():
    with pytest.raises(ValueError):
        FiniteGroupoid([], [], {}, {}, {})


def test_compose_with_unit_and_invert_involution():
    G = pair_groupoid(["p", "q", "r"])
    for a in G.arrows:
        assert compose(G, a, G.unit_arrow[G.src[a]]) == a
        assert compose(G, G.unit_arrow[G.rng[a]], a) == a
        assert invert(G, invert(G, a)) == a


def test_non_composable_pair_raises_with_both_arrows():
    G = pair_groupoid(["p", "q"])
    with pytest.raises(CompositionError) as exc:
        compose(G, "p:q", "p:q")
    assert exc.value.pair == ("p:q", "p:q")


def test_s3_table_matches_frozen_brute_force():
    S3 = symmetric_group(3)
    assert len(S3.comp) == 36
    for (a, b), c in S3_TRANSPOSITION_PRODUCTS.items():
        assert compose(S3, a, b) == c


def test_relabel_and_find_isomorphism():
    S3 = symmetric_group(3)
    f = {a: f"g{i}" for i, a in enumerate(S3.arrows)}
    T = relabel(S3, f)
    iso = find_isomorphism(S3, T)
    assert iso is not None
    assert find_isomorphism(cyclic_group(6), S3) is None


# --- matched pairs -----------------------------------------------------------


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_corpus_pairs_pass_all_thirteen(name):
    rep = check_matched_pair(builtin_pair(name))
    assert [c.id for c in rep.checks if c.id.startswith("ZS")] == ZS_IDS
    assert rep.ok


def test_s3_factorization_matches_frozen_brute_force():
    P = builtin_pair("s3_factorized")
    assert dict(P.act) == S3_FACTOR_ACT
    assert dict(P.res) == S3_FACTOR_RES


def test_reversed_s3_factorization_has_nontrivial_restriction():
    P = builtin_pair("s3_factorized_rev")
    assert check_matched_pair(P).ok
    assert any(P.res[(h, x)] != h for h, x in P.domain())


def test_act_off_domain_is_structural():
    P = builtin_pair("semidirect")
    act = dict(P.act)
    act[("bogus", "p:p")] = "p:p"
    rep = check_matched_pair(MatchedPair(P.G, P.H, act, P.res))
    assert rep.structural_errors


def test_broken_restriction_fails_an_axiom():
    P = builtin_pair("s3_factorized_rev")
    res = dict(P.res)
    key = next(k for k in P.domain() if P.res[k] != k[0])
    res[key] = key[0]
    assert not check_matched_pair(MatchedPair(P.G, P.H, P.act, res)).ok


@given(semidirect_params)
def test_semidirect_cyclic_pairs_are_matched(params):
    P = semidirect_cyclic(*params)
    assert check_matched_pair(P).ok
    assert validate_groupoid(zs_groupoid(P)).ok


@given(st.integers(1, 5), st.integers(1, 5))
def test_direct_products_of_cyclic_groups(n, m):
    P = direct_product_pair(cyclic_group(n), cyclic_group(m, gen="b"), "dp")
    assert check_matched_pair(P).ok
    K = zs_groupoid(P)
    assert len(K) == n * m
    assert all(K.comp[(a, b)] == K.comp[(b, a)] for a in K.arrows for b in K.arrows)


# --- product groupoid --------------------------------------------------------


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_product_groupoid_is_valid_and_fibered(name):
    P = builtin_pair(name)
    K = zs_groupoid(P)
    assert validate_groupoid(K).ok
    expected = [(x, h) for x in P.G.arrows for h in P.H.arrows if P.G.src[x] == P.H.rng[h]]
    assert sorted(K.arrows, key=repr) == sorted(expected, key=repr)
    for x, h in K.arrows:
        assert K.rng[(x, h)] == P.G.rng[x]
        assert K.src[(x, h)] == P.H.src[h]


def test_trivial_pair_product_is_z6():
    K = zs_groupoid(builtin_pair("trivial_pair"))
    assert find_isomorphism(K, cyclic_group(6)) is not None


def test_s3_product_equals_s3_under_multiplication():
    P = builtin_pair("s3_factorized")
    K = zs_groupoid(P)
    S3 = symmetric_group(3)
    assert len(K) == 6
    to_s3 = {(x, h): S3.comp[(x, h)] for x, h in K.arrows}
    assert sorted(to_s3.values()) == sorted(S3.arrows)
    for a, b, ab in K.composable():
        assert to_s3[ab] == S3.comp[(to_s3[a], to_s3[b])]


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_internal_factorization_recovers_the_pair(name):
    P = builtin_pair(name)
    K = zs_groupoid(P)
    Q = internal_factorization(K, [P.embed_G(x) for x in P.G.arrows], [P.embed_H(h) for h in P.H.arrows])
    assert check_matched_pair(Q).ok
    for h, x in P.domain():
        key = (P.embed_H(h), P.embed_G(x))
        assert Q.act[key] == P.embed_G(P.act[(h, x)])
        assert Q.res[key] == P.embed_H(P.res[(h, x)])


def test_internal_factorization_direct_product_is_trivial():
    P0 = builtin_pair("z2z2_trivial")
    K = zs_groupoid(P0)
    Q = internal_factorization(K, [P0.embed_G(x) for x in P0.G.arrows], [P0.embed_H(h) for h in P0.H.arrows])
    assert all(Q.act[(h, x)] == x and Q.res[(h, x)] == h for h, x in Q.domain())


def test_s3_with_two_transpositions_does_not_factor():
    S3 = symmetric_group(3)
    with pytest.raises(FactorizationError) as exc:
        internal_factorization(S3, generated_subgroup(S3, ["(12)"]), generated_subgroup(S3, ["(13)"]))
    assert exc.value.count != 1


# --- self-similar actions ----------------------------------------------------


def test_trivial_group_gives_discrete_h_and_product_isomorphic_to_g():
    G = pair_groupoid(["p", "q"])
    H = group_groupoid(["e"], lambda a, b: "e", "e")
    S = SelfSimilarAction(G, H, {("e", x): x for x in G.arrows}, {("e", x): "e" for x in G.arrows}, name="triv")
    T = transformation_groupoid(S)
    assert all(T.is_unit_arrow(a) for a in T.arrows)
    K = zs_groupoid(transformation_matched_pair(S))
    assert find_isomorphism(K, G) is not None


def test_flip_transformation_groupoid_has_four_arrows():
    P = builtin_pair("selfsim_flip")
    assert len(P.H.arrows) == 4
    assert validate_groupoid(P.H).ok


def test_global_action_restriction_formula():
    P = builtin_pair("semidirect")
    swap = {"p": "q", "q": "p"}
    for (u, h), x in P.domain():
        s = P.G.src[x]
        moved = s if h == "e" else swap[s]
        assert P.res[((u, h), x)] == (moved, h)


def _flip_self_similar():
    from zsfell.corpus import _flip_action, _pair_swap_action

    return [_flip_action("f"), _pair_swap_action("s")]


@pytest.mark.parametrize("S", _flip_self_similar(), ids=["flip", "pair_swap"])
def test_product_of_transformation_pair_equals_self_similar_groupoid(S):
    K = zs_groupoid(transformation_matched_pair(S))
    D = self_similar_groupoid(S)
    # (x, (u, h)) corresponds to (x, h)
    f = {k: (k[0], k[1][1]) for k in K.arrows}
    assert sorted(f.values(), key=repr) == sorted(D.arrows, key=repr)
    for a, b, ab in K.composable():
        assert D.comp[(f[a], f[b])] == f[ab]


def test_self_similar_violation_is_structural():
    G = discrete_groupoid(["p", "q"])
    H = cyclic_group(2, gen="g")
    ast = {(h, x): x for h in H.arrows for x in G.arrows}
    bullet = {(h, x): "e" for h in H.arrows for x in G.arrows}
    with pytest.raises(StructuralError):
        transformation_matched_pair(SelfSimilarAction(G, H, ast, bullet))


def test_builtin_s3_entry_sizes():
    P = builtin("s3_factorized").payload
    assert (len(P.G.arrows), len(P.H.arrows), len(zs_groupoid(P))) == (3, 2, 6)
