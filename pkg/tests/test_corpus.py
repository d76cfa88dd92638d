from __future__ import annotations

import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zsfell import oracle
from zsfell.alg import Section, blend_rank, blend_ranks, cstar_norm, i_norm
from zsfell.corpus import (
    ACTION_NAMES,
    FAMILY_NAMES,
    GROUP_PAIR_NAMES,
    PAIR_NAMES,
    builtin,
    builtin_names,
    builtin_pair,
    group_characters,
    random_instance,
    random_unitary_family,
    regular_representation,
)
from zsfell.fell import line_bundle
from zsfell.gpd import cyclic_group, symmetric_group, validate_groupoid, check_matched_pair, zs_groupoid
from zsfell.rep import validate_strict_rep
from zsfell.zsb import validate_action, validate_unitary_family, zs_bundle

# Frozen from oracle.oracle_scan: (|G|, |H|, |G bowtie H|, blend rank) per line action.
ORACLE_LINE = {
    "trivial_pair": (3, 2, 6, 6),
    "z2z2_trivial": (2, 2, 4, 4),
    "s3_factorized": (3, 2, 6, 6),
    "s3_factorized_rev": (2, 3, 6, 6),
    "z3z2_semidirect": (3, 2, 6, 6),
    "selfsim_flip": (2, 4, 4, 4),
    "semidirect": (4, 4, 8, 8),
    "selfsim_s3": (3, 2, 6, 6),
    "trivial_h": (4, 2, 4, 4),
}


def action_of(name):
    e = builtin(name)
    return e.payload if e.kind == "action" else e.extras["action"]


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_builtin_pairs_validate(name):
    P = builtin_pair(name)
    assert check_matched_pair(P).ok
    assert validate_groupoid(zs_groupoid(P)).ok


@pytest.mark.parametrize("name", ACTION_NAMES)
def test_builtin_actions_validate(name):
    assert validate_action(builtin(name).payload).ok


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_builtin_families_validate(name):
    e = builtin(name)
    assert validate_unitary_family(e.payload.bundle, e.payload.pair, e.payload.u).ok
    assert validate_action(e.extras["action"]).ok


def test_s3_factorization_sizes():
    P = builtin_pair("s3_factorized")
    assert (len(P.G.arrows), len(P.H.arrows), len(zs_groupoid(P).arrows)) == (3, 2, 6)


def test_names_are_listed_and_unknown_names_raise():
    assert set(PAIR_NAMES) | set(ACTION_NAMES) | set(FAMILY_NAMES) == set(builtin_names())
    assert set(GROUP_PAIR_NAMES) <= set(PAIR_NAMES)
    assert builtin("line_canonical").name == builtin("line_canonical:s3_factorized").name
    with pytest.raises(KeyError):
        builtin("no_such_thing")
    with pytest.raises(KeyError):
        random_instance("no_such_kind", 0)


@pytest.mark.parametrize("name", GROUP_PAIR_NAMES)
def test_group_pairs_are_groups(name):
    P = builtin_pair(name)
    assert P.G.is_group and P.H.is_group


def test_regular_representation_is_a_permutation_homomorphism():
    S3 = symmetric_group(3)
    reg = regular_representation(S3)
    for x, y, xy in S3.composable():
        assert np.array_equal(reg[x] @ reg[y], reg[xy])
    for M in reg.values():
        assert np.array_equal(M.sum(axis=0), np.ones(6))


def test_characters_of_cyclic_group():
    Z3 = cyclic_group(3)
    chars = group_characters(list(Z3.arrows), dict(Z3.comp), Z3.unit_arrow[Z3.units[0]])
    assert len(chars) == 3
    for chi in chars:
        for x, y, xy in Z3.composable():
            assert abs(chi[x] * chi[y] - chi[xy]) < 1e-12


def test_s3_has_two_linear_characters():
    S3 = symmetric_group(3)
    assert len(group_characters(list(S3.arrows), dict(S3.comp), "e")) == 2


# --- randomness ----------------------------------------------------------------


@pytest.mark.parametrize("kind", ["section", "unitary_family", "strict_rep"])
def test_random_instances_are_deterministic(kind):
    a, b = random_instance(kind, 7), random_instance(kind, 7)
    if kind == "section":
        assert np.array_equal(a.payload.vec, b.payload.vec)
    elif kind == "unitary_family":
        assert all(np.array_equal(a.payload.u[h].vec, b.payload.u[h].vec) for h in a.payload.u)
    else:
        assert all(np.array_equal(a.payload.psi[x], b.payload.psi[x]) for x in a.payload.psi)
    assert a.name == b.name


def test_random_seeds_differ():
    a, b = random_instance("section", 1), random_instance("section", 2)
    assert not np.allclose(a.payload.vec, b.payload.vec)


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_random_unitary_families_validate(seed):
    e = random_unitary_family(seed)
    assert validate_unitary_family(e.payload.bundle, e.payload.pair, e.payload.u).ok
    assert validate_action(e.extras["action"]).ok


def test_seed_three_family():
    e = random_instance("unitary_family", 3)
    assert validate_unitary_family(e.payload.bundle, e.payload.pair, e.payload.u).ok


def test_random_strict_rep_validates():
    e = random_instance("strict_rep", 5, weighted=True)
    assert validate_strict_rep(e.payload).ok


def test_cstar_below_i_norm_on_seeded_sections():
    for seed in range(100):
        s = random_instance("section", seed).payload
        assert cstar_norm(s) <= i_norm(s) + 1e-9


# --- oracle --------------------------------------------------------------------


def test_oracle_imports_nothing_from_the_package():
    src = inspect.getsource(oracle)
    assert "from ." not in src and "zsfell" not in src


def test_oracle_s3_table_matches_symmetric_group():
    table = oracle.permutation_table(3)
    assert len(table) == 36
    assert table == dict(symmetric_group(3).comp)


def test_oracle_factorization_of_s3():
    table = oracle.permutation_table(3)
    A = oracle.closure(table, ["(123)"])
    B = oracle.closure(table, ["(12)"])
    unique, counts, act, res = oracle.brute_force_factorization(table, A, B)
    assert unique and set(counts.values()) == {1}
    assert all(res[(h, y)] == h for h, y in res)
    unique, _, _, res_rev = oracle.brute_force_factorization(table, B, A)
    assert unique and any(res_rev[(h, y)] != h for h, y in res_rev)


@pytest.mark.parametrize("name", PAIR_NAMES)
def test_oracle_agrees_with_product_tables(name):
    P = builtin_pair(name)
    rep = oracle.oracle_scan(P)
    assert rep.ok and all(rep.values["axioms"].values())
    assert rep.values["product_table"] == dict(zs_groupoid(P).comp)
    assert rep.values["product_size"] == ORACLE_LINE[name][2]


@pytest.mark.parametrize("name", list(ORACLE_LINE))
def test_blend_rank_matches_frozen_oracle(name):
    A = builtin(f"line_canonical:{name}").payload
    g, h, k, r = ORACLE_LINE[name]
    assert (len(A.pair.G.arrows), len(A.pair.H.arrows)) == (g, h)
    assert tuple(blend_rank(A)) == (r, k)
    assert blend_ranks(A) == (r, r, k)
    live = oracle.oracle_scan(A).values
    assert (live["blend_rank"], live["blend_rank_ji"]) == (r, r)


def test_oracle_z2_eigenvalues():
    Z2 = cyclic_group(2)
    B = line_bundle(Z2)
    s = Section(B)
    s.vec[:] = 1
    rep = oracle.oracle_scan(s)
    assert sorted(np.round(np.real(rep.values["eigenvalues"]), 12)) == [0.0, 2.0]
    assert rep.values["operator_norm"] == pytest.approx(2.0, abs=1e-10)
    assert cstar_norm(s) == pytest.approx(2.0, abs=1e-10)


def test_oracle_rank_is_exact():
    assert oracle.rank_exact([[1, 2], [2, 4]]) == 1
    assert oracle.rank_exact([[1, 0], [0, 1], [1, 1]]) == 2


def test_oracle_reports_unknown_objects():
    assert not oracle.oracle_scan(object()).ok


def test_oracle_on_multi_unit_section_is_skipped():
    A = action_of("line_canonical:semidirect")
    s = Section(zs_bundle(A))
    rep = oracle.oracle_scan(s)
    assert "regular_matrix" not in rep.values and rep.notes
