import itertools
from fractions import Fraction

import pytest

from core.exceptions import InvalidInstance, InvalidMatching, UnknownEdge
from core.model import (
    Edge,
    EdgeWeights,
    Matching,
    PreferenceSystem,
    is_blocking,
    is_stable,
    phi,
    rank_of,
)
from tests.instances import C6, E2, EX1, NOSM, random_instance, scaled


def edges(*pairs):
    return frozenset(Edge(*p) for p in pairs)


def test_edge_is_normalised():
    assert Edge(5, 2) == Edge(2, 5)
    assert Edge(5, 2).u == 2
    assert str(Edge(5, 2)) == "2-5"
    with pytest.raises(InvalidInstance):
        Edge(3, 3)


@pytest.mark.parametrize(
    "lists",
    [
        {1: [2], 2: []},
        {1: [2, 2], 2: [1]},
        {1: [1]},
        {1: [3]},
        {0: []},
    ],
)
def test_invalid_lists_are_rejected(lists):
    with pytest.raises(InvalidInstance):
        PreferenceSystem.from_lists(lists)


def test_edges_are_derived_from_lists():
    assert EX1.edges[0] == Edge(1, 2)
    assert len(EX1.edges) == 12
    assert EX1.degree(2) == 5
    assert EX1.first(6) == 2 and EX1.last(6) == 4


@pytest.mark.parametrize("P,u,v,expected", [(EX1, 1, 3, 1), (EX1, 1, 2, 4), (E2, 1, 2, 1)])
def test_rank_of(P, u, v, expected):
    assert rank_of(P, u, v) == expected


def test_rank_of_unknown_edge():
    with pytest.raises(UnknownEdge):
        rank_of(EX1, 1, 6)


def test_rank_is_a_bijection_onto_positions():
    for v in EX1.agents:
        assert sorted(rank_of(EX1, v, u) for u in EX1.neighbors(v)) == list(range(1, EX1.degree(v) + 1))


@pytest.mark.parametrize(
    "P,e,expected",
    [
        (EX1, (1, 2), edges((1, 2), (1, 3), (1, 4), (1, 5))),
        (C6, (1, 2), edges((1, 2), (2, 3))),
        (E2, (1, 2), edges((1, 2))),
    ],
)
def test_phi(P, e, expected):
    assert phi(P, e) == expected


def test_phi_contains_e_and_only_adjacent_edges():
    for e in EX1.edges:
        found = phi(EX1, e)
        assert e in found
        assert all(f.touches(e.u) or f.touches(e.v) for f in found)


def test_phi_rejects_unknown_edge():
    with pytest.raises(UnknownEdge):
        phi(EX1, (1, 6))


def test_is_blocking_examples():
    assert not is_blocking(EX1, Matching.of([(1, 4), (2, 5), (3, 6)]), (1, 3))
    assert is_blocking(NOSM, Matching.of([(1, 2), (3, 4)]), (2, 3))
    assert not is_blocking(E2, Matching.of([(1, 2)]), (1, 2))


def test_unmatched_pair_blocks_empty_matching():
    assert is_blocking(E2, Matching(), (1, 2))


def test_is_stable_examples():
    assert is_stable(EX1, Matching.of([(1, 4), (2, 5), (3, 6)]))
    verdict = is_stable(NOSM, Matching.of([(1, 2), (3, 4)]))
    assert not verdict
    assert verdict.witness == Edge(2, 3)
    assert is_stable(C6, Matching.of([(1, 2), (3, 4), (5, 6)]))


def test_is_stable_rejects_foreign_edges():
    with pytest.raises(InvalidMatching):
        is_stable(EX1, Matching.of([(1, 6)]))


def test_matching_requires_disjoint_edges():
    with pytest.raises(InvalidMatching):
        Matching.of([(1, 2), (2, 3)])


def test_partner_of_unmatched_agent_is_itself():
    M = Matching.of([(1, 4)])
    assert M.partner(1) == 4
    assert M.partner(2) == 2
    assert not M.is_matched(2)


def _all_matchings(P):
    for r in range(len(P.agents) // 2 + 1):
        for chosen in itertools.combinations(P.edges, r):
            try:
                yield Matching(frozenset(chosen))
            except InvalidMatching:
                continue


def test_stability_agrees_with_phi_criterion(rng):
    for _ in range(scaled(40)):
        P = random_instance(rng, rng.randint(2, 6))
        for M in _all_matchings(P):
            by_phi = all(phi(P, e) & M.edges for e in P.edges)
            assert bool(is_stable(P, M)) == by_phi


def test_weights_default_to_zero_with_warning(caplog):
    w = EdgeWeights.for_instance(C6, {(1, 2): "3/2"})
    assert w[(1, 2)] == Fraction(3, 2)
    assert w[(2, 3)] == 0
    assert Edge(2, 3) in w.defaulted
    assert "default to 0" in caplog.text


def test_weights_reject_negative_and_unknown():
    with pytest.raises(InvalidInstance):
        EdgeWeights.for_instance(C6, {(1, 2): -1})
    with pytest.raises(UnknownEdge):
        EdgeWeights.for_instance(C6, {(1, 3): 1})


def test_egalitarian_weights_sum_ranks():
    w = EdgeWeights.egalitarian(EX1)
    assert w[(1, 2)] == 4 + 1
    assert w[(1, 4)] == 2 + 3


def test_first_last_duality_on_c6():
    assert C6.has_first_last_duality()
    assert not EX1.has_first_last_duality()
