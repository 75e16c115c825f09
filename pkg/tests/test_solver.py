from fractions import Fraction

import pytest

from core.exceptions import NotBipartite, NotReducible, PreconditionViolated
from core.model import Direction, EdgeWeights, Matching, NoStableMatching
from core.oracle import brute_optimum, enumerate_stable_matchings
from core.reduction import is_bipartite_reducible, reduce_to_h
from core.solver import (
    RotationMove,
    apply_rotations,
    iter_closed_subsets,
    optimize_exact,
    proposer_optimal,
    rotation_system,
)
from tests.instances import (
    C6,
    C6_A,
    C6_B,
    EX1,
    LAT3,
    NOSM,
    PATH3,
    TRI_C4,
    random_bipartite,
    random_core,
    scaled,
)

EX1_M = Matching.of([(1, 4), (2, 5), (3, 6)])


def test_proposer_optimal_examples():
    assert proposer_optimal(C6, {1, 3, 5}) == Matching.of(C6_A)
    assert proposer_optimal(C6, {2, 4, 6}) == Matching.of(C6_B)
    assert proposer_optimal(reduce_to_h(EX1).h, {1, 2, 3}) == EX1_M
    assert proposer_optimal(LAT3, {1, 2, 3}) == Matching.of([(1, 4), (2, 5), (3, 6)])


def test_proposer_optimal_needs_a_colour_class():
    with pytest.raises(NotBipartite):
        proposer_optimal(C6, {1, 2, 3})


def test_proposer_optimal_is_best_for_every_proposer(rng):
    for _ in range(scaled(60)):
        left = rng.randint(1, 5)
        P = random_bipartite(rng, left, rng.randint(1, 5))
        men = frozenset(range(1, left + 1))
        base = proposer_optimal(P, men)
        stable = enumerate_stable_matchings(P)
        assert base in stable
        for M in stable:
            for m in men:
                if M.is_matched(m):
                    assert not P.prefers(m, M.partner(m), base.partner(m))


def test_rotation_system_on_c6(c6_weights):
    rs = rotation_system(C6, {1, 3, 5}, c6_weights)
    assert rs.base == Matching.of(C6_A)
    assert len(rs.rotations) == 1
    rotation = rs.rotations[0]
    assert rotation.moves == (RotationMove(1, 2, 6), RotationMove(5, 6, 4), RotationMove(3, 4, 2))
    assert rotation.delta == -4
    assert rs.precedence == frozenset()
    assert apply_rotations(rs, {0}) == Matching.of(C6_B)


def test_rotation_system_on_ex1_h():
    h = reduce_to_h(EX1).h
    rs = rotation_system(h, {1, 2, 3}, EdgeWeights.uniform(h))
    assert rs.rotations == () and rs.base == EX1_M


def test_rotation_system_on_lat3_is_a_chain():
    rs = rotation_system(LAT3, {1, 2, 3}, EdgeWeights.egalitarian(LAT3))
    assert len(rs.rotations) == 2
    assert rs.precedence == {(0, 1)}
    closed = list(iter_closed_subsets(rs))
    assert sorted(map(sorted, closed)) == [[], [0], [0, 1]]
    assert {apply_rotations(rs, s) for s in closed} == set(enumerate_stable_matchings(LAT3))


def test_apply_rotations_requires_closed_subset():
    rs = rotation_system(LAT3, {1, 2, 3}, EdgeWeights.uniform(LAT3))
    with pytest.raises(PreconditionViolated):
        apply_rotations(rs, {1})


def test_optimize_exact_examples(c6_weights):
    assert optimize_exact(C6, c6_weights, Direction.MIN) == (Matching.of(C6_B), Fraction(3))
    assert optimize_exact(C6, c6_weights, Direction.MAX) == (Matching.of(C6_A), Fraction(7))
    assert optimize_exact(EX1, EdgeWeights.egalitarian(EX1)).matching == EX1_M


def test_optimize_exact_on_instances_with_unmatched_agents():
    w = EdgeWeights.for_instance(PATH3, {(1, 2): 4, (2, 3): 1})
    assert optimize_exact(PATH3, w) == (Matching.of([(1, 2)]), Fraction(4))


def test_optimize_exact_errors():
    assert isinstance(optimize_exact(NOSM, EdgeWeights.uniform(NOSM)), NoStableMatching)
    with pytest.raises(NotReducible):
        optimize_exact(TRI_C4, EdgeWeights.uniform(TRI_C4))


def _random_weights(rng, P):
    return EdgeWeights.for_instance(P, {e: rng.randint(0, 100) for e in P.edges})


def test_exact_matches_brute_force_on_bipartite_instances(rng):
    for _ in range(scaled(80)):
        P = random_bipartite(rng, rng.randint(1, 5), rng.randint(1, 5), rng.choice([0.5, 0.8]))
        w = _random_weights(rng, P)
        for direction in Direction:
            found = optimize_exact(P, w, direction)
            _, best = brute_optimum(P, w, direction)
            assert found.weight == best
            assert found.matching in enumerate_stable_matchings(P)


@pytest.mark.slow
def test_exact_matches_brute_force_on_reducible_cores(rng):
    checked = 0
    while checked < scaled(500):
        P = random_core(rng, rng.randint(2, 10), rng.choice([0.4, 0.6]))
        if P is None or not is_bipartite_reducible(P):
            continue
        checked += 1
        w = _random_weights(rng, P)
        for direction in Direction:
            _, best = brute_optimum(P, w, direction)
            assert optimize_exact(P, w, direction).weight == best


def test_closed_subsets_biject_with_stable_matchings(rng):
    checked = 0
    while checked < scaled(60):
        P = random_core(rng, rng.randint(2, 9), 0.6)
        if P is None:
            continue
        verdict = is_bipartite_reducible(P)
        if not verdict:
            continue
        checked += 1
        h = verdict.reduced.h
        w = EdgeWeights.egalitarian(h)
        stable = set(enumerate_stable_matchings(P))
        for side in verdict.parts:
            rs = rotation_system(h, side, w)
            reached = [apply_rotations(rs, s) for s in iter_closed_subsets(rs)]
            assert len(reached) == len(stable)
            assert set(reached) == stable
            for s, M in zip(iter_closed_subsets(rs), reached):
                moved = sum((rs.rotations[i].delta for i in s), Fraction(0))
                assert w.total(M) == w.total(rs.base) + moved


def test_optimum_does_not_depend_on_the_proposing_side(rng):
    checked = 0
    while checked < scaled(40):
        P = random_core(rng, rng.randint(4, 9), 0.6)
        if P is None:
            continue
        verdict = is_bipartite_reducible(P)
        if not verdict:
            continue
        checked += 1
        h = verdict.reduced.h
        w = EdgeWeights.for_instance(h, {e: rng.randint(0, 20) for e in h.edges})
        weights = set()
        for side in verdict.parts:
            rs = rotation_system(h, side, w)
            weights.add(min(w.total(apply_rotations(rs, s)) for s in iter_closed_subsets(rs)))
        assert len(weights) == 1
