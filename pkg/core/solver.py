"""
Exact weighted optimisation over the stable matchings of a bipartite
reducible instance.

H is two-coloured, one side proposes, and the stable matchings of H are
walked as a rotation poset: every closed set of rotations applied to the
proposer-optimal matching is a stable matching and vice versa. The best
one is a minimum-weight closure.
"""
import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Set, Tuple, Union

from core.exceptions import InternalInvariantError, NotBipartite, NotReducible, PreconditionViolated
from core.irving import find_stable_matching, perfect_core
from core.model import (
    Agent,
    Direction,
    Edge,
    EdgeWeights,
    Matching,
    NoStableMatching,
    PreferenceSystem,
    is_stable,
)
from core.optcore import ClosureInstance, min_weight_closure
from core.reduction import is_bipartite_reducible

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RotationMove:
    """Proposer ``agent`` leaves ``old`` for ``new``."""

    agent: Agent
    old: Agent
    new: Agent


@dataclass(frozen=True)
class Rotation:
    index: int
    moves: Tuple[RotationMove, ...]
    delta: Fraction

    def __str__(self) -> str:
        return " ".join(f"({m.agent},{m.old}->{m.new})" for m in self.moves)


@dataclass(frozen=True)
class RotationSystem:
    """
    Proposer-optimal matching, its rotations and their precedence.

    Rotations are indexed in the order they were eliminated, which is a
    linear extension of ``precedence``; a pair ``(i, j)`` means rotation
    ``i`` must be eliminated before rotation ``j``.
    """

    base: Matching
    rotations: Tuple[Rotation, ...]
    precedence: FrozenSet[Tuple[int, int]]

    def predecessors(self, index: int) -> FrozenSet[int]:
        return frozenset(i for i, j in self.precedence if j == index)

    def is_closed(self, subset: Iterable[int]) -> bool:
        chosen = set(subset)
        return all(i in chosen for i, j in self.precedence if j in chosen)


class Optimum(NamedTuple):
    matching: Matching
    weight: Fraction


def _check_side(P: PreferenceSystem, side: FrozenSet[Agent]) -> None:
    for e in P.edges:
        if (e.u in side) == (e.v in side):
            raise NotBipartite(f"edge {e} does not cross the given side")


def proposer_optimal(P: PreferenceSystem, side: Iterable[Agent]) -> Matching:
    """
    Deferred acceptance with the agents of ``side`` proposing.

    Args:
        P: A bipartite instance, typically H of a perfect-core instance.
        side: One colour class of ``P``.

    Returns:
        The stable matching every proposer likes best.

    Raises:
        NotBipartite: If some edge has both or neither endpoint in ``side``.
    """
    proposers = frozenset(side)
    _check_side(P, proposers)
    held: Dict[Agent, Agent] = {}
    cursor: Dict[Agent, int] = {m: 0 for m in proposers if P.has_agent(m)}
    free = deque(sorted(cursor))
    while free:
        m = free.popleft()
        choices = P.neighbors(m)
        while cursor[m] < len(choices):
            w = choices[cursor[m]]
            cursor[m] += 1
            current = held.get(w)
            if current is None or P.prefers(w, m, current):
                held[w] = m
                if current is not None:
                    free.append(current)
                break
    return Matching.of((m, w) for w, m in held.items())


def _next_choice(P: PreferenceSystem, partner: Dict[Agent, Agent], m: Agent) -> Optional[Agent]:
    """First agent after ``m``'s partner who would trade up to ``m``."""
    choices = P.neighbors(m)
    for w in choices[P.rank(m, partner[m]):]:
        if partner.get(w, w) != w and P.prefers(w, m, partner[w]):
            return w
    return None


def _exposed_rotation(
    P: PreferenceSystem, partner: Dict[Agent, Agent], proposers: List[Agent]
) -> Optional[List[RotationMove]]:
    dead: Set[Agent] = set()
    for start in proposers:
        if start in dead:
            continue
        seen: Dict[Agent, int] = {}
        path: List[Agent] = []
        m = start
        while m is not None and m not in seen and m not in dead:
            seen[m] = len(path)
            path.append(m)
            w = _next_choice(P, partner, m)
            m = None if w is None else partner[w]
        if m is not None and m in seen:
            cycle = path[seen[m]:]
            return [
                RotationMove(a, partner[a], partner[cycle[(i + 1) % len(cycle)]])
                for i, a in enumerate(cycle)
            ]
        dead.update(path)
    return None


def rotation_system(P: PreferenceSystem, side: Iterable[Agent], w: EdgeWeights) -> RotationSystem:
    """
    Eliminate exposed rotations from the proposer-optimal matching until the
    other side's optimum is reached, recording precedence along the way.

    A rotation depends on the rotation that gave each proposer its old
    partner, and, for every agent a proposer skips over, on the first
    rotation after which that agent holds someone better than the proposer.

    Raises:
        NotBipartite: If ``side`` is not a colour class of ``P``.
    """
    proposers = frozenset(side)
    base = proposer_optimal(P, proposers)
    partner = {a: base.partner(a) for a in P.agents}
    order = sorted(a for a in proposers if base.is_matched(a))
    moved_by: Dict[Tuple[Agent, Agent], int] = {}
    # per receiving agent: (rotation index, partner after it)
    history: Dict[Agent, List[Tuple[int, Agent]]] = {a: [] for a in P.agents if a not in proposers}
    found: List[List[RotationMove]] = []
    while True:
        moves = _exposed_rotation(P, partner, order)
        if moves is None:
            break
        index = len(found)
        found.append(moves)
        for move in moves:
            partner[move.agent] = move.new
            partner[move.new] = move.agent
            moved_by[(move.agent, move.new)] = index
            history[move.new].append((index, move.agent))
        log.debug("rotation %d: %s", index, moves)

    precedence: Set[Tuple[int, int]] = set()
    rotations: List[Rotation] = []
    for index, moves in enumerate(found):
        for move in moves:
            before = moved_by.get((move.agent, move.old))
            if before is not None:
                precedence.add((before, index))
            m = move.agent
            skipped = P.neighbors(m)[P.rank(m, move.old):P.rank(m, move.new) - 1]
            for x in skipped:
                before = _first_better_than(P, x, m, base.partner(x), history[x])
                if before is not None and before != index:
                    precedence.add((before, index))
        delta = sum(
            (w[Edge(mv.agent, mv.new)] - w[Edge(mv.agent, mv.old)] for mv in moves), Fraction(0)
        )
        rotations.append(Rotation(index, tuple(moves), delta))
    for before, after in precedence:
        if before >= after:
            raise InternalInvariantError(f"rotation {before} cannot precede rotation {after}")
    log.debug("%d rotation(s), %d precedence pair(s)", len(rotations), len(precedence))
    return RotationSystem(base, tuple(rotations), frozenset(precedence))


def _first_better_than(
    P: PreferenceSystem,
    x: Agent,
    m: Agent,
    start: Agent,
    timeline: List[Tuple[int, Agent]],
) -> Optional[int]:
    if start != x and P.prefers(x, start, m):
        return None
    for index, holder in timeline:
        if P.prefers(x, holder, m):
            return index
    raise InternalInvariantError(f"agent {x} never improves past {m}")


def apply_rotations(rs: RotationSystem, subset: Iterable[int]) -> Matching:
    """
    The stable matching reached by eliminating a closed set of rotations.

    Raises:
        PreconditionViolated: If ``subset`` is not closed under precedence.
    """
    chosen = sorted(set(subset))
    if not rs.is_closed(chosen):
        raise PreconditionViolated(f"rotation set {chosen} is not closed under precedence")
    partner: Dict[Agent, Agent] = {}
    for e in rs.base.edges:
        partner[e.u] = e.v
        partner[e.v] = e.u
    for index in chosen:
        for move in rs.rotations[index].moves:
            if partner.get(move.agent) != move.old:
                raise InternalInvariantError(f"rotation {index} is not exposed when applied")
            partner[move.agent] = move.new
        for move in rs.rotations[index].moves:
            partner[move.new] = move.agent
    return Matching.of({Edge(a, b) for a, b in partner.items()})


def iter_closed_subsets(rs: RotationSystem) -> Iterator[FrozenSet[int]]:
    """Every closed set of rotations; exponential in general."""
    count = len(rs.rotations)
    needs = {i: rs.predecessors(i) for i in range(count)}

    def walk(i: int, chosen: FrozenSet[int]) -> Iterator[FrozenSet[int]]:
        if i == count:
            yield chosen
            return
        yield from walk(i + 1, chosen)
        if needs[i] <= chosen:
            yield from walk(i + 1, chosen | {i})

    yield from walk(0, frozenset())


def optimize_exact(
    P: PreferenceSystem, w: EdgeWeights, direction: Direction = Direction.MIN
) -> Union[Optimum, NoStableMatching]:
    """
    Minimum or maximum weight stable matching of a bipartite reducible
    instance.

    Args:
        P: The instance.
        w: Nonnegative edge weights.
        direction: Minimise or maximise.

    Returns:
        The optimum, or ``NoStableMatching``.

    Raises:
        NotReducible: If H is not bipartite.
    """
    if isinstance(find_stable_matching(P), NoStableMatching):
        return NoStableMatching()
    core = perfect_core(P)
    verdict = is_bipartite_reducible(core)
    if not verdict:
        raise NotReducible("H has an odd cycle; use the approximation or brute force")
    h = verdict.reduced.h
    rs = rotation_system(h, verdict.parts[0], w.restricted_to(h))
    sign = 1 if direction == Direction.MIN else -1
    closure = min_weight_closure(
        ClosureInstance({r.index: sign * r.delta for r in rs.rotations}, rs.precedence)
    )
    matching = apply_rotations(rs, closure.subset)
    weight = w.total(matching)
    expected = w.total(rs.base) + sum((rs.rotations[i].delta for i in closure.subset), Fraction(0))
    if weight != expected:
        raise InternalInvariantError(f"rotation deltas give {expected}, matching weighs {weight}")
    check = is_stable(P, matching)
    if not check:
        raise InternalInvariantError(f"optimum {matching} is blocked by {check.witness}")
    log.info(
        "%s weight %s after %d of %d rotation(s)",
        direction.value,
        weight,
        len(closure.subset),
        len(rs.rotations),
    )
    return Optimum(matching, weight)
