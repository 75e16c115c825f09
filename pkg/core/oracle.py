"""
Brute-force ground truth at desk scale.

Everything here is exponential on purpose and bounded by
``config.ORACLE_MAX_AGENTS``.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, Union

from config import ORACLE_MAX_AGENTS
from core.exceptions import InstanceTooLarge
from core.model import (
    Agent,
    Direction,
    Edge,
    EdgeLike,
    EdgeWeights,
    Matching,
    NoStableMatching,
    PreferenceSystem,
    is_stable,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StableSet:
    """The stable matchings of an instance."""

    matchings: FrozenSet[Matching]

    def __len__(self) -> int:
        return len(self.matchings)

    def __iter__(self) -> Iterator[Matching]:
        return iter(self.sorted())

    def __contains__(self, M: object) -> bool:
        return M in self.matchings

    def is_empty(self) -> bool:
        return not self.matchings

    def sorted(self) -> List[Matching]:
        return sorted(self.matchings, key=lambda m: m.sorted_edges())

    def union_edges(self) -> FrozenSet[Edge]:
        return frozenset(e for m in self.matchings for e in m.edges)


def _check_size(P: PreferenceSystem, max_agents: int) -> None:
    if len(P.agents) > max_agents:
        raise InstanceTooLarge(len(P.agents), max_agents)


def _walk_stable(P: PreferenceSystem) -> Iterator[Matching]:
    """
    Depth-first search over all matchings, smallest undecided agent first.

    An agent is decided once it is either left single or paired. Any edge
    whose endpoints are both decided is final, so a blocking edge between
    decided agents prunes the branch.
    """
    order = P.agents
    partner: Dict[Agent, Optional[Agent]] = {}

    def wants(x: Agent, y: Agent) -> bool:
        current = partner[x]
        return current is None or P.prefers(x, y, current)

    def consistent(x: Agent) -> bool:
        for y in P.neighbors(x):
            if y in partner and partner[x] != y and wants(x, y) and wants(y, x):
                return False
        return True

    def walk(i: int) -> Iterator[Matching]:
        while i < len(order) and order[i] in partner:
            i += 1
        if i == len(order):
            yield Matching.of((a, b) for a, b in partner.items() if b is not None and a < b)
            return
        v = order[i]
        partner[v] = None
        if consistent(v):
            yield from walk(i + 1)
        del partner[v]
        for u in P.neighbors(v):
            if u in partner:
                continue
            partner[v] = u
            partner[u] = v
            if consistent(v) and consistent(u):
                yield from walk(i + 1)
            del partner[u]
            del partner[v]

    yield from walk(0)


def enumerate_stable_matchings(
    P: PreferenceSystem, *, max_agents: int = ORACLE_MAX_AGENTS
) -> StableSet:
    """
    All stable matchings of ``P``.

    Args:
        P: The instance.
        max_agents: Size bound for the exhaustive search.

    Returns:
        The stable set, possibly empty.

    Raises:
        InstanceTooLarge: If ``P`` has more than ``max_agents`` agents.
    """
    _check_size(P, max_agents)
    found = frozenset(m for m in _walk_stable(P) if is_stable(P, m))
    log.debug("oracle found %d stable matching(s) on %d agents", len(found), len(P.agents))
    return StableSet(found)


def extends_to_stable(
    P: PreferenceSystem, F: Iterable[EdgeLike], *, max_agents: int = ORACLE_MAX_AGENTS
) -> bool:
    """Whether some stable matching contains every edge of ``F``."""
    forced = frozenset(P.require_edge(e) for e in F)
    Matching(forced)  # disjointness
    return any(forced <= m.edges for m in enumerate_stable_matchings(P, max_agents=max_agents))


def brute_optimum(
    P: PreferenceSystem,
    w: EdgeWeights,
    direction: Direction = Direction.MIN,
    *,
    max_agents: int = ORACLE_MAX_AGENTS,
) -> Union[Tuple[Matching, Fraction], NoStableMatching]:
    """
    A stable matching of extreme weight, ties broken by canonical edge order.

    Returns:
        ``(matching, weight)`` or ``NoStableMatching``.
    """
    stable = enumerate_stable_matchings(P, max_agents=max_agents)
    if stable.is_empty():
        return NoStableMatching()
    sign = 1 if direction == Direction.MIN else -1
    best = min(stable.matchings, key=lambda m: (sign * w.total(m), m.sorted_edges()))
    return best, w.total(best)
