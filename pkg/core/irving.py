"""
Irving's two-phase algorithm for stable roommates with incomplete lists,
the matched/unmatched vertex partition and the perfect-core reduction.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from core.exceptions import InternalInvariantError
from core.model import Agent, Edge, Matching, NoStableMatching, PreferenceSystem, is_stable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseOneResult:
    """G_I and the edges phase one deleted, in deletion order."""

    surviving: PreferenceSystem
    removed: Tuple[Edge, ...]


@dataclass(frozen=True)
class VertexPartition:
    v0: FrozenSet[Agent]
    v1: FrozenSet[Agent]


class PreferenceTable:
    """Mutable working copy of the preference lists."""

    def __init__(self, P: PreferenceSystem):
        self.rank = {a: {b: P.rank(a, b) for b in P.neighbors(a)} for a in P.agents}
        self.lists: Dict[Agent, List[Agent]] = {a: list(P.neighbors(a)) for a in P.agents}
        self.removed: List[Edge] = []

    def first(self, a: Agent) -> Optional[Agent]:
        seq = self.lists[a]
        return seq[0] if seq else None

    def second(self, a: Agent) -> Optional[Agent]:
        seq = self.lists[a]
        return seq[1] if len(seq) > 1 else None

    def last(self, a: Agent) -> Optional[Agent]:
        seq = self.lists[a]
        return seq[-1] if seq else None

    def delete_pair(self, a: Agent, b: Agent) -> None:
        self.lists[a].remove(b)
        self.lists[b].remove(a)
        self.removed.append(Edge(a, b))

    def successors(self, a: Agent, b: Agent) -> List[Agent]:
        """Entries after ``b`` in ``a``'s current list."""
        seq = self.lists[a]
        return seq[seq.index(b) + 1:]

    def to_system(self) -> PreferenceSystem:
        return PreferenceSystem(tuple((a, tuple(seq)) for a, seq in sorted(self.lists.items())))


def _run_phase_one(P: PreferenceSystem, order: Optional[Sequence[Agent]] = None) -> PreferenceTable:
    table = PreferenceTable(P)
    target: Dict[Agent, Agent] = {}
    free = deque(P.agents if order is None else order)
    while free:
        x = free.popleft()
        y = table.first(x)
        if y is None:
            log.debug("agent %d exhausted in phase one", x)
            continue
        target[x] = y
        for z in table.successors(y, x):
            table.delete_pair(y, z)
            for a, b in ((z, y), (y, z)):
                if target.get(a) == b:
                    del target[a]
                    free.append(a)
    return table


def phase_one(P: PreferenceSystem, order: Optional[Sequence[Agent]] = None) -> PhaseOneResult:
    """
    Proposal/rejection sequence of Irving's algorithm.

    Args:
        P: The instance.
        order: Initial queue of free agents; ascending ids when omitted. The
            surviving subgraph does not depend on it.

    Returns:
        The surviving instance G_I and the removed edges.
    """
    table = _run_phase_one(P, order)
    return PhaseOneResult(table.to_system(), tuple(table.removed))


def _find_rotation(table: PreferenceTable, start: Agent) -> List[Tuple[Agent, Agent]]:
    """Walk p -> last(second(p)) from ``start`` until it cycles."""
    seen: Dict[Agent, int] = {}
    path: List[Agent] = []
    p = start
    while p not in seen:
        seen[p] = len(path)
        path.append(p)
        q = table.second(p)
        if q is None:
            raise InternalInvariantError(f"agent {p} has no second choice during phase two")
        p = table.last(q)
    cycle = path[seen[p]:]
    return [(x, table.first(x)) for x in cycle]


def _eliminate(table: PreferenceTable, rotation: List[Tuple[Agent, Agent]]) -> None:
    seconds = [table.second(x) for x, _ in rotation]
    for (x, _), y_next in zip(rotation, seconds):
        # an odd rotation may already have taken x off y_next's list
        if x not in table.lists[y_next]:
            continue
        for z in table.successors(y_next, x):
            table.delete_pair(y_next, z)


def find_stable_matching(P: PreferenceSystem) -> Union[Matching, NoStableMatching]:
    """
    Irving's algorithm: phase one, then rotation elimination.

    Returns:
        A stable matching, or ``NoStableMatching`` when none exists.
    """
    table = _run_phase_one(P)
    active = [a for a in P.agents if table.lists[a]]
    while True:
        if any(not table.lists[a] for a in active):
            return NoStableMatching("a preference list became empty in phase two")
        start = next((a for a in active if len(table.lists[a]) > 1), None)
        if start is None:
            break
        rotation = _find_rotation(table, start)
        log.debug("eliminating rotation %s", rotation)
        _eliminate(table, rotation)
    matching = Matching.of((a, table.first(a)) for a in active if a < table.first(a))
    verdict = is_stable(P, matching)
    if not verdict:
        raise InternalInvariantError(f"Irving produced an unstable matching, blocked by {verdict.witness}")
    return matching


def partition_matched(P: PreferenceSystem) -> Union[VertexPartition, NoStableMatching]:
    """Split agents into those matched in every stable matching and the rest."""
    found = find_stable_matching(P)
    if isinstance(found, NoStableMatching):
        return found
    v1 = found.vertices
    return VertexPartition(frozenset(P.agents) - v1, v1)


def perfect_core(P: PreferenceSystem) -> Union[PreferenceSystem, NoStableMatching]:
    """
    Reduce to an instance whose stable matchings are exactly the stable
    matchings of ``P`` and are all perfect.

    Drops the never-matched agents, and every edge at which an endpoint
    would prefer one of those agents to the other endpoint.
    """
    partition = partition_matched(P)
    if isinstance(partition, NoStableMatching):
        return partition
    if not partition.v0:
        return P
    kept = []
    for e in P.edges:
        if e.u in partition.v0 or e.v in partition.v0:
            continue
        if _beats_all_unmatched(P, e.u, e.v, partition.v0) and _beats_all_unmatched(
            P, e.v, e.u, partition.v0
        ):
            kept.append(e)
    core = P.keep_edges(kept).restricted_to(partition.v1)
    log.debug("perfect core drops agents %s and keeps %d edge(s)", sorted(partition.v0), len(kept))
    return core


def _beats_all_unmatched(P: PreferenceSystem, u: Agent, v: Agent, v0: Iterable[Agent]) -> bool:
    v0 = set(v0)
    return all(P.prefers(u, v, w) for w in P.neighbors(u) if w in v0)
