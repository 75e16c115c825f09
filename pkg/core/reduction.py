"""
Canonical reduction of a perfect-core instance.

Computes E_M (edges contained in some stable matching), deletes redundant
worst edges until the canonical subgraph H remains, and decides bipartite
reducibility from H.
"""
import logging
import random
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from config import CROSS_CHECK_ORACLE, ORACLE_MAX_AGENTS
from core.exceptions import EdgeInEM, NotPerfectCore, PreconditionViolated
from core.irving import find_stable_matching, phase_one
from core.model import Agent, Edge, EdgeLike, Matching, NoStableMatching, PreferenceSystem
from core.oracle import enumerate_stable_matchings

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeClassification:
    in_em: FrozenSet[Edge]
    out_em: FrozenSet[Edge]


@dataclass(frozen=True)
class ReducedInstance:
    """H, the deletions that produced it, and the E_M split it was built from."""

    h: PreferenceSystem
    removal_log: Tuple[Edge, ...]
    em: EdgeClassification


@dataclass(frozen=True)
class ReducibilityVerdict:
    reducible: bool
    reduced: ReducedInstance
    parts: Optional[Tuple[FrozenSet[Agent], FrozenSet[Agent]]]
    gi_bipartite: bool

    def __bool__(self) -> bool:
        return self.reducible


def require_perfect_core(P: PreferenceSystem) -> Matching:
    """
    Return a stable matching of ``P`` after checking it is perfect.

    Raises:
        NotPerfectCore: If ``P`` has no stable matching or its stable
            matchings leave agents unmatched.
    """
    found = find_stable_matching(P)
    if isinstance(found, NoStableMatching):
        raise NotPerfectCore("instance has no stable matching")
    if not found.is_perfect_on(P.agents):
        unmatched = sorted(set(P.agents) - found.vertices)
        raise NotPerfectCore(f"agents {unmatched} are unmatched in every stable matching")
    return found


def _forced_surgery(P: PreferenceSystem, forced: FrozenSet[Edge]) -> Optional[PreferenceSystem]:
    """
    Sub-instance whose perfect stable matchings extend ``forced`` to perfect
    stable matchings of ``P``.

    Removes the endpoints of ``forced`` and, for every forced edge xz, each
    edge wy with xw in E, w preferred by x to z, and x preferred by w to y.
    Returns None when an edge between two forced endpoints already blocks.
    """
    mate = {}
    for f in forced:
        mate[f.u] = f.v
        mate[f.v] = f.u
    for x, z in mate.items():
        for y in P.neighbors(x):
            if y in mate and y != z and P.prefers(x, y, z) and P.prefers(y, x, mate[y]):
                return None
    dropped: Set[Edge] = set()
    for x, z in mate.items():
        for w in P.neighbors(x):
            if w == z:
                break
            if w in mate:
                continue
            beyond = P.neighbors(w)[P.rank(w, x):]
            dropped.update(Edge(w, y) for y in beyond if y not in mate)
    rest = [a for a in P.agents if a not in mate]
    return P.restricted_to(rest).without_edges(dropped)


def extends_to_perfect_stable(
    P: PreferenceSystem,
    F: Iterable[EdgeLike],
    *,
    cross_check: bool = CROSS_CHECK_ORACLE,
) -> bool:
    """
    Whether some perfect stable matching of ``P`` contains every edge of ``F``.

    Args:
        P: The instance.
        F: Pairwise disjoint edges of ``P``.
        cross_check: Compare against the oracle when the instance is small
            enough; the oracle answer is returned on disagreement.

    Returns:
        True iff such a matching exists.
    """
    forced = Matching.of(P.require_edge(e) for e in F).edges
    reduced = _forced_surgery(P, forced)
    if reduced is None:
        answer = False
    else:
        found = find_stable_matching(reduced)
        answer = not isinstance(found, NoStableMatching) and found.is_perfect_on(reduced.agents)
    if cross_check and len(P.agents) <= ORACLE_MAX_AGENTS:
        expected = any(
            forced <= m.edges and m.is_perfect_on(P.agents)
            for m in enumerate_stable_matchings(P)
        )
        if expected != answer:
            log.error(
                "forced-edge surgery disagrees with oracle on %s: surgery=%s oracle=%s",
                sorted(str(e) for e in forced),
                answer,
                expected,
            )
            return expected
    return answer


def edge_in_some_stable(P: PreferenceSystem, e: EdgeLike) -> bool:
    """
    Whether ``e`` lies in some stable matching of a perfect-core instance.

    Raises:
        UnknownEdge: If ``e`` is not in ``P``.
        NotPerfectCore: If ``P`` is not in perfect-core form.
    """
    edge = P.require_edge(e)
    require_perfect_core(P)
    return extends_to_perfect_stable(P, [edge])


def compute_em(P: PreferenceSystem) -> EdgeClassification:
    """Classify every edge of a perfect-core instance as in or out of E_M."""
    require_perfect_core(P)
    inside = frozenset(e for e in P.edges if extends_to_perfect_stable(P, [e]))
    return EdgeClassification(inside, P.edge_set - inside)


def is_worst_redundant(P: PreferenceSystem, e: EdgeLike, em: FrozenSet[Edge]) -> bool:
    """``e`` is outside E_M and the least preferred remaining edge of an endpoint."""
    edge = P.require_edge(e)
    if edge in em:
        return False
    return P.last(edge.u) == edge.v or P.last(edge.v) == edge.u


def reduce_to_h(
    P: PreferenceSystem,
    rng: Optional[random.Random] = None,
    em: Optional[EdgeClassification] = None,
) -> ReducedInstance:
    """
    Delete redundant worst edges until none is left.

    Args:
        P: A perfect-core instance.
        rng: When given, the next deletion is drawn at random among the
            eligible edges; otherwise the smallest eligible edge goes first.
        em: A precomputed E_M classification of ``P``.

    Returns:
        The reduced instance H with its removal log.
    """
    em = em or compute_em(P)
    current = P
    removals: List[Edge] = []
    while True:
        eligible = [e for e in current.edges if is_worst_redundant(current, e, em.in_em)]
        if not eligible:
            break
        pick = rng.choice(eligible) if rng is not None else eligible[0]
        current = current.without_edges([pick])
        removals.append(pick)
    log.debug("H keeps %d of %d edge(s)", len(current.edges), len(P.edges))
    return ReducedInstance(current, tuple(removals), em)


def replay_removals(
    P: PreferenceSystem, removals: Iterable[EdgeLike], em: Optional[EdgeClassification] = None
) -> PreferenceSystem:
    """
    Apply a caller-supplied deletion sequence, checking every step.

    Raises:
        PreconditionViolated: If some edge is not eligible when its turn comes.
    """
    em = em or compute_em(P)
    current = P
    for step, e in enumerate(removals, start=1):
        edge = current.require_edge(e)
        if not is_worst_redundant(current, edge, em.in_em):
            raise PreconditionViolated(f"step {step}: {edge} cannot be deleted")
        current = current.without_edges([edge])
    return current


def removal_preserves(
    P: PreferenceSystem, e: EdgeLike, em: Optional[EdgeClassification] = None
) -> bool:
    """
    Whether deleting ``e`` keeps the stable set of ``P`` unchanged.

    A new stable matching of ``P - e`` must pair both endpoints of ``e``
    below ``e`` in their lists, so each disjoint pair of such edges is
    tested for extension to a perfect stable matching.

    Raises:
        EdgeInEM: If ``e`` belongs to E_M.
    """
    edge = P.require_edge(e)
    em = em or compute_em(P)
    if edge in em.in_em:
        raise EdgeInEM(f"{edge} lies in a stable matching")
    u, v = edge.endpoints
    rest = P.without_edges([edge])
    below_u = P.neighbors(u)[P.rank(u, v):]
    below_v = P.neighbors(v)[P.rank(v, u):]
    for a in below_u:
        for b in below_v:
            if a == b:
                continue
            if extends_to_perfect_stable(rest, [Edge(u, a), Edge(v, b)]):
                log.debug("deleting %s admits a stable matching with %d-%d and %d-%d", edge, u, a, v, b)
                return False
    return True


def _canonical_parts(g: nx.Graph) -> Tuple[FrozenSet[Agent], FrozenSet[Agent]]:
    """Two-colouring with each component's smallest agent on the first side."""
    first: Set[Agent] = set()
    second: Set[Agent] = set()
    for component in nx.connected_components(g):
        colour = nx.bipartite.color(g.subgraph(component))
        anchor = colour[min(component)]
        for node, c in colour.items():
            (first if c == anchor else second).add(node)
    return frozenset(first), frozenset(second)


def is_bipartite_reducible(
    P: PreferenceSystem, reduced: Optional[ReducedInstance] = None
) -> ReducibilityVerdict:
    """
    Decide bipartite reducibility by two-colouring H.

    The verdict also reports whether G_I is bipartite, which is the weaker
    integrality condition for the unrestricted polytope.
    """
    reduced = reduced or reduce_to_h(P)
    gi_bipartite = phase_one(P).surviving.is_bipartite()
    g = reduced.h.graph()
    if not nx.is_bipartite(g):
        return ReducibilityVerdict(False, reduced, None, gi_bipartite)
    return ReducibilityVerdict(True, reduced, _canonical_parts(g), gi_bipartite)
