"""
Core data model: preference systems, matchings, edge weights and stability.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Tuple, Union

import networkx as nx

from core.exceptions import InvalidInstance, InvalidMatching, UnknownEdge

log = logging.getLogger(__name__)

Agent = int


@dataclass(frozen=True, order=True)
class Edge:
    """An unordered pair of agents, stored with ``u < v``."""

    u: Agent
    v: Agent

    def __post_init__(self):
        if self.u == self.v:
            raise InvalidInstance(f"agent {self.u} cannot be paired with itself")
        if self.u > self.v:
            low, high = self.v, self.u
            object.__setattr__(self, "u", low)
            object.__setattr__(self, "v", high)

    @classmethod
    def of(cls, a: Agent, b: Agent) -> "Edge":
        return cls(a, b)

    @property
    def endpoints(self) -> Tuple[Agent, Agent]:
        return (self.u, self.v)

    def other(self, x: Agent) -> Agent:
        if x == self.u:
            return self.v
        if x == self.v:
            return self.u
        raise ValueError(f"{x} is not an endpoint of {self}")

    def touches(self, x: Agent) -> bool:
        return x == self.u or x == self.v

    def __str__(self) -> str:
        return f"{self.u}-{self.v}"


EdgeLike = Union[Edge, Tuple[Agent, Agent]]


def as_edge(e: EdgeLike) -> Edge:
    return e if isinstance(e, Edge) else Edge(*e)


class Direction(str, Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class NoStableMatching:
    """Result value for instances that admit no stable matching."""

    reason: str = "no stable matching exists"


@dataclass(frozen=True)
class PreferenceSystem:
    """
    Agents with strict, mutually consistent preference lists.

    The edge set is derived from the lists and never stored separately.
    Build instances with :meth:`from_lists`.
    """

    lists: Tuple[Tuple[Agent, Tuple[Agent, ...]], ...]

    @classmethod
    def from_lists(cls, lists: Mapping[Agent, Iterable[Agent]]) -> "PreferenceSystem":
        """
        Validate and freeze per-agent preference lists.

        Args:
            lists: Mapping from agent id to its neighbors, most preferred first.

        Returns:
            The preference system.

        Raises:
            InvalidInstance: If ids are not positive integers, a list repeats a
                neighbor or names its owner, a neighbor is undeclared, or
                acceptability is not mutual.
        """
        frozen: Dict[Agent, Tuple[Agent, ...]] = {}
        for agent, neighbors in lists.items():
            if not isinstance(agent, int) or isinstance(agent, bool) or agent <= 0:
                raise InvalidInstance(f"agent id {agent!r} is not a positive integer")
            seq = tuple(neighbors)
            if len(set(seq)) != len(seq):
                raise InvalidInstance(f"agent {agent} lists a neighbor twice")
            if agent in seq:
                raise InvalidInstance(f"agent {agent} lists itself")
            frozen[agent] = seq
        for agent, seq in frozen.items():
            for other in seq:
                if other not in frozen:
                    raise InvalidInstance(f"agent {agent} lists undeclared agent {other}")
                if agent not in frozen[other]:
                    raise InvalidInstance(
                        f"agent {agent} lists {other} but {other} does not list {agent}"
                    )
        return cls(tuple(sorted(frozen.items())))

    @cached_property
    def _prefs(self) -> Dict[Agent, Tuple[Agent, ...]]:
        return dict(self.lists)

    @cached_property
    def _ranks(self) -> Dict[Agent, Dict[Agent, int]]:
        return {a: {b: i + 1 for i, b in enumerate(seq)} for a, seq in self.lists}

    @cached_property
    def agents(self) -> Tuple[Agent, ...]:
        return tuple(a for a, _ in self.lists)

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        found = {Edge(a, b) for a, seq in self.lists for b in seq}
        return tuple(sorted(found))

    @cached_property
    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self.edges)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, Edge) and e in self.edge_set

    def has_agent(self, v: Agent) -> bool:
        return v in self._prefs

    def neighbors(self, v: Agent) -> Tuple[Agent, ...]:
        return self._prefs[v]

    def degree(self, v: Agent) -> int:
        return len(self._prefs[v])

    def incident(self, v: Agent) -> Tuple[Edge, ...]:
        return tuple(Edge(v, u) for u in self._prefs[v])

    def rank(self, u: Agent, v: Agent) -> int:
        try:
            return self._ranks[u][v]
        except KeyError:
            raise UnknownEdge(u, v) from None

    def prefers(self, v: Agent, a: Agent, b: Agent) -> bool:
        """True iff ``v`` strictly prefers ``a`` to ``b``."""
        return self.rank(v, a) < self.rank(v, b)

    def first(self, v: Agent) -> Optional[Agent]:
        seq = self._prefs[v]
        return seq[0] if seq else None

    def last(self, v: Agent) -> Optional[Agent]:
        seq = self._prefs[v]
        return seq[-1] if seq else None

    def require_edge(self, e: EdgeLike) -> Edge:
        edge = as_edge(e)
        if edge not in self.edge_set:
            raise UnknownEdge(edge.u, edge.v)
        return edge

    def keep_edges(self, keep: Iterable[EdgeLike]) -> "PreferenceSystem":
        """Same agents, lists restricted to ``keep`` (order preserved)."""
        kept = {as_edge(e) for e in keep}
        return PreferenceSystem(
            tuple((a, tuple(b for b in seq if Edge(a, b) in kept)) for a, seq in self.lists)
        )

    def without_edges(self, drop: Iterable[EdgeLike]) -> "PreferenceSystem":
        dropped = {as_edge(e) for e in drop}
        return PreferenceSystem(
            tuple((a, tuple(b for b in seq if Edge(a, b) not in dropped)) for a, seq in self.lists)
        )

    def restricted_to(self, vertices: Iterable[Agent]) -> "PreferenceSystem":
        """The induced sub-instance on ``vertices``."""
        keep = set(vertices)
        return PreferenceSystem(
            tuple((a, tuple(b for b in seq if b in keep)) for a, seq in self.lists if a in keep)
        )

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.agents)
        g.add_edges_from(e.endpoints for e in self.edges)
        return g

    def is_bipartite(self) -> bool:
        return nx.is_bipartite(self.graph())

    def has_first_last_duality(self) -> bool:
        """Check ``u = first(v)`` iff ``v = last(u)`` over every edge."""
        for e in self.edges:
            for a, b in (e.endpoints, e.endpoints[::-1]):
                if (self.first(b) == a) != (self.last(a) == b):
                    return False
        return True


@dataclass(frozen=True)
class Matching:
    """A set of pairwise vertex-disjoint edges."""

    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        seen = set()
        for e in self.edges:
            if e.u in seen or e.v in seen:
                raise InvalidMatching(f"edges are not vertex-disjoint at {e}")
            seen.update(e.endpoints)
        object.__setattr__(self, "_partner", _partner_map(self.edges))

    @classmethod
    def of(cls, edges: Iterable[EdgeLike]) -> "Matching":
        return cls(frozenset(as_edge(e) for e in edges))

    def partner(self, v: Agent) -> Agent:
        """Matched partner of ``v``, or ``v`` itself when unmatched."""
        return self._partner.get(v, v)

    def is_matched(self, v: Agent) -> bool:
        return v in self._partner

    @property
    def vertices(self) -> FrozenSet[Agent]:
        return frozenset(self._partner)

    def is_perfect_on(self, vertices: Iterable[Agent]) -> bool:
        return self.vertices == frozenset(vertices)

    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    def __contains__(self, e: object) -> bool:
        return e in self.edges

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.sorted_edges())

    def __len__(self) -> int:
        return len(self.edges)

    def __str__(self) -> str:
        return "{" + ", ".join(str(e) for e in self.sorted_edges()) + "}"


def _partner_map(edges: Iterable[Edge]) -> Dict[Agent, Agent]:
    partner = {}
    for e in edges:
        partner[e.u] = e.v
        partner[e.v] = e.u
    return partner


def validate_matching(P: PreferenceSystem, M: Matching) -> None:
    for e in M.edges:
        if e not in P.edge_set:
            raise InvalidMatching(f"{e} is not an edge of the instance")


@dataclass(frozen=True)
class EdgeWeights:
    """
    Nonnegative rational weight per edge.

    Edges without an explicit weight read as 0; ``defaulted`` lists the
    edges that were filled in that way by :meth:`for_instance`.
    """

    weights: Mapping[Edge, Fraction] = field(default_factory=dict)
    defaulted: FrozenSet[Edge] = frozenset()

    @classmethod
    def for_instance(
        cls, P: PreferenceSystem, mapping: Mapping[EdgeLike, Union[int, Fraction, str]]
    ) -> "EdgeWeights":
        """
        Validate a weight map against an instance.

        Args:
            P: The instance the weights belong to.
            mapping: Edge to weight; values may be ints, Fractions or strings
                such as ``"3/4"`` or ``"1.5"``.

        Returns:
            Weights over every edge of ``P``.

        Raises:
            UnknownEdge: If a keyed edge is not in ``P``.
            InvalidInstance: If a weight is negative.
        """
        weights: Dict[Edge, Fraction] = {}
        for key, value in mapping.items():
            e = P.require_edge(key)
            weight = Fraction(value)
            if weight < 0:
                raise InvalidInstance(f"weight of {e} is negative")
            weights[e] = weight
        missing = frozenset(e for e in P.edges if e not in weights)
        if missing:
            log.warning(
                "%d edge(s) without weight default to 0: %s",
                len(missing),
                " ".join(str(e) for e in sorted(missing)),
            )
            for e in missing:
                weights[e] = Fraction(0)
        return cls(weights, missing)

    @classmethod
    def egalitarian(cls, P: PreferenceSystem) -> "EdgeWeights":
        """w(uv) = rank_u(v) + rank_v(u)."""
        return cls({e: Fraction(P.rank(e.u, e.v) + P.rank(e.v, e.u)) for e in P.edges})

    @classmethod
    def uniform(cls, P: PreferenceSystem, value: Union[int, Fraction] = 1) -> "EdgeWeights":
        return cls({e: Fraction(value) for e in P.edges})

    def __getitem__(self, e: EdgeLike) -> Fraction:
        return self.weights.get(as_edge(e), Fraction(0))

    def total(self, M: Union[Matching, Iterable[Edge]]) -> Fraction:
        edges = M.edges if isinstance(M, Matching) else M
        return sum((self[e] for e in edges), Fraction(0))

    def restricted_to(self, P: PreferenceSystem) -> "EdgeWeights":
        return EdgeWeights({e: self[e] for e in P.edges})


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    witness: Optional[Edge] = None

    def __bool__(self) -> bool:
        return self.stable


def rank_of(P: PreferenceSystem, u: Agent, v: Agent) -> int:
    """1-based position of ``v`` in ``u``'s list."""
    return P.rank(u, v)


def phi(P: PreferenceSystem, e: EdgeLike) -> FrozenSet[Edge]:
    """
    Edges dominating ``e`` at one of its endpoints, together with ``e``.

    Raises:
        UnknownEdge: If ``e`` is not in ``P``.
    """
    edge = P.require_edge(e)
    dominating = {edge}
    for x in edge.endpoints:
        y = edge.other(x)
        for z in P.neighbors(x):
            if z == y:
                break
            dominating.add(Edge(x, z))
    return frozenset(dominating)


def _wants(P: PreferenceSystem, M: Matching, x: Agent, y: Agent) -> bool:
    current = M.partner(x)
    return current == x or P.prefers(x, y, current)


def is_blocking(P: PreferenceSystem, M: Matching, e: EdgeLike) -> bool:
    """
    Whether ``e`` blocks ``M``: both endpoints are unmatched or strictly
    prefer each other to their partners.
    """
    edge = P.require_edge(e)
    if edge in M.edges:
        return False
    return _wants(P, M, edge.u, edge.v) and _wants(P, M, edge.v, edge.u)


def is_stable(P: PreferenceSystem, M: Matching) -> StabilityVerdict:
    """
    Check ``M`` for blocking edges.

    Returns:
        A verdict whose witness is the smallest blocking edge when unstable.

    Raises:
        InvalidMatching: If ``M`` uses an edge outside ``P``.
    """
    validate_matching(P, M)
    for e in P.edges:
        if is_blocking(P, M, e):
            return StabilityVerdict(False, e)
    return StabilityVerdict(True)
