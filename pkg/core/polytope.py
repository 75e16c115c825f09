"""
Fractional stable matching polytopes in exact rational arithmetic.

Three variants are supported: the full polytope over E, the same polytope
with every coordinate outside E_M pinned to zero, and its projection onto
the E_M coordinates.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx

from config import ORACLE_MAX_AGENTS
from core.exceptions import (
    BadPartition,
    DomainMismatch,
    EdgeInEM,
    InstanceTooLarge,
    InternalInvariantError,
    InvalidMatching,
    NotBipartite,
    NotSemiStable,
    PreconditionViolated,
)
from core.model import Agent, Edge, EdgeLike, Matching, PreferenceSystem, as_edge, is_stable, phi
from core.reduction import ReducedInstance, ReducibilityVerdict, compute_em, is_bipartite_reducible, reduce_to_h

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)
Rational = Union[int, Fraction, str]


class PolytopeVariant(str, Enum):
    FSM = "fsm"
    FSM_PRIME = "fsm-prime"
    FSM_BAR = "fsm-bar"


@dataclass(frozen=True)
class FractionalPoint:
    """Exact rational vector over ``domain``; only nonzero entries are stored."""

    coords: FrozenSet[Tuple[Edge, Fraction]]
    domain: FrozenSet[Edge]

    @classmethod
    def of(cls, domain: Iterable[EdgeLike], values: Mapping[EdgeLike, Rational]) -> "FractionalPoint":
        dom = frozenset(as_edge(e) for e in domain)
        entries: Dict[Edge, Fraction] = {}
        for key, value in values.items():
            e = as_edge(key)
            if e not in dom:
                raise DomainMismatch(f"coordinate {e} is outside the point's domain")
            q = Fraction(value)
            if q:
                entries[e] = q
        return cls(frozenset(entries.items()), dom)

    @cached_property
    def values(self) -> Dict[Edge, Fraction]:
        return dict(self.coords)

    def value(self, e: EdgeLike) -> Fraction:
        return self.values.get(as_edge(e), Fraction(0))

    def support(self) -> FrozenSet[Edge]:
        return frozenset(self.values)

    def is_integral(self) -> bool:
        return all(q.denominator == 1 for q in self.values.values())


@dataclass(frozen=True)
class Violation:
    kind: str  # nonnegativity | matching | stability | zero
    index: Union[Edge, Agent]

    def __str__(self) -> str:
        return f"{self.kind}[{self.index}]"


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    violations: Tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.member


@dataclass(frozen=True)
class SemiStablePartition:
    """Single edges and cyclic-preference cycles, stored canonically."""

    singles: FrozenSet[Edge]
    cycles: FrozenSet[Tuple[Agent, ...]]

    @classmethod
    def of(
        cls, singles: Iterable[EdgeLike] = (), cycles: Iterable[Iterable[Agent]] = ()
    ) -> "SemiStablePartition":
        return cls(
            frozenset(as_edge(e) for e in singles),
            frozenset(canonical_cycle(c) for c in cycles),
        )

    @property
    def edges(self) -> FrozenSet[Edge]:
        found = set(self.singles)
        for cycle in self.cycles:
            found.update(cycle_edges(cycle))
        return frozenset(found)

    @property
    def vertices(self) -> FrozenSet[Agent]:
        found = {a for e in self.singles for a in e.endpoints}
        for cycle in self.cycles:
            found.update(cycle)
        return frozenset(found)

    def point(self, domain: Iterable[EdgeLike]) -> FractionalPoint:
        values: Dict[Edge, Fraction] = {e: Fraction(1) for e in self.singles}
        for cycle in self.cycles:
            values.update((e, HALF) for e in cycle_edges(cycle))
        return FractionalPoint.of(domain, values)


@dataclass(frozen=True)
class HcGraph:
    edges: FrozenSet[Edge]
    vertices: FrozenSet[Agent]
    bipartite: bool

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(e.endpoints for e in self.edges)
        return g


def canonical_cycle(cycle: Iterable[Agent]) -> Tuple[Agent, ...]:
    """Rotate to the smallest agent, then walk towards its smaller neighbor."""
    seq = list(cycle)
    if len(seq) < 3 or len(set(seq)) != len(seq):
        raise BadPartition(f"{seq} is not a cycle")
    i = seq.index(min(seq))
    seq = seq[i:] + seq[:i]
    if seq[1] > seq[-1]:
        seq = [seq[0]] + seq[:0:-1]
    return tuple(seq)


def cycle_edges(cycle: Tuple[Agent, ...]) -> Tuple[Edge, ...]:
    k = len(cycle)
    return tuple(Edge(cycle[i], cycle[(i + 1) % k]) for i in range(k))


def has_cyclic_preferences(P: PreferenceSystem, cycle: Tuple[Agent, ...]) -> bool:
    """Every agent prefers its successor, or every agent prefers its predecessor."""
    k = len(cycle)
    forward = [P.prefers(cycle[i], cycle[(i + 1) % k], cycle[i - 1]) for i in range(k)]
    return all(forward) or not any(forward)


def _domain(P: PreferenceSystem, variant: PolytopeVariant, em: Optional[FrozenSet[Edge]]) -> FrozenSet[Edge]:
    return em if variant == PolytopeVariant.FSM_BAR else P.edge_set


def _resolve_em(
    P: PreferenceSystem, variant: PolytopeVariant, em: Optional[FrozenSet[Edge]]
) -> Optional[FrozenSet[Edge]]:
    if em is None and variant != PolytopeVariant.FSM:
        em = compute_em(P).in_em
    return em


def membership(
    P: PreferenceSystem,
    variant: PolytopeVariant,
    x: FractionalPoint,
    em: Optional[FrozenSet[Edge]] = None,
) -> MembershipVerdict:
    """
    Evaluate every constraint of a polytope variant at ``x``.

    Args:
        P: The instance.
        variant: Which polytope.
        x: The point; its domain must be E, or E_M for the projected variant.
        em: E_M, computed on demand for the restricted variants.

    Returns:
        The verdict with violations grouped by kind, each kind in canonical order.

    Raises:
        DomainMismatch: If ``x`` is indexed by the wrong edge set.
    """
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    domain = _domain(P, variant, em)
    if x.domain != domain:
        raise DomainMismatch(
            f"{variant.value} expects coordinates over {len(domain)} edge(s), got {len(x.domain)}"
        )
    violations: List[Violation] = []
    for e in sorted(domain):
        if x.value(e) < 0:
            violations.append(Violation("nonnegativity", e))
    for v in P.agents:
        if sum((x.value(e) for e in P.incident(v) if e in domain), Fraction(0)) > 1:
            violations.append(Violation("matching", v))
    for e in P.edges:
        if sum((x.value(f) for f in phi(P, e) if f in domain), Fraction(0)) < 1:
            violations.append(Violation("stability", e))
    if variant == PolytopeVariant.FSM_PRIME:
        for e in sorted(P.edge_set - em):
            if x.value(e) != 0:
                violations.append(Violation("zero", e))
    return MembershipVerdict(not violations, tuple(violations))


def point_from_matching(
    P: PreferenceSystem, M: Matching, variant: PolytopeVariant, em: Optional[FrozenSet[Edge]] = None
) -> FractionalPoint:
    """Incidence vector of ``M`` over the variant's domain."""
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    return FractionalPoint.of(_domain(P, variant, em), {e: 1 for e in M.edges})


def _check_structure(P: PreferenceSystem, C: SemiStablePartition, allowed: FrozenSet[Edge]) -> None:
    seen: Dict[Agent, str] = {}

    def claim(a: Agent, owner: str) -> None:
        if a in seen:
            raise BadPartition(f"agent {a} appears in both {seen[a]} and {owner}")
        seen[a] = owner

    for e in sorted(C.singles):
        if e not in allowed:
            raise BadPartition(f"single edge {e} is not an admissible edge")
        claim(e.u, str(e))
        claim(e.v, str(e))
    for cycle in sorted(C.cycles):
        for e in cycle_edges(cycle):
            if e not in allowed:
                raise BadPartition(f"cycle {cycle} uses {e}, which is not an admissible edge")
        if not has_cyclic_preferences(P, cycle):
            raise BadPartition(f"cycle {cycle} does not have cyclic preferences")
        for a in cycle:
            claim(a, f"cycle {cycle}")
    missing = sorted(set(P.agents) - set(seen))
    if missing:
        raise BadPartition(f"agents {missing} are not covered")


def semistable_feasible(
    P: PreferenceSystem,
    C: SemiStablePartition,
    variant: PolytopeVariant,
    em: Optional[FrozenSet[Edge]] = None,
) -> bool:
    """
    Whether the {0, 1/2, 1} point induced by ``C`` lies in the polytope.

    Raises:
        BadPartition: If ``C`` does not cover the agents exactly once, or a
            cycle lacks cyclic preferences or leaves the admissible edges.
    """
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    domain = _domain(P, variant, em)
    _check_structure(P, C, domain)
    return membership(P, variant, C.point(domain), em).member


def _check_size(P: PreferenceSystem, max_agents: int) -> None:
    if len(P.agents) > max_agents:
        raise InstanceTooLarge(len(P.agents), max_agents)


def enumerate_semistable(
    P: PreferenceSystem,
    variant: PolytopeVariant,
    em: Optional[FrozenSet[Edge]] = None,
    *,
    max_agents: int = ORACLE_MAX_AGENTS,
) -> FrozenSet[SemiStablePartition]:
    """
    All semi-stable partitions of ``P`` with respect to a variant.

    The search covers the smallest uncovered agent either with a single edge
    or with a cycle on which it is the smallest agent; cycle orientation is
    checked while the path grows.
    """
    _check_size(P, max_agents)
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    domain = _domain(P, variant, em)
    adjacent = {a: [b for b in P.neighbors(a) if Edge(a, b) in domain] for a in P.agents}
    covered: set = set()
    singles: List[Edge] = []
    cycles: List[Tuple[Agent, ...]] = []
    found = set()

    def cover() -> None:
        v = next((a for a in P.agents if a not in covered), None)
        if v is None:
            candidate = SemiStablePartition.of(singles, cycles)
            if membership(P, variant, candidate.point(domain), em).member:
                found.add(candidate)
            return
        covered.add(v)
        for u in adjacent[v]:
            if u not in covered:
                covered.add(u)
                singles.append(Edge(v, u))
                cover()
                singles.pop()
                covered.discard(u)
        grow([v], [])
        covered.discard(v)

    def grow(path: List[Agent], signs: List[bool]) -> None:
        start, tail = path[0], path[-1]
        for u in adjacent[tail]:
            if u == start:
                if len(path) < 3 or path[1] > path[-1]:
                    continue
                closing = P.prefers(tail, start, path[-2])
                opening = P.prefers(start, path[1], tail)
                if closing == signs[0] and opening == signs[0]:
                    cycles.append(tuple(path))
                    cover()
                    cycles.pop()
            elif u not in covered and u > start:
                if len(path) >= 2:
                    sign = P.prefers(tail, u, path[-2])
                    if signs and sign != signs[0]:
                        continue
                    next_signs = signs + [sign]
                else:
                    next_signs = signs
                covered.add(u)
                path.append(u)
                grow(path, next_signs)
                path.pop()
                covered.discard(u)

    cover()
    return frozenset(found)


def halfintegral_points(
    P: PreferenceSystem,
    variant: PolytopeVariant,
    em: Optional[FrozenSet[Edge]] = None,
    *,
    max_agents: int = ORACLE_MAX_AGENTS,
) -> FrozenSet[FractionalPoint]:
    """
    All feasible points with every coordinate in {0, 1/2, 1}.

    Edges are assigned in canonical order; each stability constraint is
    checked as soon as its last edge has a value.
    """
    _check_size(P, max_agents)
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    domain = _domain(P, variant, em)
    order = sorted(domain)
    position = {e: i for i, e in enumerate(order)}
    due: Dict[int, List[List[int]]] = {}
    for e in P.edges:
        members = sorted(position[f] for f in phi(P, e) if f in domain)
        if not members:
            return frozenset()
        due.setdefault(members[-1], []).append(members)
    pinned = P.edge_set - em if variant == PolytopeVariant.FSM_PRIME else frozenset()
    values: List[Fraction] = [Fraction(0)] * len(order)
    load = {a: Fraction(0) for a in P.agents}
    points = set()

    def assign(i: int) -> None:
        if i == len(order):
            points.add(FractionalPoint.of(domain, dict(zip(order, values))))
            return
        e = order[i]
        choices = (Fraction(0),) if e in pinned else (Fraction(0), HALF, Fraction(1))
        for c in choices:
            if load[e.u] + c > 1 or load[e.v] + c > 1:
                continue
            values[i] = c
            load[e.u] += c
            load[e.v] += c
            if all(sum(values[j] for j in members) >= 1 for members in due.get(i, ())):
                assign(i + 1)
            load[e.u] -= c
            load[e.v] -= c
        values[i] = Fraction(0)

    assign(0)
    log.debug("%d half-integral point(s) for %s", len(points), variant.value)
    return frozenset(points)


def build_hc(
    P: PreferenceSystem, C: SemiStablePartition, reduced: Optional[ReducedInstance] = None
) -> HcGraph:
    """
    The subgraph of H formed by the edges of ``C`` and every H-edge that sits
    between edges of ``C`` in both endpoints' lists.

    Raises:
        BadPartition: If ``C`` is not a semi-stable partition w.r.t. the
            projected polytope.
    """
    reduced = reduced or reduce_to_h(P)
    em = reduced.em.in_em
    if not semistable_feasible(P, C, PolytopeVariant.FSM_BAR, em):
        raise BadPartition("partition is not feasible for the projected polytope")
    h = reduced.h
    span: Dict[Agent, Tuple[int, int]] = {}
    for e in C.edges:
        for a in e.endpoints:
            r = h.rank(a, e.other(a))
            low, high = span.get(a, (r, r))
            span[a] = (min(low, r), max(high, r))

    def sandwiched(a: Agent, b: Agent) -> bool:
        low, high = span[a]
        return low <= h.rank(a, b) <= high

    edges = frozenset(e for e in h.edges if sandwiched(e.u, e.v) and sandwiched(e.v, e.u))
    g = nx.Graph()
    g.add_nodes_from(h.agents)
    g.add_edges_from(e.endpoints for e in edges)
    return HcGraph(edges, frozenset(h.agents), nx.is_bipartite(g))


def partition_from_point(
    P: PreferenceSystem,
    x: FractionalPoint,
    variant: PolytopeVariant,
    em: Optional[FrozenSet[Edge]] = None,
) -> SemiStablePartition:
    """
    Recover the semi-stable partition that induces ``x``.

    Raises:
        NotSemiStable: If ``x`` is infeasible, not half-integral, or its
            half-valued support is not a union of cyclic-preference cycles
            that together with the unit edges covers every agent.
    """
    variant = PolytopeVariant(variant)
    em = _resolve_em(P, variant, em)
    if not membership(P, variant, x, em).member:
        raise NotSemiStable("point is not feasible")
    singles = []
    halves = nx.Graph()
    for e, q in x.values.items():
        if q == 1:
            singles.append(e)
        elif q == HALF:
            halves.add_edge(*e.endpoints)
        else:
            raise NotSemiStable(f"coordinate {e} = {q} is not in {{0, 1/2, 1}}")
    if any(d != 2 for _, d in halves.degree()):
        raise NotSemiStable("half-valued edges do not form disjoint cycles")
    cycles = []
    for component in nx.connected_components(halves):
        start = min(component)
        seq = [start]
        prev, cur = None, start
        while True:
            step = min(b for b in halves.neighbors(cur) if b != prev)
            if step == start:
                break
            seq.append(step)
            prev, cur = cur, step
            if len(seq) > len(component):
                raise NotSemiStable("half-valued edges do not form disjoint cycles")
        cycles.append(tuple(seq))
    try:
        C = SemiStablePartition.of(singles, cycles)
        _check_structure(P, C, _domain(P, variant, em))
    except BadPartition as exc:
        raise NotSemiStable(str(exc)) from exc
    return C


def decompose_fractional(
    P: PreferenceSystem, x: FractionalPoint, verdict: Optional[ReducibilityVerdict] = None
) -> Tuple[Matching, Matching]:
    """
    Split a semi-stable point of the projected polytope into two stable
    matchings whose average is the point.

    On every cycle the first side of the bipartition of H takes its
    preferred cycle neighbor for the first matching, the second side does
    the same for the second matching; single edges go into both.

    Raises:
        NotBipartite: If H is not bipartite.
        NotSemiStable: If ``x`` is not induced by a semi-stable partition.
    """
    verdict = verdict or is_bipartite_reducible(P)
    if not verdict.reducible:
        raise NotBipartite("H is not bipartite")
    em = verdict.reduced.em.in_em
    C = partition_from_point(P, x, PolytopeVariant.FSM_BAR, em)
    side_a, _ = verdict.parts
    first, second = set(C.singles), set(C.singles)
    for cycle in C.cycles:
        k = len(cycle)
        for i, v in enumerate(cycle):
            before, after = cycle[i - 1], cycle[(i + 1) % k]
            best = before if P.prefers(v, before, after) else after
            (first if v in side_a else second).add(Edge(v, best))
    try:
        m1, m2 = Matching(frozenset(first)), Matching(frozenset(second))
    except InvalidMatching as exc:
        raise InternalInvariantError(f"decomposition did not produce matchings: {exc}") from exc
    for m in (m1, m2):
        verdict_m = is_stable(P, m)
        if not verdict_m:
            raise InternalInvariantError(f"decomposition produced {m}, blocked by {verdict_m.witness}")
    for e in x.domain:
        if Fraction((e in m1.edges) + (e in m2.edges), 2) != x.value(e):
            raise InternalInvariantError(f"decomposition does not average to the point at {e}")
    return m1, m2


def redundant_constraint_witness(
    P: PreferenceSystem, e: EdgeLike, em: Optional[FrozenSet[Edge]] = None
) -> Edge:
    """
    For an edge outside E_M that is the worst edge of an endpoint, find
    another edge whose restricted stability constraint implies its own.

    Returns:
        The smallest ``f != e`` with phi(f) & E_M contained in phi(e) & E_M.

    Raises:
        EdgeInEM: If ``e`` is in E_M.
        PreconditionViolated: If ``e`` is nobody's worst edge.
    """
    edge = P.require_edge(e)
    em = em if em is not None else compute_em(P).in_em
    if edge in em:
        raise EdgeInEM(f"{edge} lies in a stable matching")
    if P.last(edge.u) != edge.v and P.last(edge.v) != edge.u:
        raise PreconditionViolated(f"{edge} is not the worst edge of either endpoint")
    target = phi(P, edge) & em
    for f in P.edges:
        if f != edge and phi(P, f) & em <= target:
            return f
    raise InternalInvariantError(f"no dominating constraint found for {edge}")
