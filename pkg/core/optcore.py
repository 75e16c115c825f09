"""
Optimisation primitives: max-flow/min-cut, minimum-weight closure and
2-literal satisfiability, all exact over rationals.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, List, Mapping, Optional, Tuple, Union

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from core.exceptions import CyclicPrecedence, InternalInvariantError, InvalidInstance

log = logging.getLogger(__name__)

Node = Hashable
Literal = Tuple[Hashable, bool]


@dataclass
class FlowNetwork:
    """
    Directed network with rational capacities.

    A capacity of ``None`` stands for an unbounded arc. Parallel arcs are
    merged by adding their capacities.
    """

    source: Node
    sink: Node
    nodes: List[Node] = field(default_factory=list)
    arcs: List[Tuple[Node, Node, Optional[Fraction]]] = field(default_factory=list)

    def __post_init__(self):
        if self.source == self.sink:
            raise InvalidInstance("source and sink must differ")
        self.add_node(self.source)
        self.add_node(self.sink)

    def add_node(self, node: Node) -> None:
        if node not in self.nodes:
            self.nodes.append(node)

    def add_arc(self, tail: Node, head: Node, capacity: Optional[Union[int, Fraction]] = None) -> None:
        if capacity is not None and capacity < 0:
            raise InvalidInstance(f"arc {tail}->{head} has negative capacity")
        self.add_node(tail)
        self.add_node(head)
        self.arcs.append((tail, head, None if capacity is None else Fraction(capacity)))

    def to_digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for tail, head, capacity in self.arcs:
            if tail == head:
                continue
            if not g.has_edge(tail, head):
                g.add_edge(tail, head, capacity=capacity)
                continue
            data = g[tail][head]
            if data.get("capacity") is None or capacity is None:
                data["capacity"] = None
            else:
                data["capacity"] += capacity
        for _, _, data in g.edges(data=True):
            if data["capacity"] is None:
                del data["capacity"]
        return g


@dataclass(frozen=True)
class FlowResult:
    value: Fraction
    cut: FrozenSet[Node]


def max_flow_min_cut(N: FlowNetwork) -> FlowResult:
    """
    Maximum flow by shortest augmenting paths and the source side of a
    minimum cut.

    The cut is the set of nodes reachable from the source in the final
    residual network; its capacity is checked against the flow value.
    """
    g = N.to_digraph()
    residual = edmonds_karp(g, N.source, N.sink, capacity="capacity")
    value = Fraction(residual.graph["flow_value"])
    reachable = {N.source}
    stack = [N.source]
    while stack:
        u = stack.pop()
        for v, attr in residual.succ[u].items():
            if v not in reachable and attr["flow"] < attr["capacity"]:
                reachable.add(v)
                stack.append(v)
    capacity = Fraction(0)
    for tail, head, data in g.edges(data=True):
        if tail in reachable and head not in reachable:
            if "capacity" not in data:
                raise InternalInvariantError(f"unbounded arc {tail}->{head} crosses the minimum cut")
            capacity += data["capacity"]
    if capacity != value:
        raise InternalInvariantError(f"cut capacity {capacity} differs from flow value {value}")
    return FlowResult(value, frozenset(reachable))


@dataclass(frozen=True)
class ClosureInstance:
    """
    Elements with signed weights; ``(before, after)`` in ``precedence`` means
    ``after`` may only be chosen together with ``before``.
    """

    weights: Mapping[Hashable, Fraction]
    precedence: FrozenSet[Tuple[Hashable, Hashable]] = frozenset()


@dataclass(frozen=True)
class ClosureResult:
    subset: FrozenSet[Hashable]
    weight: Fraction


_SOURCE = ("closure", "source")
_SINK = ("closure", "sink")


def min_weight_closure(C: ClosureInstance) -> ClosureResult:
    """
    Minimum-weight downward-closed subset, via a minimum cut.

    Profit ``-w(x)`` feeds arc source->x when positive and x->sink when
    negative; every precedence becomes an unbounded arc after->before.

    Raises:
        CyclicPrecedence: If the precedence relation has a cycle.
    """
    order = nx.DiGraph()
    order.add_nodes_from(C.weights)
    order.add_edges_from(C.precedence)
    if not nx.is_directed_acyclic_graph(order):
        raise CyclicPrecedence(f"precedence cycle through {nx.find_cycle(order)}")
    network = FlowNetwork(_SOURCE, _SINK)
    for x, weight in C.weights.items():
        profit = -Fraction(weight)
        if profit > 0:
            network.add_arc(_SOURCE, x, profit)
        elif profit < 0:
            network.add_arc(x, _SINK, -profit)
        else:
            network.add_node(x)
    for before, after in C.precedence:
        network.add_arc(after, before)
    result = max_flow_min_cut(network)
    subset = frozenset(result.cut - {_SOURCE})
    weight = sum((Fraction(C.weights[x]) for x in subset), Fraction(0))
    return ClosureResult(subset, weight)


@dataclass(frozen=True)
class TwoLitSystem:
    variables: Tuple[Hashable, ...]
    clauses: Tuple[Tuple[Literal, Literal], ...] = ()
    forced: Tuple[Literal, ...] = ()

    def __post_init__(self):
        declared = set(self.variables)
        for lit in [l for c in self.clauses for l in c] + list(self.forced):
            if lit[0] not in declared:
                raise InvalidInstance(f"literal references undeclared variable {lit[0]!r}")


@dataclass(frozen=True)
class Unsatisfiable:
    variable: Optional[Hashable] = None


def _negate(lit: Literal) -> Literal:
    return (lit[0], not lit[1])


def two_sat(S: TwoLitSystem) -> Union[Dict[Hashable, bool], Unsatisfiable]:
    """
    Decide a 2-literal system on its implication graph.

    Returns:
        A satisfying assignment, or ``Unsatisfiable`` naming a variable whose
        two literals share a strongly connected component.
    """
    g = nx.DiGraph()
    for x in S.variables:
        g.add_nodes_from([(x, True), (x, False)])
    for a, b in S.clauses:
        g.add_edge(_negate(a), b)
        g.add_edge(_negate(b), a)
    for lit in S.forced:
        g.add_edge(_negate(lit), lit)
    condensed = nx.condensation(g)
    component = condensed.graph["mapping"]
    rank = {c: i for i, c in enumerate(nx.topological_sort(condensed))}
    assignment: Dict[Hashable, bool] = {}
    for x in S.variables:
        yes, no = component[(x, True)], component[(x, False)]
        if yes == no:
            return Unsatisfiable(x)
        assignment[x] = rank[yes] > rank[no]
    return assignment


def satisfies(assignment: Mapping[Hashable, bool], S: TwoLitSystem) -> bool:
    def holds(lit: Literal) -> bool:
        return assignment[lit[0]] == lit[1]

    return all(holds(a) or holds(b) for a, b in S.clauses) and all(holds(l) for l in S.forced)
