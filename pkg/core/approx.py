"""
Factor-2 minimum-weight stable matching for instances whose stable edges
form single edges and vertex-disjoint even cycles.

Every stable matching keeps the single edges and picks one of the two
perfect matchings of each cycle. Reweighting moves each cycle's premium
onto one reference edge, so the problem becomes a minimum-cost choice of
orientations under two-literal constraints coming from intermediate edges.
That is solved half-integrally as a closure problem and rounded.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import networkx as nx

from core.exceptions import InternalInvariantError, PreconditionViolated
from core.irving import find_stable_matching, perfect_core
from core.model import Agent, Edge, EdgeWeights, Matching, NoStableMatching, PreferenceSystem, is_stable
from core.optcore import ClosureInstance, Literal, TwoLitSystem, Unsatisfiable, min_weight_closure, two_sat
from core.polytope import has_cyclic_preferences
from core.reduction import ReducedInstance, compute_em, reduce_to_h

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Cycle:
    """
    An even cycle of stable edges, rotated so that ``(v0, v1)`` is the
    reference edge. The reference orientation matches ``v0v1, v2v3, ...``.
    """

    vertices: Tuple[Agent, ...]
    w_plus: Fraction = Fraction(0)
    w_minus: Fraction = Fraction(0)

    @property
    def c(self) -> Fraction:
        return self.w_plus - self.w_minus

    @property
    def reference_edge(self) -> Edge:
        return Edge(self.vertices[0], self.vertices[1])

    def orientation(self, reference: bool) -> Tuple[Edge, ...]:
        k = len(self.vertices)
        start = 0 if reference else 1
        return tuple(
            Edge(self.vertices[i % k], self.vertices[(i + 1) % k]) for i in range(start, start + k, 2)
        )

    def partner(self, v: Agent, reference: bool) -> Agent:
        for e in self.orientation(reference):
            if e.touches(v):
                return e.other(v)
        raise ValueError(f"{v} is not on cycle {self.vertices}")


@dataclass(frozen=True)
class CycleStructure:
    singles: FrozenSet[Edge]
    cycles: Tuple[Cycle, ...] = ()

    def cycle_of(self) -> Dict[Agent, int]:
        return {v: i for i, cycle in enumerate(self.cycles) for v in cycle.vertices}

    def with_weights(self, w: EdgeWeights) -> "CycleStructure":
        """Re-anchor every cycle on the reference edge chosen for ``w``."""
        return replace(self, cycles=tuple(_orient(c.vertices, w) for c in self.cycles))


@dataclass(frozen=True)
class CycleFormViolation:
    vertex: Agent
    degree: int
    reason: str

    def __str__(self) -> str:
        return f"agent {self.vertex}: {self.reason}"


def _orient(seq: Tuple[Agent, ...], w: EdgeWeights) -> Cycle:
    """
    Rotate a cycle so its reference edge comes first: the smallest edge of
    the heavier orientation, or of the orientation holding the cycle's
    smallest edge on a tie.
    """
    k = len(seq)
    sides = [
        [Edge(seq[i], seq[(i + 1) % k]) for i in range(start, k, 2)] for start in (0, 1)
    ]
    weights = [w.total(side) for side in sides]
    if weights[0] != weights[1]:
        heavy = 0 if weights[0] > weights[1] else 1
    else:
        heavy = 0 if min(sides[0]) < min(sides[1]) else 1
    anchor = min(sides[heavy])
    j = next(i for i in range(heavy, k, 2) if Edge(seq[i], seq[(i + 1) % k]) == anchor)
    rotated = tuple(seq[j:] + seq[:j])
    return Cycle(rotated, weights[heavy], weights[1 - heavy])


def _walk_cycle(g: nx.Graph, component) -> Tuple[Agent, ...]:
    start = min(component)
    seq = [start]
    prev, cur = None, start
    while True:
        step = min(u for u in g[cur] if u != prev)
        if step == start:
            break
        seq.append(step)
        prev, cur = cur, step
    return tuple(seq)


def check_cycle_form(
    P: PreferenceSystem,
    w: Optional[EdgeWeights] = None,
    em: Optional[FrozenSet[Edge]] = None,
) -> Union[CycleStructure, CycleFormViolation]:
    """
    Split the stable-edge graph of a perfect-core instance into single edges
    and even cycles with cyclic preferences.

    Args:
        P: A perfect-core instance.
        w: Weights that pick each cycle's reference edge; zero when omitted.
        em: Precomputed stable edges of ``P``.

    Returns:
        The structure, or the first agent at which the form breaks.

    Raises:
        NotPerfectCore: If ``P`` is not in perfect-core form.
    """
    em = compute_em(P).in_em if em is None else em
    w = w or EdgeWeights()
    g = nx.Graph()
    g.add_nodes_from(P.agents)
    g.add_edges_from(e.endpoints for e in em)
    for v in sorted(g.nodes):
        if g.degree(v) > 2:
            return CycleFormViolation(v, g.degree(v), f"has {g.degree(v)} stable partners")
    singles = []
    cycles = []
    for component in sorted(nx.connected_components(g), key=min):
        lowest = min(component)
        if len(component) == 2:
            singles.append(Edge(*sorted(component)))
            continue
        if any(g.degree(v) != 2 for v in component):
            return CycleFormViolation(lowest, g.degree(lowest), "stable edges form a path")
        seq = _walk_cycle(g, component)
        if len(seq) % 2:
            return CycleFormViolation(lowest, 2, f"odd cycle of length {len(seq)}")
        if not has_cyclic_preferences(P, seq):
            return CycleFormViolation(lowest, 2, "cycle preferences are not cyclic")
        cycles.append(_orient(seq, w))
    return CycleStructure(frozenset(singles), tuple(cycles))


@dataclass(frozen=True)
class TildeWeights:
    wtilde: EdgeWeights
    w_minus_total: Fraction


def tilde_weights(S: CycleStructure, w: EdgeWeights) -> TildeWeights:
    """
    Put each cycle's premium ``w_plus - w_minus`` on its reference edge and
    collect everything every stable matching pays anyway into ``W-``.
    """
    S = S.with_weights(w)
    wtilde = EdgeWeights({cycle.reference_edge: cycle.c for cycle in S.cycles})
    total = sum((cycle.w_minus for cycle in S.cycles), Fraction(0)) + w.total(S.singles)
    return TildeWeights(wtilde, total)


@dataclass(frozen=True)
class OrientationProblem:
    """
    One boolean per cycle, True for the reference orientation.

    ``p_literals[v]`` is the literal saying ``v`` holds the better of its
    two stable partners.
    """

    structure: CycleStructure
    clauses: Tuple[Tuple[Literal, Literal], ...] = ()
    forced: Tuple[Literal, ...] = ()
    p_literals: Dict[Agent, Literal] = field(default_factory=dict)

    @property
    def variables(self) -> Tuple[int, ...]:
        return tuple(range(len(self.structure.cycles)))

    def to_two_lit(self) -> TwoLitSystem:
        return TwoLitSystem(self.variables, self.clauses, self.forced)

    def matching(self, assignment: Dict[int, bool]) -> Matching:
        edges = set(self.structure.singles)
        for i, cycle in enumerate(self.structure.cycles):
            edges.update(cycle.orientation(assignment[i]))
        return Matching.of(edges)


def orientation_constraints(
    P: PreferenceSystem,
    S: CycleStructure,
    reduced: Optional[ReducedInstance] = None,
) -> OrientationProblem:
    """
    Turn every intermediate edge of H into the clause that keeps it from
    blocking.

    An endpoint on a cycle only wants the other endpoint while it holds its
    worse stable partner, so the edge blocks exactly when both endpoints
    hold the worse one. Clauses inside a single cycle become a forced value
    or vanish.
    """
    reduced = reduced or reduce_to_h(P)
    in_em = reduced.em.in_em
    fixed = {v: e.other(v) for e in S.singles for v in e.endpoints}
    p_literals: Dict[Agent, Literal] = {}
    better: Dict[Agent, Agent] = {}
    worse: Dict[Agent, Agent] = {}
    for i, cycle in enumerate(S.cycles):
        for v in cycle.vertices:
            a, b = cycle.partner(v, True), cycle.partner(v, False)
            better[v], worse[v] = (a, b) if P.prefers(v, a, b) else (b, a)
            p_literals[v] = (i, better[v] == a)

    def content(u: Agent, v: Agent) -> Union[bool, Literal]:
        """When ``u`` has no wish to leave for ``v``."""
        if u in fixed:
            return not P.prefers(u, v, fixed[u])
        if P.prefers(u, v, better[u]):
            return False
        if P.prefers(u, v, worse[u]):
            return p_literals[u]
        return True

    clauses: List[Tuple[Literal, Literal]] = []
    forced: List[Literal] = []
    for e in reduced.h.edges:
        if e in in_em:
            continue
        if e.u in fixed and e.v in fixed:
            raise InternalInvariantError(f"intermediate edge {e} joins two single edges")
        lits = [content(e.u, e.v), content(e.v, e.u)]
        if True in lits:
            continue
        live = [lit for lit in lits if lit is not False]
        if not live:
            raise InternalInvariantError(f"{e} blocks every stable matching")
        if len(live) == 1:
            forced.append(live[0])
            continue
        a, b = live
        if a[0] == b[0]:
            if a[1] == b[1]:
                forced.append(a)
            continue
        clauses.append((a, b))
    log.debug("%d clause(s), %d forced value(s) over %d cycle(s)", len(clauses), len(forced), len(S.cycles))
    return OrientationProblem(S, tuple(sorted(set(clauses))), tuple(sorted(set(forced))), p_literals)


@dataclass(frozen=True)
class ApproxResult:
    """
    A stable matching within twice the optimum.

    ``relaxation`` is the half-integral lower bound in reweighted units;
    ``path`` is ``relaxation-exact``, ``rounded`` or ``fallback``.
    """

    matching: Matching
    weight: Fraction
    bound: Fraction
    relaxation: Fraction
    sharp_bound: Fraction
    path: str
    used_fallback: bool = False


def _state(lit: Literal, value: Dict[int, bool]) -> Optional[bool]:
    if lit[0] not in value:
        return None
    return value[lit[0]] == lit[1]


def _simplify(
    clauses: List[Tuple[Literal, Literal]], value: Dict[int, bool]
) -> Optional[Tuple[List[Tuple[Literal, Literal]], List[Literal]]]:
    """
    Clauses still open under ``value`` and the literals it now forces, or
    None when a clause is already violated.
    """
    open_clauses: List[Tuple[Literal, Literal]] = []
    units: List[Literal] = []
    for a, b in clauses:
        states = (_state(a, value), _state(b, value))
        if True in states:
            continue
        if states == (False, False):
            return None
        if states[0] is False:
            units.append(b)
        elif states[1] is False:
            units.append(a)
        else:
            open_clauses.append((a, b))
    return open_clauses, units


def _propagate(
    clauses: Tuple[Tuple[Literal, Literal], ...], forced: Tuple[Literal, ...]
) -> Tuple[Dict[int, bool], List[Tuple[Literal, Literal]]]:
    """Unit propagation; returns the fixed values and the clauses left open."""
    value: Dict[int, bool] = {}
    pending = list(forced)
    remaining = list(clauses)
    while pending:
        var, val = pending.pop()
        if var in value:
            if value[var] != val:
                raise InternalInvariantError(f"orientation of cycle {var} is forced both ways")
            continue
        value[var] = val
        simplified = _simplify(remaining, value)
        if simplified is None:
            raise InternalInvariantError(f"fixing cycle {var} violates a clause")
        remaining, units = simplified
        pending.extend(units)
    return value, remaining


def _split_relaxation(
    free: List[int], costs: Dict[int, Fraction], clauses: List[Tuple[Literal, Literal]]
) -> Tuple[Dict[int, Fraction], Fraction]:
    """
    Half-integral optimum of the orientation problem.

    Each variable z becomes a pair X, Q of closure elements with
    z = (X + 1 - Q) / 2, and every clause becomes two precedences, so the
    relaxation is a minimum-weight closure.
    """
    weights: Dict[Tuple[str, int], Fraction] = {}
    for i in free:
        weights[("X", i)] = costs[i] * HALF
        weights[("Q", i)] = -costs[i] * HALF
    # arc p -> q: choosing p forces q
    order = nx.DiGraph()
    order.add_nodes_from(weights)
    for (i, a), (j, b) in clauses:
        pos_i, neg_i = (("X", i), ("Q", i)) if a else (("Q", i), ("X", i))
        pos_j, neg_j = (("X", j), ("Q", j)) if b else (("Q", j), ("X", j))
        order.add_edge(neg_j, pos_i)
        order.add_edge(neg_i, pos_j)
    condensed = nx.condensation(order)
    members = condensed.graph["mapping"]
    grouped: Dict[int, Fraction] = {c: Fraction(0) for c in condensed.nodes}
    for node, c in members.items():
        grouped[c] += weights[node]
    closure = min_weight_closure(
        ClosureInstance(grouped, frozenset((q, p) for p, q in condensed.edges))
    )
    chosen = {node for node, c in members.items() if c in closure.subset}
    z = {i: (int(("X", i) in chosen) + 1 - int(("Q", i) in chosen)) * HALF for i in free}
    value = sum((costs[i] * HALF for i in free), Fraction(0)) + closure.weight
    return z, value


def _round(half: List[int], costs: Dict[int, Fraction], residual: TwoLitSystem) -> Optional[Dict[int, bool]]:
    """Complete the half variables, trying the cheap orientation first."""
    if isinstance(two_sat(residual), Unsatisfiable):
        return None
    forced = list(residual.forced)
    for i in sorted(half, key=lambda i: (-costs[i], i)):
        attempt = TwoLitSystem(residual.variables, residual.clauses, tuple(forced) + ((i, False),))
        if not isinstance(two_sat(attempt), Unsatisfiable):
            forced.append((i, False))
    final = two_sat(TwoLitSystem(residual.variables, residual.clauses, tuple(forced)))
    if isinstance(final, Unsatisfiable):
        raise InternalInvariantError("greedy rounding lost satisfiability")
    return final


def _branch_and_bound(
    free: List[int], costs: Dict[int, Fraction], clauses: List[Tuple[Literal, Literal]]
) -> Dict[int, bool]:
    """Cheapest satisfying assignment by depth-first search with cost pruning."""
    position = {i: k for k, i in enumerate(free)}
    # each clause is checked once its later variable is set
    watching: Dict[int, List[Tuple[Literal, Literal]]] = {i: [] for i in free}
    for a, b in clauses:
        watching[max(a[0], b[0], key=position.__getitem__)].append((a, b))
    value: Dict[int, bool] = {}
    best_cost: Optional[Fraction] = None
    best: Optional[Dict[int, bool]] = None

    def walk(k: int, cost: Fraction) -> None:
        nonlocal best_cost, best
        if best_cost is not None and cost >= best_cost:
            return
        if k == len(free):
            best_cost, best = cost, dict(value)
            return
        i = free[k]
        for choice in (False, True):
            value[i] = choice
            if all(_state(a, value) or _state(b, value) for a, b in watching[i]):
                walk(k + 1, cost + (costs[i] if choice else 0))
            del value[i]

    walk(0, Fraction(0))
    if best is None:
        raise InternalInvariantError("no orientation satisfies the constraints")
    return best


def approximate_min_weight(P: PreferenceSystem, w: EdgeWeights) -> Union[ApproxResult, NoStableMatching]:
    """
    A stable matching of weight at most twice the minimum.

    Integral values of the relaxation are kept and the half ones completed
    by two-literal satisfiability. If the kept values leave no completion,
    the free cycles are searched exactly and the bound is the optimum.

    Args:
        P: An instance whose perfect core is in cycle form.
        w: Nonnegative edge weights.

    Returns:
        The result with its bounds, or ``NoStableMatching``.

    Raises:
        PreconditionViolated: If the stable edges are not single edges and
            even cycles.
    """
    if isinstance(find_stable_matching(P), NoStableMatching):
        return NoStableMatching()
    core = perfect_core(P)
    em = compute_em(core)
    S = check_cycle_form(core, w, em.in_em)
    if isinstance(S, CycleFormViolation):
        raise PreconditionViolated(f"not in cycle form: {S}")
    tilde = tilde_weights(S, w)
    problem = orientation_constraints(core, S, reduce_to_h(core, em=em))
    costs = {i: cycle.c for i, cycle in enumerate(S.cycles)}

    fixed, clauses = _propagate(problem.clauses, problem.forced)
    free = [i for i in problem.variables if i not in fixed]
    z, value = _split_relaxation(free, costs, clauses)
    relaxation = sum((costs[i] for i, v in fixed.items() if v), Fraction(0)) + value
    log.debug("relaxation %s over %d free cycle(s)", relaxation, len(free))

    assignment = dict(fixed)
    assignment.update({i: z[i] == 1 for i in free if z[i] != HALF})
    half = [i for i in free if z[i] == HALF]
    path = "rounded" if half else "relaxation-exact"
    rounded = None
    residual = _simplify(clauses, assignment)
    if residual is not None:
        open_clauses, units = residual
        rounded = _round(half, costs, TwoLitSystem(tuple(half), tuple(open_clauses), tuple(units)))
    if rounded is None:
        log.info("rounding left no completion, searching %d free cycle(s) exactly", len(free))
        assignment = dict(fixed)
        assignment.update(_branch_and_bound(free, costs, clauses))
        path = "fallback"
    else:
        assignment.update(rounded)

    matching = problem.matching(assignment)
    weight = w.total(matching)
    if weight != tilde.wtilde.total(matching) + tilde.w_minus_total:
        raise InternalInvariantError(f"reweighting identity fails on {matching}")
    check = is_stable(P, matching)
    if not check:
        raise InternalInvariantError(f"approximate matching {matching} is blocked by {check.witness}")
    sharp = 2 * relaxation + tilde.w_minus_total
    bound = weight if path == "fallback" else 2 * (relaxation + tilde.w_minus_total)
    return ApproxResult(matching, weight, bound, relaxation, sharp, path, path == "fallback")
