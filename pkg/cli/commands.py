"""
Subcommand handlers and the argument parser.

Each handler takes the parsed arguments and the run session and returns a
``CommandOutcome``: the instance it worked on, the JSON payload, the text
lines for humans and the exit code.
"""
import argparse
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List

from config import (
    APP_DESCRIPTION,
    APP_TITLE,
    APP_VERSION,
    ENUMERATE_DEFAULT_LIMIT,
    EXIT_NO_STABLE_MATCHING,
    EXIT_OK,
)
from cli.formats import (
    fraction_text,
    format_instance,
    parse_instance,
    parse_matching,
    parse_point,
    parse_weights,
    read_text,
)
from core.exceptions import MatchingError, NotSemiStable
from core.irving import find_stable_matching, perfect_core, phase_one
from core.model import Direction, Edge, EdgeWeights, Matching, NoStableMatching, PreferenceSystem, is_stable
from core.oracle import enumerate_stable_matchings
from core.polytope import FractionalPoint, PolytopeVariant, membership, partition_from_point
from core.reduction import compute_em, is_bipartite_reducible, reduce_to_h
from services.optimizer_service import METHODS, OptimizerFactory
from utils.session import RunSession

log = logging.getLogger(__name__)


class UsageError(MatchingError):
    """The command line itself is malformed."""


class Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CommandOutcome:
    instance: PreferenceSystem
    result: Dict[str, Any] = field(default_factory=dict)
    text: List[str] = field(default_factory=list)
    code: int = EXIT_OK


def _edges(edges: Iterable[Edge]) -> List[List[int]]:
    return [[e.u, e.v] for e in sorted(edges)]


def _matching_lines(M: Matching) -> List[str]:
    return [f"{e.u} {e.v}" for e in M.sorted_edges()]


def _load(path: str) -> PreferenceSystem:
    return parse_instance(read_text(path), path)


def _no_stable(P: PreferenceSystem, found: NoStableMatching) -> CommandOutcome:
    return CommandOutcome(
        P,
        {"stable": False, "reason": found.reason},
        ["no stable matching"],
        EXIT_NO_STABLE_MATCHING,
    )


def cmd_solve(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    found = find_stable_matching(P)
    if isinstance(found, NoStableMatching):
        return _no_stable(P, found)
    unmatched = sorted(set(P.agents) - found.vertices)
    return CommandOutcome(
        P,
        {"stable": True, "matching": _edges(found.edges), "unmatched": unmatched},
        _matching_lines(found),
    )


def cmd_reduce(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    first = phase_one(P)
    result: Dict[str, Any] = {
        "gi": _edges(first.surviving.edges),
        "phase_one_removed": [[e.u, e.v] for e in first.removed],
    }
    if args.emit == "gi":
        return CommandOutcome(P, result, format_instance(first.surviving).splitlines())
    core = perfect_core(P)
    if isinstance(core, NoStableMatching):
        return _no_stable(P, core)
    em = compute_em(core)
    reduced = reduce_to_h(core, em=em)
    result.update(
        {
            "core_agents": list(core.agents),
            "em": _edges(em.in_em),
            "h": _edges(reduced.h.edges),
            "removal_log": [[e.u, e.v] for e in reduced.removal_log],
        }
    )
    if args.emit == "h":
        text = format_instance(reduced.h).splitlines()
    elif args.emit == "em":
        text = [f"{e.u} {e.v}" for e in sorted(em.in_em)]
    else:
        text = [f"{e.u} {e.v}" for e in reduced.removal_log]
    return CommandOutcome(P, result, text)


def cmd_check(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    M = parse_matching(read_text(args.matching), args.matching)
    verdict = is_stable(P, M)
    witness = None if verdict.witness is None else [verdict.witness.u, verdict.witness.v]
    text = ["stable"] if verdict else [f"blocked by {verdict.witness}"]
    return CommandOutcome(P, {"stable": verdict.stable, "witness": witness}, text)


def cmd_reducible(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    core = perfect_core(P)
    if isinstance(core, NoStableMatching):
        return _no_stable(P, core)
    verdict = is_bipartite_reducible(core)
    parts = None if verdict.parts is None else [sorted(part) for part in verdict.parts]
    result = {"reducible": verdict.reducible, "gi_bipartite": verdict.gi_bipartite, "parts": parts}
    text = [
        f"reducible: {'yes' if verdict.reducible else 'no'}",
        f"G_I bipartite: {'yes' if verdict.gi_bipartite else 'no'}",
    ]
    return CommandOutcome(P, result, text)


def _payload(value: Any) -> Any:
    if isinstance(value, Fraction):
        return fraction_text(value)
    return value


def cmd_optimize(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    if args.egalitarian:
        w = EdgeWeights.egalitarian(P)
    else:
        w = parse_weights(read_text(args.weights), P, args.weights)
        if w.defaulted:
            session.warn(f"{len(w.defaulted)} edge(s) without weight default to 0")
    direction = Direction.MAX if args.max else Direction.MIN
    optimizer = OptimizerFactory.create_optimizer(args.method)
    outcome = optimizer.optimize(P, w, direction)
    if isinstance(outcome, NoStableMatching):
        return _no_stable(P, outcome)
    details = outcome.details or {}
    if details.get("used_fallback"):
        session.count("approx.fallback")
    result = {
        "method": outcome.method,
        "direction": direction.value,
        "matching": _edges(outcome.matching.edges),
        "weight": fraction_text(outcome.weight),
        "bound": None if outcome.bound is None else fraction_text(outcome.bound),
    }
    result.update({key: _payload(value) for key, value in details.items()})
    text = _matching_lines(outcome.matching) + [f"weight {outcome.weight}"]
    if outcome.bound is not None:
        text.append(f"bound {outcome.bound}")
    return CommandOutcome(P, result, text)


def cmd_enumerate(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    stable = enumerate_stable_matchings(P)
    shown = stable.sorted()[: args.limit]
    result = {"count": len(stable), "matchings": [_edges(m.edges) for m in shown]}
    text = [str(m) for m in shown]
    if len(stable) > len(shown):
        session.warn(f"showing {len(shown)} of {len(stable)} stable matchings")
    if stable.is_empty():
        return CommandOutcome(P, result, ["no stable matching"], EXIT_NO_STABLE_MATCHING)
    return CommandOutcome(P, result, text)


def cmd_polytope(args: argparse.Namespace, session: RunSession) -> CommandOutcome:
    P = _load(args.instance)
    variant = PolytopeVariant(args.variant)
    values = parse_point(read_text(args.point), args.point)
    em = None if variant == PolytopeVariant.FSM else compute_em(P).in_em
    domain = em if variant == PolytopeVariant.FSM_BAR else P.edge_set
    # zero coordinates outside the domain carry no information
    values = {e: q for e, q in values.items() if q != 0 or e in domain}
    x =FractionalPoint.of(domain, values)
    verdict = membership(P, variant, x, em)
    partition = None
    if verdict:
        try:
            C = partition_from_point(P, x, variant, em)
            partition = {"singles": _edges(C.singles), "cycles": [list(c) for c in sorted(C.cycles)]}
        except NotSemiStable as e:
            log.info("point is feasible but not semi-stable: %s", e)
    result = {
        "variant": variant.value,
        "member": verdict.member,
        "violations": [str(v) for v in verdict.violations],
        "partition": partition,
    }
    text = ["member"] if verdict else ["not a member"] + [str(v) for v in verdict.violations]
    return CommandOutcome(P, result, text)


def build_parser() -> Parser:
    parser = Parser(prog=APP_TITLE, description=APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"{APP_TITLE} {APP_VERSION}")
    parser.add_argument("--json", action="store_true", help="print a JSON report instead of text")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    solve = sub.add_parser("solve", help="find a stable matching")
    solve.add_argument("instance")
    solve.set_defaults(handler=cmd_solve)

    reduce = sub.add_parser("reduce", help="phase-one subgraph, E_M, H and the removal log")
    reduce.add_argument("instance")
    reduce.add_argument("--emit", choices=("gi", "h", "em", "log"), default="h")
    reduce.set_defaults(handler=cmd_reduce)

    check = sub.add_parser("check", help="test a matching for stability")
    check.add_argument("instance")
    check.add_argument("matching")
    check.set_defaults(handler=cmd_check)

    reducible = sub.add_parser("reducible", help="decide bipartite reducibility")
    reducible.add_argument("instance")
    reducible.set_defaults(handler=cmd_reducible)

    optimize = sub.add_parser("optimize", help="weighted stable matching")
    optimize.add_argument("instance")
    weights = optimize.add_mutually_exclusive_group(required=True)
    weights.add_argument("--weights", help="weights file, lines '<u> <v> <weight>'")
    weights.add_argument("--egalitarian", action="store_true", help="rank-sum weights")
    optimize.add_argument("--max", action="store_true", help="maximise instead of minimise")
    optimize.add_argument("--method", choices=METHODS, default="exact")
    optimize.set_defaults(handler=cmd_optimize)

    enumerate_ = sub.add_parser("enumerate", help="list every stable matching (small instances)")
    enumerate_.add_argument("instance")
    enumerate_.add_argument("--limit", type=int, default=ENUMERATE_DEFAULT_LIMIT)
    enumerate_.set_defaults(handler=cmd_enumerate)

    polytope = sub.add_parser("polytope", help="test a fractional point against a polytope")
    polytope.add_argument("instance")
    polytope.add_argument("--point", required=True)
    polytope.add_argument("--variant", choices=[v.value for v in PolytopeVariant], default="fsm")
    polytope.set_defaults(handler=cmd_polytope)
    return parser
