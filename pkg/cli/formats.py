"""
Text formats for instances, weights, matchings and fractional points.

Instance files hold one line per agent, ``<agent>: <n1> <n2> ...`` with the
most preferred neighbor first. Weight and point files hold ``<u> <v>
<value>`` lines, matching files ``<u> <v>``. Blank lines and lines starting
with ``#`` are skipped everywhere.
"""
import hashlib
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterator, List, Tuple

from core.exceptions import InvalidInstance, MatchingError, ParseError
from core.model import Edge, EdgeWeights, Matching, PreferenceSystem


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot read file: {e}", path) from e


def _data_lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _int(token: str, path: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{token!r} is not an agent id", path, line) from None


def _rational(token: str, path: str, line: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"{token!r} is not a rational number", path, line) from None


def parse_instance(text: str, path: str = "<input>") -> PreferenceSystem:
    """
    Parse an instance file.

    Raises:
        ParseError: On malformed lines, repeated agents, or preference data
            that is not strict and mutual.
    """
    lists: Dict[int, List[int]] = {}
    for number, line in _data_lines(text):
        head, sep, tail = line.partition(":")
        if not sep:
            raise ParseError("expected '<agent>: <neighbors>'", path, number)
        agent = _int(head.strip(), path, number)
        if agent in lists:
            raise ParseError(f"agent {agent} is listed twice", path, number)
        lists[agent] = [_int(tok, path, number) for tok in tail.split()]
    try:
        return PreferenceSystem.from_lists(lists)
    except InvalidInstance as e:
        raise ParseError(str(e), path) from e


def format_instance(P: PreferenceSystem) -> str:
    lines = []
    for agent, seq in P.lists:
        lines.append(f"{agent}: {' '.join(str(b) for b in seq)}".rstrip())
    return "\n".join(lines) + "\n"


def digest(P: PreferenceSystem) -> str:
    return hashlib.sha256(format_instance(P).encode("utf-8")).hexdigest()


def fraction_text(x: Fraction) -> str:
    """Always ``p/q``, also for integers."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _edge_lines(text: str, path: str, width: int) -> Iterator[Tuple[int, Edge, List[str]]]:
    for number, line in _data_lines(text):
        tokens = line.split()
        if len(tokens) != width:
            raise ParseError(f"expected {width} fields, found {len(tokens)}", path, number)
        u, v = _int(tokens[0], path, number), _int(tokens[1], path, number)
        try:
            edge = Edge(u, v)
        except MatchingError as e:
            raise ParseError(str(e), path, number) from e
        yield number, edge, tokens[2:]


def parse_weights(text: str, P: PreferenceSystem, path: str = "<input>") -> EdgeWeights:
    """
    Parse a weights file against an instance. Missing edges default to 0.

    Raises:
        ParseError: On unknown or repeated edges and negative or malformed
            weights.
    """
    mapping: Dict[Edge, Fraction] = {}
    for number, edge, rest in _edge_lines(text, path, 3):
        if edge not in P.edge_set:
            raise ParseError(f"{edge} is not an edge of the instance", path, number)
        if edge in mapping:
            raise ParseError(f"weight of {edge} given twice", path, number)
        weight = _rational(rest[0], path, number)
        if weight < 0:
            raise ParseError(f"weight of {edge} is negative", path, number)
        mapping[edge] = weight
    return EdgeWeights.for_instance(P, mapping)


def parse_matching(text: str, path: str = "<input>") -> Matching:
    """
    Parse a matching file.

    Raises:
        ParseError: On malformed lines or edges sharing an agent.
    """
    edges = [edge for _, edge, _ in _edge_lines(text, path, 2)]
    try:
        return Matching.of(edges)
    except MatchingError as e:
        raise ParseError(str(e), path) from e


def parse_point(text: str, path: str = "<input>") -> Dict[Edge, Fraction]:
    """Coordinates of a fractional point; absent edges read as 0."""
    values: Dict[Edge, Fraction] = {}
    for number, edge, rest in _edge_lines(text, path, 3):
        if edge in values:
            raise ParseError(f"coordinate of {edge} given twice", path, number)
        values[edge] = _rational(rest[0], path, number)
    return values
