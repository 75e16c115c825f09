"""
Exception hierarchy for the roommates toolkit.

"No stable matching" is not an error and has no exception here; see
``core.model.NoStableMatching``.
"""


class MatchingError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidInstance(MatchingError):
    """Preference data violates strictness, mutual acceptability or id rules."""


class UnknownEdge(MatchingError):
    """An edge was referenced that is not in the instance's edge set."""

    def __init__(self, u: int, v: int):
        super().__init__(f"{u}-{v} is not an edge of the instance")
        self.u = u
        self.v = v


class InvalidMatching(MatchingError):
    """A set of edges is not a matching of the instance."""


class InstanceTooLarge(MatchingError):
    """An exhaustive procedure was asked to run above its size bound."""

    def __init__(self, agents: int, bound: int):
        super().__init__(f"instance has {agents} agents, exhaustive bound is {bound}")
        self.agents = agents
        self.bound = bound


class NotPerfectCore(MatchingError):
    """The instance has no stable matching or a stable matching that is not perfect."""


class EdgeInEM(MatchingError):
    """An operation defined for edges outside E_M received an E_M edge."""


class DomainMismatch(MatchingError):
    """A fractional point is indexed by the wrong edge set for a polytope variant."""


class BadPartition(MatchingError):
    """A proposed semi-stable partition fails cover, disjointness or cyclicity."""


class NotBipartite(MatchingError):
    """A bipartite-only procedure received a non-bipartite graph or a wrong side."""


class NotSemiStable(MatchingError):
    """A fractional point is not induced by any semi-stable partition."""


class NotReducible(MatchingError):
    """The instance is not bipartite reducible."""


class PreconditionViolated(MatchingError):
    """A documented precondition of an operation does not hold."""


class CyclicPrecedence(MatchingError):
    """A closure instance has a cycle in its precedence relation."""


class UnknownMethod(MatchingError):
    """An optimisation method name is not recognised."""


class ParseError(MatchingError):
    """An input file is malformed."""

    def __init__(self, message: str, path: str = "<input>", line: int = 0):
        where = f"{path}:{line}" if line else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


class InternalInvariantError(MatchingError):
    """A result produced by the toolkit failed its own verification."""
