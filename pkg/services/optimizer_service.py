"""
Optimiser factory for weighted stable matching.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from config import ORACLE_MAX_AGENTS
from core.approx import approximate_min_weight
from core.exceptions import PreconditionViolated, UnknownMethod
from core.model import Direction, EdgeWeights, Matching, NoStableMatching, PreferenceSystem
from core.oracle import brute_optimum
from core.solver import optimize_exact

METHODS = ("exact", "approx", "brute")


@dataclass(frozen=True)
class OptimizerOutcome:
    """What every optimiser reports; ``details`` carries method-specific extras."""

    method: str
    matching: Matching
    weight: Fraction
    bound: Optional[Fraction] = None
    details: Optional[dict] = None


class ExactOptimizer:
    method = "exact"

    def optimize(
        self, P: PreferenceSystem, w: EdgeWeights, direction: Direction
    ) -> Union[OptimizerOutcome, NoStableMatching]:
        found = optimize_exact(P, w, direction)
        if isinstance(found, NoStableMatching):
            return found
        return OptimizerOutcome(self.method, found.matching, found.weight)


class ApproxOptimizer:
    method = "approx"

    def optimize(
        self, P: PreferenceSystem, w: EdgeWeights, direction: Direction
    ) -> Union[OptimizerOutcome, NoStableMatching]:
        if direction != Direction.MIN:
            raise PreconditionViolated("the approximation only minimises")
        found = approximate_min_weight(P, w)
        if isinstance(found, NoStableMatching):
            return found
        return OptimizerOutcome(
            self.method,
            found.matching,
            found.weight,
            found.bound,
            {
                "relaxation": found.relaxation,
                "sharp_bound": found.sharp_bound,
                "path": found.path,
                "used_fallback": found.used_fallback,
            },
        )


class BruteForceOptimizer:
    method = "brute"

    def __init__(self, max_agents: int = ORACLE_MAX_AGENTS):
        self.max_agents = max_agents

    def optimize(
        self, P: PreferenceSystem, w: EdgeWeights, direction: Direction
    ) -> Union[OptimizerOutcome, NoStableMatching]:
        found = brute_optimum(P, w, direction, max_agents=self.max_agents)
        if isinstance(found, NoStableMatching):
            return found
        matching, weight = found
        return OptimizerOutcome(self.method, matching, weight)


Optimizer = Union[ExactOptimizer, ApproxOptimizer, BruteForceOptimizer]


class OptimizerFactory:
    """Factory for creating optimiser instances."""

    @staticmethod
    def create_optimizer(method: str = "exact") -> Optimizer:
        """
        Create an optimiser for the given method name.

        Args:
            method: ``exact``, ``approx`` or ``brute`` (case-insensitive).

        Returns:
            An object with ``optimize(P, w, direction)``.

        Raises:
            UnknownMethod: If the method name is not recognised.
        """
        name = method.lower()
        if name == "exact":
            return ExactOptimizer()
        elif name == "approx":
            return ApproxOptimizer()
        elif name == "brute":
            return BruteForceOptimizer()
        else:
            raise UnknownMethod(f"Invalid method: {method}. Must be one of {', '.join(METHODS)}")
