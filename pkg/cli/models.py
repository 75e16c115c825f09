"""
Report models for the command-line front end.
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field


class InstanceSummary(BaseModel):
    """
    Identity of the instance a command ran on.
    """
    digest: str = Field(..., description="sha256 of the canonical instance text")
    agents: int = Field(..., description="Number of agents")
    edges: int = Field(..., description="Number of mutually acceptable pairs")

    class Config:
        json_schema_extra = {
            "example": {
                "digest": "5f0c0a7b...",
                "agents": 6,
                "edges": 12
            }
        }


class RunReport(BaseModel):
    """
    Machine-readable result of one command; rationals are "p/q" strings.
    """
    command: str = Field(..., description="Subcommand that produced the report")
    instance: InstanceSummary = Field(..., description="Instance the command ran on")
    result: Dict[str, Any] = Field(default_factory=dict, description="Command-specific payload")
    warnings: List[str] = Field(default_factory=list, description="Warnings raised during the run")
    stats: Dict[str, int] = Field(default_factory=dict, description="Counters collected during the run")

    class Config:
        json_schema_extra = {
            "example": {
                "command": "solve",
                "instance": {"digest": "5f0c0a7b...", "agents": 6, "edges": 12},
                "result": {"stable": True, "matching": [[1, 4], [2, 5], [3, 6]]},
                "warnings": [],
                "stats": {}
            }
        }
