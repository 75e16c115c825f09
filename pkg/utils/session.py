"""
Run sessions: warnings, counters and timing collected while a command runs.
"""
import logging
import time
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional

log = logging.getLogger(__name__)


@dataclass
class RunSession:
    command: str
    session_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    warnings: List[str] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter)

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    def count(self, name: str, amount: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + amount

    def elapsed(self) -> float:
        return time.perf_counter() - self.started


# Global session storage
sessions: Dict[str, RunSession] = {}


def create_session(command: str) -> RunSession:
    """
    Create and register a session for one command invocation.

    Args:
        command: The subcommand name.

    Returns:
        The new session.
    """
    session = RunSession(command)
    sessions[session.session_id] = session
    return session


def close_session(session_id: str) -> Optional[RunSession]:
    """
    Unregister a session and log how long it ran.

    Returns:
        The closed session, or None if it was unknown.
    """
    session = sessions.pop(session_id, None)
    if session is not None:
        log.info("%s finished in %.3fs", session.command, session.elapsed())
    return session
