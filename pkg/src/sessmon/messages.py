"""Messages exchanged between runtime processes.

Session payload values may carry a sort name (:class:`Typed`); a bare value
matches any sort in its position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .actors import Pid
from .monitor import CommEvent, MonitorFsm, ReachabilityTable


@dataclass(frozen=True)
class Typed:
    sort: str
    value: Any


def sorts_of(payload) -> tuple[Optional[str], ...]:
    return tuple(v.sort if isinstance(v, Typed) else None for v in payload)


def values_of(payload) -> list:
    return [v.value if isinstance(v, Typed) else v for v in payload]


@dataclass(frozen=True)
class Envelope:
    session_id: int
    sender: str
    recipients: frozenset[str]
    label: str
    payload: tuple = ()
    msg_id: str = ""

    def receive_event(self) -> CommEvent:
        return CommEvent.receive(self.sender, self.label, sorts_of(self.payload))

    def send_event(self) -> CommEvent:
        return CommEvent.send(self.recipients, self.label, sorts_of(self.payload))


@dataclass(frozen=True)
class ParentLink:
    """Where a subsession reports its outcome."""

    session_id: int
    coordinator: Pid
    initiator_role: str
    initiator_monitor: Pid


# Requests handled by monitor processes.

@dataclass(frozen=True)
class SendReq:
    session_id: int
    role: str
    recipients: tuple[str, ...]
    label: str
    payload: tuple


@dataclass(frozen=True)
class QueueMsg:
    role: str
    envelope: Envelope


@dataclass(frozen=True)
class Commit:
    session_id: int
    role: str
    msg_id: str


@dataclass(frozen=True)
class Drop:
    session_id: int
    role: str
    msg_id: str


@dataclass(frozen=True)
class Forward:
    """Unchecked delivery used when monitoring is switched off."""

    role: str
    envelope: Envelope


@dataclass(frozen=True)
class PollInvolvement:
    session_id: int
    role: str
    target: str


@dataclass(frozen=True)
class Establish:
    session_id: int
    protocol: str
    role: str
    fsm: MonitorFsm
    reach: ReachabilityTable
    routes: dict[str, Pid]
    coordinator: Pid
    parent: Optional[ParentLink] = None


@dataclass(frozen=True)
class SessionEnded:
    session_id: int
    reason: Any


@dataclass(frozen=True)
class SessionFailed:
    session_id: int
    reason: Any


@dataclass(frozen=True)
class SetupFailed:
    """Delivered to participants that joined a session that never started."""

    session_id: int
    protocol: str
    role: str
    reason: Any


@dataclass(frozen=True)
class InitiateReq:
    session_id: int
    role: str
    child: str
    internal: tuple[tuple[str, str], ...]
    external: tuple[str, ...]
    candidates: tuple[tuple[str, tuple[Pid, ...]], ...] = ()


@dataclass(frozen=True)
class SubsessionOutcome:
    session_id: int
    role: str
    child: str
    child_session: int
    failure: Optional[str] = None
    result: Any = None


@dataclass(frozen=True)
class SubsessionSetupFailed:
    session_id: int
    role: str
    child: str
    roles: tuple[str, ...]
    error: Any


@dataclass(frozen=True)
class SubsessionEndReq:
    session_id: int
    role: str
    failure: Optional[str] = None
    result: Any = None


@dataclass(frozen=True)
class RegisterKey:
    key: str
    session_id: int
    role: str


@dataclass(frozen=True)
class BecomeReq:
    key: str
    role: str
    operation: Any
    args: tuple


# Messages handled by coordinators.

@dataclass(frozen=True)
class StartSession:
    pass


@dataclass(frozen=True)
class EndReq:
    reason: Any


@dataclass(frozen=True)
class FailReq:
    reason: Any
    roles: tuple[str, ...] = ()


@dataclass(frozen=True)
class CompleteReq:
    failure: Optional[str] = None
    result: Any = None


@dataclass(frozen=True)
class SpawnChild:
    parent_role: str
    child: str
    internal: tuple[tuple[str, str], ...]
    external: tuple[str, ...]
    candidates: tuple[tuple[str, tuple[Pid, ...]], ...] = ()


# Actor-facing messages.

@dataclass(frozen=True)
class JoinReq:
    protocol: str
    role: str
    session_id: int


@dataclass(frozen=True)
class Callback:
    """A user callback the monitor asks its actor to run."""

    name: str
    session_id: Optional[int]
    role: Optional[str]
    args: tuple = ()


@dataclass(frozen=True)
class Info:
    """Input from outside the session layer, such as a scripted command."""

    payload: Any

