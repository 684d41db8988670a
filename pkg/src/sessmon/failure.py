"""Failure detection: involvement polling and two-phase-commit multicast.

Push-based detection starts from a coordinator's down-notification. The
coordinator asks every remaining participant whether the dead role can
still appear on some path from its current monitor state, and the session
continues only if every answer is "not involved".

Pull-based detection guards each send. The sender's monitor queues the
message at every recipient monitor with a synchronous call, then commits
if all of them accepted. Otherwise it drops the message everywhere it was
queued. Recipients hold queued messages in an :class:`Inbox`, whose
tentative state is the committed state advanced by every queued message.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Literal, Mapping, Optional, Union

from .actors import Pid, Scheduler, Unreachable
from .messages import Commit, Drop, Envelope, PollInvolvement, QueueMsg
from .monitor import CommEvent, MonitorFsm, MonitorState, Violation, step
from .trace import TraceLog


class Participation(str, Enum):
    INVOLVED = "involved"
    NOT_INVOLVED = "notInvolved"
    UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class FailureVerdict:
    terminated_role: str
    per_participant: Mapping[str, Participation]
    outcome: Literal["continue", "terminate"]

    @classmethod
    def decide(cls, terminated_role: str,
               per_participant: Mapping[str, Participation]) -> FailureVerdict:
        ok = all(p is Participation.NOT_INVOLVED for p in per_participant.values())
        return cls(terminated_role, dict(per_participant), "continue" if ok else "terminate")


def watch_participants(sched: Scheduler, coordinator: Pid, pids) -> None:
    for pid in sorted(set(pids)):
        sched.watch(coordinator, pid)


def poll_involvement(sched: Scheduler, session_id: int, dead_role: str,
                     participants: Mapping[str, Pid],
                     trace: Optional[TraceLog] = None) -> FailureVerdict:
    """Ask each remaining participant's monitor whether ``dead_role`` is still needed."""
    answers: dict[str, Participation] = {}
    for role, pid in sorted(participants.items()):
        try:
            involved = sched.call(pid, PollInvolvement(session_id, role, dead_role), "poll")
        except Unreachable:
            answers[role] = Participation.UNREACHABLE
        else:
            answers[role] = Participation.INVOLVED if involved else Participation.NOT_INVOLVED
        if trace is not None:
            trace.emit("involvement_poll", session_id, role, [dead_role],
                       outcome=answers[role].value)
    verdict = FailureVerdict.decide(dead_role, answers)
    if trace is not None:
        trace.emit("verdict", session_id, dead_role, outcome=verdict.outcome)
    return verdict


class PendingState(str, Enum):
    QUEUED = "queued"
    COMMITTED = "committed"
    DROPPED = "dropped"


@dataclass
class PendingMessage:
    """Sender-side record of one multicast during the two phases."""

    msg_id: str
    envelope: Envelope
    queued_at: set[str] = field(default_factory=set)
    state: PendingState = PendingState.QUEUED

    def commit(self) -> None:
        if self.queued_at != set(self.envelope.recipients):
            raise RuntimeError(f"{self.msg_id} is not queued at every recipient")
        self.state = PendingState.COMMITTED


@dataclass(frozen=True)
class Committed:
    msg_id: str


@dataclass(frozen=True)
class Dropped:
    msg_id: str
    rejections: Mapping[str, str]


@dataclass(frozen=True)
class DeliveryFailed:
    msg_id: str
    unreachable: tuple[str, ...]
    rejections: Mapping[str, str] = field(default_factory=dict)


DeliveryResult = Union[Committed, Dropped, DeliveryFailed]


class CrashBetweenPhases(Exception):
    """Raised by the fault hook that kills a sender after phase one."""


def deliver_multicast(sched: Scheduler, envelope: Envelope, targets: Mapping[str, Pid],
                      trace: Optional[TraceLog] = None,
                      crash_after_queue: Optional[Callable[[Envelope], bool]] = None,
                      ) -> DeliveryResult:
    """Run both commit phases for ``envelope`` from the sender's monitor."""
    pending = PendingMessage(envelope.msg_id, envelope)
    sid = envelope.session_id
    rejections: dict[str, str] = {}
    unreachable: list[str] = []
    for role in sorted(envelope.recipients):
        pid = targets.get(role)
        try:
            if pid is None:
                raise Unreachable(-1, "no route")
            reply = sched.call(pid, QueueMsg(role, envelope), "queue")
        except Unreachable:
            unreachable.append(role)
            outcome = "unreachable"
        else:
            if reply is True:
                pending.queued_at.add(role)
                outcome = "ok"
            else:
                rejections[role] = str(reply)
                outcome = "rejected"
        if trace is not None:
            trace.emit("queue", sid, envelope.sender, [role], envelope.label, outcome)
    if crash_after_queue is not None and crash_after_queue(envelope):
        raise CrashBetweenPhases(envelope.msg_id)
    if not rejections and not unreachable:
        pending.commit()
        for role in sorted(pending.queued_at):
            sched.cast(targets[role], Commit(sid, role, envelope.msg_id), "commit")
            if trace is not None:
                trace.emit("commit", sid, envelope.sender, [role], envelope.label,
                           envelope.msg_id)
        return Committed(envelope.msg_id)
    for role in sorted(pending.queued_at):
        sched.cast(targets[role], Drop(sid, role, envelope.msg_id), "drop")
        if trace is not None:
            trace.emit("drop", sid, envelope.sender, [role], envelope.label, envelope.msg_id)
    pending.state = PendingState.DROPPED
    if unreachable:
        return DeliveryFailed(envelope.msg_id, tuple(unreachable), rejections)
    return Dropped(envelope.msg_id, rejections)


def deliver_async(sched: Scheduler, envelope: Envelope, targets: Mapping[str, Pid]) -> None:
    """Queue and commit without waiting; rejections surface at the recipient."""
    for role in sorted(envelope.recipients):
        pid = targets.get(role)
        if pid is None:
            continue
        sched.cast(pid, QueueMsg(role, envelope), "queue")
        sched.cast(pid, Commit(envelope.session_id, role, envelope.msg_id), "commit")


@dataclass
class _Queued:
    envelope: Envelope
    after: MonitorState
    committed: bool = False


class Inbox:
    """Recipient-side messages accepted in phase one but not yet committed."""

    def __init__(self, fsm: MonitorFsm, base: MonitorState):
        self.fsm = fsm
        self.base = base
        self.items: dict[str, _Queued] = {}

    def tentative(self) -> MonitorState:
        if not self.items:
            return self.base
        return next(reversed(self.items.values())).after

    def queue(self, envelope: Envelope) -> Optional[Violation]:
        nxt = step(self.fsm, self.tentative(), envelope.receive_event())
        if isinstance(nxt, Violation):
            return nxt
        self.items[envelope.msg_id] = _Queued(envelope, nxt)
        return None

    def commit(self, msg_id: str) -> list[Envelope]:
        """Mark ``msg_id`` committed; return envelopes now deliverable, in queue order."""
        item = self.items.get(msg_id)
        if item is None:
            return []
        item.committed = True
        return self.flush()

    def flush(self) -> list[Envelope]:
        """Pop the committed messages at the head of the queue."""
        out = []
        while self.items:
            head_id, head = next(iter(self.items.items()))
            if not head.committed:
                break
            del self.items[head_id]
            self.base = head.after
            out.append(head.envelope)
        return out

    def advance(self, event: CommEvent) -> Optional[Violation]:
        """Apply a committed local action to the base state."""
        nxt = step(self.fsm, self.base, event)
        if isinstance(nxt, Violation):
            return nxt
        self.rebase(nxt)
        return None

    def rebase(self, state: MonitorState) -> list[str]:
        """Replace the base state and re-check queued messages on top of it."""
        self.base = state
        return self._recheck()

    def drop(self, msg_id: str) -> list[str]:
        """Forget ``msg_id``; later queued messages are re-checked without it.

        Returns the ids of later messages that no longer fit and were dropped
        too. Call :meth:`flush` afterwards to collect newly deliverable ones.
        """
        if msg_id not in self.items:
            return []
        del self.items[msg_id]
        return self._recheck()

    def _recheck(self) -> list[str]:
        survivors: dict[str, _Queued] = {}
        lost = []
        state = self.base
        for mid, item in self.items.items():
            nxt = step(self.fsm, state, item.envelope.receive_event())
            if isinstance(nxt, Violation):
                lost.append(mid)
                continue
            survivors[mid] = _Queued(item.envelope, nxt, item.committed)
            state = nxt
        self.items = survivors
        return lost

    def __len__(self) -> int:
        return len(self.items)
