"""Session coordinators: invitation, failure handling and session end."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

from ..actors import Down, Pid, Process, Unreachable
from ..failure import poll_involvement, watch_participants
from ..messages import (
    CompleteReq,
    EndReq,
    Establish,
    FailReq,
    JoinReq,
    ParentLink,
    SessionEnded,
    SessionFailed,
    SetupFailed,
    SpawnChild,
    StartSession,
    SubsessionOutcome,
    SubsessionSetupFailed,
)
from ..protocol import PARTICIPANT_OFFLINE
from .registry import GetProtocol, Lookup

if TYPE_CHECKING:
    from .system import Runtime


@dataclass
class ConversationInstance:
    session_id: int
    protocol: str
    role_map: dict[str, Pid] = field(default_factory=dict)
    state: str = "inviting"
    parent: Optional[tuple[int, str]] = None
    reason: Any = None

    _MOVES = {"inviting": {"established", "failed"}, "established": {"ended", "failed"}}

    def move(self, new: str) -> bool:
        if new not in self._MOVES.get(self.state, ()):
            return False
        self.state = new
        return True


class Coordinator(Process):
    """Runs one session from invitation to its end.

    ``preassigned`` roles (the initiator, and participants carried over into
    a subsession) are filled without an invitation. ``candidates`` pins a
    role to specific actors, which must still be registered for it.
    """

    def __init__(self, rt: Runtime, session_id: int, protocol: str,
                 preassigned: dict[str, Pid], parent: Optional[ParentLink] = None,
                 candidates: Optional[dict[str, tuple[Pid, ...]]] = None):
        self.rt = rt
        self.instance = ConversationInstance(
            session_id, protocol, parent=(parent.session_id, parent.initiator_role)
            if parent else None)
        self.preassigned = dict(preassigned)
        self.parent = parent
        self.candidates = dict(candidates or {})
        self.monitors: dict[str, Pid] = {}
        self.live: set[str] = set()
        self.children: list[Pid] = []

    @property
    def sid(self) -> int:
        return self.instance.session_id

    @property
    def name(self) -> str:
        return f"coordinator<{self.pid}:{self.sid}>"

    def handle(self, msg) -> None:
        if isinstance(msg, StartSession):
            self._invite()
        elif isinstance(msg, Down):
            self._down(msg)
        elif isinstance(msg, EndReq):
            if self.parent is not None:
                self._complete(CompleteReq(None, msg.reason))
            else:
                self._end(msg.reason)
        elif isinstance(msg, CompleteReq):
            self._complete(msg)
        elif isinstance(msg, FailReq):
            self._fail(msg.reason)
        elif isinstance(msg, SpawnChild):
            self._spawn_child(msg)
        else:
            raise TypeError(f"unexpected message {msg!r}")

    # Invitation.

    def _invite(self) -> None:
        inst = self.instance
        trace = self.rt.trace
        info = self.sched.call(self.rt.protocol_registry, GetProtocol(inst.protocol), "registry")
        trace.emit("session_start", self.sid, label=inst.protocol,
                   outcome=f"parent={inst.parent[0]}" if inst.parent else "")
        role_map = dict(self.preassigned)
        joined: dict[str, Pid] = {}
        for role in info.roles:
            if role in role_map:
                continue
            registered = self.sched.call(self.rt.actor_registry, Lookup(inst.protocol, role),
                                         "registry")
            pinned = self.candidates.get(role)
            pool = [p for p in pinned if p in registered] if pinned is not None else registered
            for pid in pool:
                if pid in role_map.values():
                    continue
                try:
                    answer = self.sched.call(pid, JoinReq(inst.protocol, role, self.sid), "invite")
                except Unreachable:
                    trace.emit("invite", self.sid, str(pid), label=role, outcome="unreachable")
                    continue
                trace.emit("invite", self.sid, str(pid), label=role, outcome=answer)
                if answer == "accept":
                    role_map[role] = pid
                    joined[role] = pid
                    break
            else:
                self._setup_failed(f"no actor accepted role {role}", joined, info.roles)
                return
        inst.role_map = role_map
        self.monitors = {r: self.rt.monitor_of(p) for r, p in role_map.items()}
        for i, role in enumerate(info.roles):
            fsm, reach = info.monitors[role]
            req = Establish(self.sid, inst.protocol, role, fsm, reach, dict(self.monitors),
                            self.pid, self.parent)
            try:
                self.sched.call(self.monitors[role], req, "establish")
            except Unreachable:
                # Roles already set up see a failed session; the rest never started.
                self.live = {r for r in info.roles[:i] if self.sched.is_alive(self.monitors[r])}
                for later in info.roles[i + 1:]:
                    self.sched.cast(self.monitors[later], SetupFailed(
                        self.sid, inst.protocol, later, "participant_offline"), "control")
                inst.move("established")
                self._fail("participant_offline")
                return
        inst.move("established")
        self.live = set(info.roles)
        watch_participants(self.sched, self.pid, self.monitors.values())
        trace.emit("established", self.sid, label=inst.protocol,
                   outcome=",".join(f"{r}={role_map[r]}" for r in info.roles))

    def _setup_failed(self, why: str, joined: dict[str, Pid], roles) -> None:
        inst = self.instance
        inst.move("failed")
        inst.reason = "setup_failed"
        self.rt.trace.emit("setup_failed", self.sid, label=inst.protocol, outcome=why)
        notify = dict(joined)
        if self.parent is None:
            notify.update(self.preassigned)
        for role, pid in sorted(notify.items()):
            self.sched.cast(self.rt.monitor_of(pid),
                            SetupFailed(self.sid, inst.protocol, role, "setup_failed"), "control")
        if self.parent is not None:
            p = self.parent
            self.sched.cast(p.initiator_monitor, SubsessionSetupFailed(
                p.session_id, p.initiator_role, inst.protocol, tuple(roles), why), "control")
        self._stop()

    # Failure handling.

    def _down(self, msg: Down) -> None:
        if self.instance.state != "established":
            return
        for role in sorted(r for r in self.live if self.monitors[r] == msg.pid):
            self.live.discard(role)
            self.rt.trace.emit("participant_down", self.sid, role, outcome=msg.reason)
            rest = {r: self.monitors[r] for r in sorted(self.live)}
            verdict = poll_involvement(self.sched, self.sid, role, rest, self.rt.trace)
            if verdict.outcome == "terminate":
                self._fail("participant_offline")
                return

    def _fail(self, reason: Any) -> None:
        inst = self.instance
        if not inst.move("failed"):
            return
        inst.reason = reason
        self.rt.trace.emit("session_failed", self.sid, label=inst.protocol, outcome=reason)
        for role in sorted(self.live):
            self.sched.cast(self.monitors[role], SessionFailed(self.sid, reason), "control")
        for child in self.children:
            self.sched.cast(child, FailReq("parent_failed"), "control")
        if self.parent is not None:
            failure = PARTICIPANT_OFFLINE if reason == "participant_offline" else str(reason)
            p = self.parent
            self.sched.cast(p.initiator_monitor, SubsessionOutcome(
                p.session_id, p.initiator_role, inst.protocol, self.sid, failure), "control")
        self._stop()

    # Normal termination.

    def _end(self, reason: Any) -> None:
        inst = self.instance
        if not inst.move("ended"):
            return
        inst.reason = reason
        self.rt.trace.emit("session_end", self.sid, label=inst.protocol, outcome=reason)
        for role in sorted(self.live):
            self.sched.cast(self.monitors[role], SessionEnded(self.sid, reason), "control")
        for child in self.children:
            self.sched.cast(child, EndReq("parent_ended"), "control")
        self._stop()

    def _complete(self, msg: CompleteReq) -> None:
        if self.instance.state != "established" or self.parent is None:
            return
        reason = "subsession_complete" if msg.failure is None \
            else f"subsession_failed:{msg.failure}"
        self._end(reason)
        p = self.parent
        self.sched.cast(p.initiator_monitor, SubsessionOutcome(
            p.session_id, p.initiator_role, self.instance.protocol, self.sid,
            msg.failure, msg.result), "control")

    def _stop(self) -> None:
        for pid in set(self.monitors.values()):
            self.sched.unwatch(self.pid, pid)
        self.sched.kill(self.pid, "normal")

    # Subsessions.

    def _spawn_child(self, msg: SpawnChild) -> None:
        inst = self.instance
        me = self.monitors.get(msg.parent_role)
        roles = tuple(c for _, c in msg.internal) + tuple(msg.external)

        def refuse(why: str) -> None:
            if me is not None:
                self.sched.cast(me, SubsessionSetupFailed(self.sid, msg.parent_role, msg.child,
                                                          roles, why), "control")

        if inst.state != "established":
            refuse("parent session is not active")
            return
        preassigned = {}
        for parent_role, child_role in msg.internal:
            if parent_role not in self.live:
                refuse(f"role {parent_role} has left the session")
                return
            preassigned[child_role] = inst.role_map[parent_role]
        link = ParentLink(self.sid, self.pid, msg.parent_role, me)
        child = Coordinator(self.rt, self.rt.new_session_id(), msg.child, preassigned, link,
                            dict(msg.candidates))
        pid = self.rt.spawn_coordinator(child)
        self.children.append(pid)
        self.sched.cast(pid, StartSession(), "control")
