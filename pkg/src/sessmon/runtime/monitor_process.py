"""The per-actor monitor process: every session action of an actor passes here.

It holds one monitor per (session id, role) the actor plays, checks each
outgoing action before it leaves and each incoming message before it is
delivered, and forwards session lifecycle events to its actor as callbacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping, Optional

from ..actors import Pid, Process
from ..failure import (
    Committed,
    CrashBetweenPhases,
    DeliveryFailed,
    Inbox,
    deliver_async,
    deliver_multicast,
)
from ..messages import (
    BecomeReq,
    Callback,
    Commit,
    CompleteReq,
    Drop,
    Envelope,
    Establish,
    FailReq,
    Forward,
    InitiateReq,
    ParentLink,
    PollInvolvement,
    QueueMsg,
    RegisterKey,
    SendReq,
    SessionEnded,
    SessionFailed,
    SetupFailed,
    SpawnChild,
    SubsessionEndReq,
    SubsessionOutcome,
    SubsessionSetupFailed,
    values_of,
)
from ..monitor import (
    CommEvent,
    MonitorFsm,
    MonitorState,
    ReachabilityTable,
    Violation,
    expected,
    initial_state,
    initiate_args,
    involved,
    step,
)
from ..projection import outcome_label
from .keys import ConvKey

if TYPE_CHECKING:
    from .system import Runtime


@dataclass(frozen=True)
class Reply:
    status: str
    detail: str = ""
    expected: tuple[str, ...] = ()
    rejections: Mapping[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


OK = Reply("ok")
NO_SESSION = Reply("no_session", "no such session at this monitor")


@dataclass
class Entry:
    protocol: str
    role: str
    fsm: MonitorFsm
    reach: ReachabilityTable
    inbox: Inbox
    routes: dict[str, Pid]
    coordinator: Pid
    parent: Optional[ParentLink]
    sent: int = 0
    before_initiate: Optional[MonitorState] = None

    @property
    def state(self) -> MonitorState:
        return self.inbox.base


class MonitorProcess(Process):
    def __init__(self, rt: Runtime, actor_pid: Pid):
        self.rt = rt
        self.actor = actor_pid
        self.entries: dict[tuple[int, str], Entry] = {}
        self.keys: dict[str, tuple[int, str]] = {}

    @property
    def name(self) -> str:
        return f"monitor<{self.pid}:{self.actor}>"

    # Helpers.

    def conv_key(self, sid: int, role: str) -> ConvKey:
        return ConvKey(self.pid, role, self.entries[(sid, role)].coordinator, sid, self.rt)

    def to_actor(self, name: str, sid: Optional[int], role: Optional[str], *args,
                 kind: str = "control") -> None:
        self.sched.cast(self.actor, Callback(name, sid, role, tuple(args)), kind)

    def _deliver(self, e: Entry, env: Envelope) -> None:
        sid = env.session_id
        self.to_actor("on_message", sid, e.role, e.protocol, e.role, sid, env.sender, env.label,
                      values_of(env.payload), self.conv_key(sid, e.role), kind="deliver")

    def _next_id(self, sid: int, e: Entry) -> str:
        e.sent += 1
        return f"{sid}:{e.role}:{e.sent}"

    def _violation(self, sid: int, role: str, v: Violation, where: str) -> Reply:
        self.rt.trace.emit("violation", sid, role, v.event.peers, v.event.label, where)
        return Reply("violation", str(v), tuple(t.describe() for t in v.expected))

    def _close(self, sid: int) -> list[Entry]:
        closed = [self.entries.pop(k) for k in sorted(self.entries) if k[0] == sid]
        for name in [k for k, v in self.keys.items() if v[0] == sid]:
            del self.keys[name]
        return closed

    # Synchronous requests.

    def handle_call(self, req) -> Any:
        if isinstance(req, SendReq):
            return self._send(req)
        if isinstance(req, QueueMsg):
            return self._queue(req)
        if isinstance(req, PollInvolvement):
            e = self.entries.get((req.session_id, req.role))
            return e is not None and involved(e.reach, e.state, req.target)
        if isinstance(req, Establish):
            return self._establish(req)
        if isinstance(req, InitiateReq):
            return self._initiate(req)
        if isinstance(req, RegisterKey):
            if (req.session_id, req.role) not in self.entries:
                return NO_SESSION
            self.keys[req.key] = (req.session_id, req.role)
            return OK
        if isinstance(req, BecomeReq):
            return self._become(req)
        if isinstance(req, SubsessionEndReq):
            e = self.entries.get((req.session_id, req.role))
            if e is None:
                return NO_SESSION
            if e.parent is None:
                return Reply("root", "session is not a subsession; use end_conversation")
            self.sched.cast(e.coordinator, CompleteReq(req.failure, req.result), "control")
            return OK
        raise TypeError(f"unexpected request {req!r}")

    def _send(self, req: SendReq) -> Reply:
        sid = req.session_id
        e = self.entries.get((sid, req.role))
        if e is None:
            return NO_SESSION
        env = Envelope(sid, req.role, frozenset(req.recipients), req.label, tuple(req.payload),
                       self._next_id(sid, e))
        mode = self.rt.monitoring
        if mode == "off":
            for role in sorted(env.recipients):
                self.sched.cast(e.routes.get(role, -1), Forward(role, env), "forward")
            return OK
        event = env.send_event()
        nxt = step(e.fsm, e.state, event)
        if isinstance(nxt, Violation):
            return self._violation(sid, req.role, nxt, "local")
        if mode == "async":
            e.inbox.rebase(nxt)
            deliver_async(self.sched, env, e.routes)
            return OK
        try:
            result = deliver_multicast(self.sched, env, e.routes, self.rt.trace,
                                       self.rt.faults.crash_after_queue)
        except CrashBetweenPhases:
            self.rt.trace.emit("crash_between_phases", sid, req.role, env.recipients,
                               env.label, env.msg_id)
            self.sched.kill(self.pid, "crash_between_phases")
            return Reply("failed", "sender crashed between phases")
        if isinstance(result, Committed):
            e.inbox.rebase(nxt)
            self.rt.trace.emit("send", sid, req.role, env.recipients, env.label, "ok")
            return OK
        if isinstance(result, DeliveryFailed):
            self.rt.trace.emit("send", sid, req.role, env.recipients, env.label, "unreachable")
            self.sched.cast(e.coordinator, FailReq("participant_offline", result.unreachable),
                            "control")
            return Reply("failed", "unreachable: " + ",".join(result.unreachable),
                         rejections=result.rejections)
        self.rt.trace.emit("send", sid, req.role, env.recipients, env.label, "dropped")
        return Reply("rejected", "; ".join(f"{r}: {why}" for r, why in
                                           sorted(result.rejections.items())),
                     rejections=result.rejections)

    def _queue(self, req: QueueMsg):
        env = req.envelope
        e = self.entries.get((env.session_id, req.role))
        if e is None:
            return "no such session"
        hook = self.rt.faults.reject_queue
        if hook is not None and hook(req.role, env):
            return "rejected by fault injection"
        v = e.inbox.queue(env)
        if v is not None:
            self.rt.trace.emit("violation", env.session_id, req.role, [env.sender], env.label,
                               "remote")
            return str(v)
        return True

    def _establish(self, req: Establish) -> Reply:
        e = Entry(req.protocol, req.role, req.fsm, req.reach,
                  Inbox(req.fsm, initial_state(req.fsm)), dict(req.routes), req.coordinator,
                  req.parent)
        self.entries[(req.session_id, req.role)] = e
        self.to_actor("on_established", req.session_id, req.role, req.protocol, req.role,
                      req.session_id, self.conv_key(req.session_id, req.role))
        return OK

    def _initiate(self, req: InitiateReq) -> Reply:
        e = self.entries.get((req.session_id, req.role))
        if e is None:
            return NO_SESSION
        peers = frozenset(p for p, _ in req.internal if p != req.role)
        event = CommEvent("initiate", peers, req.child, initiate_args(req.internal, req.external))
        before = e.state
        v = e.inbox.advance(event)
        if v is not None:
            return self._violation(req.session_id, req.role, v, "initiate")
        e.before_initiate = before
        self.rt.trace.emit("initiate", req.session_id, req.role, peers, req.child, "ok")
        self.sched.cast(e.coordinator, SpawnChild(req.role, req.child, req.internal,
                                                  req.external, req.candidates), "control")
        return OK

    def _become(self, req: BecomeReq) -> Reply:
        target = self.keys.get(req.key)
        if target is None:
            return Reply("unknown_key", f"no session registered under {req.key!r}")
        sid, role = target
        if role != req.role:
            return Reply("role_mismatch",
                         f"{req.key!r} was registered for role {role!r}, not {req.role!r}")
        e = self.entries.get(target)
        if e is None:
            return NO_SESSION
        self.to_actor("on_become", sid, role, e.protocol, role, req.operation,
                      list(req.args), self.conv_key(sid, role))
        return OK

    # Asynchronous messages.

    def handle(self, msg) -> None:
        if isinstance(msg, Commit):
            e = self.entries.get((msg.session_id, msg.role))
            if e is not None:
                for env in e.inbox.commit(msg.msg_id):
                    self._deliver(e, env)
        elif isinstance(msg, Drop):
            e = self.entries.get((msg.session_id, msg.role))
            if e is not None:
                e.inbox.drop(msg.msg_id)
                for env in e.inbox.flush():
                    self._deliver(e, env)
        elif isinstance(msg, QueueMsg):
            # Asynchronous checking: a rejection is only recorded.
            self._queue(msg)
        elif isinstance(msg, SendReq):
            reply = self._send(msg)
            if not reply.ok:
                self.rt.trace.emit("async_error", msg.session_id, msg.role, msg.recipients,
                                   msg.label, reply.detail)
        elif isinstance(msg, Forward):
            e = self.entries.get((msg.envelope.session_id, msg.role))
            if e is not None:
                self._deliver(e, msg.envelope)
        elif isinstance(msg, SessionEnded):
            for e in self._close(msg.session_id):
                self.to_actor("on_ended", msg.session_id, e.role, msg.session_id, msg.reason)
        elif isinstance(msg, SessionFailed):
            for e in self._close(msg.session_id):
                self.to_actor("on_error", msg.session_id, e.role, e.protocol, e.role, msg.reason)
        elif isinstance(msg, SetupFailed):
            self.to_actor("on_error", msg.session_id, msg.role, msg.protocol, msg.role,
                          msg.reason)
        elif isinstance(msg, SubsessionOutcome):
            self._outcome(msg)
        elif isinstance(msg, SubsessionSetupFailed):
            e = self.entries.get((msg.session_id, msg.role))
            if e is None:
                return
            if e.before_initiate is not None:
                e.inbox.rebase(e.before_initiate)
                e.before_initiate = None
            self.rt.trace.emit("subsession_setup_failed", msg.session_id, msg.role,
                               label=msg.child, outcome=msg.error)
            self.to_actor("on_subsession_setup_failed", msg.session_id, msg.role, msg.child,
                          list(msg.roles), msg.error)
        else:
            raise TypeError(f"unexpected message {msg!r}")

    def _outcome(self, msg: SubsessionOutcome) -> None:
        sid, role = msg.session_id, msg.role
        e = self.entries.get((sid, role))
        if e is None:
            return
        e.before_initiate = None
        label = outcome_label(msg.failure)
        match = [t for t in expected(e.fsm, e.state)
                 if t.direction == "outcome" and t.label == label]
        callback = ("on_subsession_complete", msg.result) if msg.failure is None \
            else ("on_subsession_failed", msg.failure)
        conv_key = self.conv_key(sid, role)
        if not match:
            self.rt.trace.emit("unhandled_failure", sid, role, label=msg.child,
                               outcome=msg.failure)
            self.to_actor(callback[0], sid, role, msg.child, callback[1], conv_key)
            self.sched.cast(e.coordinator, FailReq(f"unhandled_subsession_failure:{msg.failure}"),
                            "control")
            return
        t = match[0]
        if t.peers:
            env = Envelope(sid, role, t.peers, label, (), self._next_id(sid, e))
            result = deliver_multicast(self.sched, env, e.routes, self.rt.trace)
            if not isinstance(result, Committed):
                reason = "participant_offline" if isinstance(result, DeliveryFailed) \
                    else "outcome_rejected"
                self.to_actor(callback[0], sid, role, msg.child, callback[1], conv_key)
                self.sched.cast(e.coordinator, FailReq(reason), "control")
                return
        e.inbox.advance(CommEvent("outcome", t.peers, label))
        self.rt.trace.emit("outcome", sid, role, t.peers, label, msg.child)
        self.to_actor(callback[0], sid, role, msg.child, callback[1], conv_key)

