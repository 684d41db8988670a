"""Session actors: the user callback contract and the process that runs it."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from ..actors import Down, Pid, Process
from ..messages import Callback, Info, JoinReq
from .keys import ConvKey, InitKey
from .registry import RegisterActor

if TYPE_CHECKING:
    from .config import ActorSpec
    from .system import Runtime


class SessionActor:
    """Base class for user actors.

    Callbacks receive the actor state and return the new one. ``on_join``
    returns ``("accept" | "decline", state)``. The defaults accept every
    invitation and leave the state unchanged.
    """

    def on_init(self, args: list, init_key: InitKey) -> Any:
        return None

    def on_join(self, protocol: str, role: str, session_id: int, state):
        return "accept", state

    def on_established(self, protocol: str, role: str, session_id: int,
                       conv_key: ConvKey, state):
        return state

    def on_message(self, protocol: str, role: str, session_id: int, sender: str,
                   label: str, payload: list, state, conv_key: ConvKey):
        return state

    def on_become(self, protocol: str, role: str, operation, args: list,
                  conv_key: ConvKey, state):
        return state

    def on_ended(self, session_id: int, reason, state):
        return state

    def on_error(self, protocol: str, role: str, error, state):
        return state

    def on_subsession_complete(self, protocol: str, result, state, conv_key: ConvKey):
        return state

    def on_subsession_failed(self, protocol: str, failure: str, state, conv_key: ConvKey):
        return state

    def on_subsession_setup_failed(self, protocol: str, roles, error, state):
        return state

    def on_info(self, message, state):
        """Input from outside any session, such as a scripted client command."""
        return state


# Trace fields per callback: which argument is the label, which the outcome.
_TRACE_SHAPE = {
    "on_established": (0, None),
    "on_message": (4, 3),
    "on_become": (2, None),
    "on_ended": (None, 1),
    "on_error": (0, 2),
    "on_subsession_complete": (0, 1),
    "on_subsession_failed": (0, 1),
    "on_subsession_setup_failed": (0, 2),
}


# Where the state argument goes when it is not last.
_STATE_AT = {"on_message": 6, "on_subsession_complete": 2, "on_subsession_failed": 2}


class ActorProcess(Process):
    critical = False

    def __init__(self, rt: Runtime, spec: ActorSpec, args: list):
        self.rt = rt
        self.spec = spec
        self.args = list(args)
        self.behavior: SessionActor = spec.behavior() if isinstance(spec.behavior, type) \
            else spec.behavior
        self.state: Any = None
        self.monitor_pid: Pid = -1
        self.init_key: InitKey | None = None
        self.closed: set[tuple[int, str]] = set()

    @property
    def name(self) -> str:
        return f"{self.spec.actor_type}<{self.pid}>"

    def started(self) -> None:
        from .monitor_process import MonitorProcess

        self.rt.actors[self.pid] = self
        self.monitor_pid = self.sched.spawn(MonitorProcess(self.rt, self.pid))
        self.rt._monitor_owner[self.monitor_pid] = self.pid
        self.sched.link(self.pid, self.monitor_pid)
        self.init_key = InitKey(self.pid, self.monitor_pid, self.rt)
        self.sched.call(self.rt.actor_registry,
                        RegisterActor(self.pid, tuple(self.spec.pairs())), "registry")
        self.rt.trace.emit("on_init", None, str(self.pid), label=self.spec.actor_type)
        self.state = self.behavior.on_init(self.args, self.init_key)

    def participant(self, role: str | None) -> str:
        return f"{role}@{self.pid}" if role else str(self.pid)

    def handle_call(self, req):
        if isinstance(req, JoinReq):
            answer, self.state = self.behavior.on_join(req.protocol, req.role,
                                                       req.session_id, self.state)
            answer = "accept" if answer == "accept" else "decline"
            self.rt.trace.emit("on_join", req.session_id, self.participant(req.role),
                               label=req.protocol, outcome=answer)
            return answer
        raise TypeError(f"unexpected request {req!r}")

    def handle(self, msg) -> None:
        if isinstance(msg, Callback):
            self._callback(msg)
        elif isinstance(msg, Info):
            self.rt.trace.emit("on_info", None, str(self.pid), label=msg.payload)
            self.state = self.behavior.on_info(msg.payload, self.state)
        elif isinstance(msg, Down):
            pass
        else:
            raise TypeError(f"unexpected message {msg!r}")

    def _callback(self, cb: Callback) -> None:
        key = (cb.session_id, cb.role)
        if key in self.closed and cb.name in ("on_message", "on_become"):
            return
        label_at, outcome_at = _TRACE_SHAPE[cb.name]
        label = cb.args[label_at] if label_at is not None else ""
        outcome = cb.args[outcome_at] if outcome_at is not None else ""
        self.rt.trace.emit(cb.name, cb.session_id, self.participant(cb.role),
                           label=label, outcome=outcome)
        if cb.name in ("on_ended", "on_error"):
            self.closed.add(key)
        args = list(cb.args)
        args.insert(_STATE_AT.get(cb.name, len(args)), self.state)
        self.state = getattr(self.behavior, cb.name)(*args)

    def exited(self, reason) -> None:
        self.rt.trace.emit("exit", None, str(self.pid), label=self.spec.actor_type,
                           outcome=reason)


class Supervisor(Process):
    """One-for-one restarts: a crashed or killed actor is respawned with its args."""

    def __init__(self, rt: Runtime):
        self.rt = rt
        self.children: dict[Pid, tuple[str, list]] = {}

    def supervise(self, pid: Pid, actor_type: str, args: list) -> None:
        self.children[pid] = (actor_type, list(args))
        self.sched.watch(self.pid, pid)

    def handle(self, msg) -> None:
        if not isinstance(msg, Down):
            raise TypeError(f"unexpected message {msg!r}")
        child = self.children.pop(msg.pid, None)
        if child is None or msg.reason in ("normal", "shutdown"):
            return
        actor_type, args = child
        new_pid = self.rt.spawn_actor(actor_type, args)
        self.rt.trace.emit("restart", None, f"{actor_type}<{msg.pid}>",
                           label=actor_type, outcome=new_pid)
