"""The session API that user callbacks call.

Every function takes a key handed out by the runtime: an :class:`InitKey`
from ``on_init`` or a :class:`ConvKey` from a session callback.
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from ..actors import Pid, Unreachable
from ..messages import (
    BecomeReq,
    EndReq,
    InitiateReq,
    RegisterKey,
    SendReq,
    StartSession,
    SubsessionEndReq,
)
from .errors import ConversationError, MonitorViolation
from .keys import ConvKey, InitKey


def _runtime(key: Union[InitKey, ConvKey]):
    if key is None or key.runtime is None:
        raise ConversationError("key is not bound to a running system")
    return key.runtime


def _call(rt, pid: Pid, req, kind: str = "control"):
    try:
        return rt.sched.call(pid, req, kind)
    except Unreachable as exc:
        raise ConversationError(f"monitor process is unreachable: {exc}") from exc


def start_conversation(init_key: InitKey, protocol: str, role: str) -> int:
    """Start a session of ``protocol`` with the caller playing ``role``.

    The caller takes ``role`` without an invitation; every other role is
    filled by invitation. The outcome arrives through ``on_established`` or
    ``on_error``. Returns the new session id.
    """
    rt = _runtime(init_key)
    spec = rt.spec_of(init_key.actor_pid)
    if spec is None or not spec.can_play(protocol, role):
        raise ConversationError(f"actor {init_key.actor_pid} may not play {protocol}/{role}")
    from .coordinator import Coordinator

    sid = rt.new_session_id()
    pid = rt.spawn_coordinator(Coordinator(rt, sid, protocol, {role: init_key.actor_pid}))
    rt.sched.cast(pid, StartSession(), "control")
    return sid


def send(conv_key: ConvKey, recipients: Sequence[str], label: str,
         payload: Sequence[Any] = ()) -> str:
    """Send ``label(payload)`` to ``recipients`` in the session of ``conv_key``.

    With full monitoring the call returns only after both the local and
    every remote monitor accepted the message. Returns ``"ok"``, or
    ``"failed"`` when a recipient was unreachable (the session then fails
    and every participant gets ``on_error``).

    Raises:
        ValueError: ``recipients`` is empty.
        MonitorViolation: a monitor rejected the message; no monitor moved.
    """
    if isinstance(recipients, str):
        recipients = [recipients]
    if not recipients:
        raise ValueError("send needs at least one recipient")
    rt = _runtime(conv_key)
    req = SendReq(conv_key.session_id, conv_key.role, tuple(recipients), label, tuple(payload))
    mode = rt.monitoring
    if mode != "full":
        rt.sched.cast(conv_key.monitor_pid, req, "check" if mode == "async" else "route")
        return "ok"
    reply = _call(rt, conv_key.monitor_pid, req, "check")
    if reply.status in ("violation", "rejected"):
        raise MonitorViolation(f"{label}: {reply.detail}", label, reply.expected,
                               reply.rejections)
    if reply.status == "no_session":
        raise ConversationError(f"session {conv_key.session_id} is not active")
    return reply.status


def register_conversation(conv_key: ConvKey, key: str) -> None:
    """Remember the session of ``conv_key`` under ``key`` for later :func:`become`."""
    rt = _runtime(conv_key)
    reply = _call(rt, conv_key.monitor_pid,
                  RegisterKey(key, conv_key.session_id, conv_key.role))
    if not reply.ok:
        raise ConversationError(reply.detail)


def become(init_key: InitKey, key: str, role: str, operation: Any,
           args: Iterable[Any] = ()) -> None:
    """Schedule ``on_become`` in the session registered under ``key``."""
    rt = _runtime(init_key)
    reply = _call(rt, init_key.monitor_pid, BecomeReq(key, role, operation, tuple(args)))
    if not reply.ok:
        raise ConversationError(reply.detail)


def start_subsession(conv_key: ConvKey, child: str,
                     internal: Union[Mapping[str, str], Iterable[tuple[str, str]]],
                     external: Iterable[str] = (),
                     candidates: Optional[Mapping[str, Iterable[Pid]]] = None) -> None:
    """Start ``child`` from the parent session of ``conv_key``.

    Args:
        internal: parent role to child role, in the child's argument order.
            Those actors are carried over without an invitation.
        external: child roles filled by invitation.
        candidates: optionally pin an external role to specific actors.

    Raises:
        MonitorViolation: the parent monitor is not at this ``initiates``.
    """
    rt = _runtime(conv_key)
    pairs = tuple(internal.items()) if isinstance(internal, Mapping) else tuple(internal)
    pinned = tuple((r, tuple(p)) for r, p in sorted((candidates or {}).items()))
    reply = _call(rt, conv_key.monitor_pid, InitiateReq(
        conv_key.session_id, conv_key.role, child, pairs, tuple(external), pinned))
    if reply.status == "violation":
        raise MonitorViolation(f"initiates {child}: {reply.detail}", child, reply.expected)
    if not reply.ok:
        raise ConversationError(reply.detail)


def _end_subsession(conv_key: ConvKey, failure: Optional[str], result: Any) -> None:
    rt = _runtime(conv_key)
    reply = _call(rt, conv_key.monitor_pid,
                  SubsessionEndReq(conv_key.session_id, conv_key.role, failure, result))
    if not reply.ok:
        raise ConversationError(reply.detail)


def subsession_complete(conv_key: ConvKey, result: Any = None) -> None:
    """End the subsession successfully; the initiator gets ``on_subsession_complete``."""
    _end_subsession(conv_key, None, result)


def subsession_failed(conv_key: ConvKey, failure: str) -> None:
    """End the subsession with ``failure``; the parent takes ``handle(failure)``."""
    _end_subsession(conv_key, failure, None)


def end_conversation(conv_key: ConvKey, reason: Any = "normal") -> None:
    """End the session for everyone. Calling it again has no effect."""
    rt = _runtime(conv_key)
    rt.sched.cast(conv_key.coordinator_pid, EndReq(reason), "control")


def spawn_actor(init_key: Union[InitKey, ConvKey], actor_type: str,
                args: Sequence[Any] = ()) -> Pid:
    """Spawn another configured actor from inside a callback."""
    return _runtime(init_key).spawn_actor(actor_type, list(args))


def log(key: Union[InitKey, ConvKey], text: str) -> None:
    """Write an application record to the trace."""
    rt = _runtime(key)
    if isinstance(key, ConvKey):
        actor = rt.actor_of(key.monitor_pid)
        rt.trace.emit("log", key.session_id, f"{key.role}@{actor}", outcome=text)
    else:
        rt.trace.emit("log", None, str(key.actor_pid), outcome=text)
