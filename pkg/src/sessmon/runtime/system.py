"""Starting a system: monitor generation, registries and the actor supervisor."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

from ..actors import LiveScheduler, Pid, Process, Scheduler, SimScheduler
from ..messages import EndReq, Envelope, Info
from ..monitor import MonitorGenerationError, compute_reachability, generate_monitor
from ..projection import ProjectionError, project_all
from ..protocol import ProtocolError, ProtocolModule, errors, parse_module, validate
from ..trace import TraceLog
from .actor import ActorProcess, Supervisor
from .config import ActorSpec, ConfigError, bind, check_config, parse_config
from .errors import StartError
from .registry import ActorRegistry, ProtocolInfo, ProtocolRegistry

MONITORING_MODES = ("full", "async", "off")


@dataclass
class FaultHooks:
    """Fault injection points used by tests and scenarios.

    Attributes:
        reject_queue: ``(role, envelope) -> bool``; True makes the recipient
            monitor refuse the queued message.
        crash_after_queue: ``envelope -> bool``; True kills the sender's
            monitor after phase one, before any commit or drop.
    """

    reject_queue: Optional[Callable[[str, Envelope], bool]] = None
    crash_after_queue: Optional[Callable[[Envelope], bool]] = None


class Runtime:
    """Handle on a running system, returned by :func:`system_start`."""

    def __init__(self, sched: Scheduler, module: ProtocolModule, specs: Sequence[ActorSpec],
                 protocols: Mapping[str, ProtocolInfo], monitoring: str = "full"):
        if monitoring not in MONITORING_MODES:
            raise ValueError(f"monitoring must be one of {MONITORING_MODES}")
        self.sched = sched
        self.module = module
        self.monitoring = monitoring
        self.faults = FaultHooks()
        self.trace = TraceLog(sched.now)
        self.specs = {s.actor_type: s for s in specs}
        self.actors: dict[Pid, ActorProcess] = {}
        self.coordinators: dict[int, Pid] = {}
        self._monitor_owner: dict[Pid, Pid] = {}
        self._sids = itertools.count(1)
        self.protocols = dict(protocols)
        sched.crash_hook = self._on_crash
        self.protocol_registry = sched.spawn(ProtocolRegistry(protocols))
        self.actor_registry = sched.spawn(ActorRegistry())
        self.supervisor_proc = Supervisor(self)
        self.supervisor = sched.spawn(self.supervisor_proc)

    def _on_crash(self, pid: Pid, exc: BaseException) -> None:
        proc = self.sched.procs.get(pid)
        self.trace.emit("crash", None, str(pid), label=proc.name if proc else "",
                        outcome=f"{type(exc).__name__}: {exc}")

    # Lookups used by runtime processes.

    def new_session_id(self) -> int:
        return next(self._sids)

    def monitor_of(self, actor: Pid) -> Pid:
        proc = self.actors.get(actor)
        return proc.monitor_pid if proc is not None else -1

    def actor_of(self, monitor: Pid) -> Optional[Pid]:
        return self._monitor_owner.get(monitor)

    def spec_of(self, actor: Pid) -> Optional[ActorSpec]:
        proc = self.actors.get(actor)
        return proc.spec if proc is not None else None

    def behavior_of(self, actor: Pid):
        return self.actors[actor].behavior

    def state_of(self, actor: Pid) -> Any:
        return self.actors[actor].state

    def fsm_entries(self) -> int:
        """Number of (protocol, role) monitors precomputed at start."""
        return sum(len(info.monitors) for info in self.protocols.values())

    def registered(self, protocol: str, role: str) -> list[Pid]:
        reg: ActorRegistry = self.sched.procs[self.actor_registry]
        return list(reg.table.get(protocol, {}).get(role, ()))

    # Operations.

    def spawn_coordinator(self, coordinator: Process) -> Pid:
        pid = self.sched.spawn(coordinator)
        self.coordinators[coordinator.sid] = pid
        return pid

    def spawn_actor(self, actor_type: str, args: Iterable[Any] = ()) -> Pid:
        """Spawn an actor and its monitor, register it and run ``on_init``."""
        spec = self.specs.get(actor_type)
        if spec is None:
            raise ConfigError(f"unknown actor type {actor_type!r}")
        if spec.behavior is None:
            raise ConfigError(f"actor type {actor_type!r} has no behaviour bound")
        proc = ActorProcess(self, spec, list(args))
        pid = self.sched.spawn(proc)
        if spec.restart:
            self.supervisor_proc.supervise(pid, actor_type, proc.args)
        return pid

    def inject(self, actor: Pid, payload: Any) -> None:
        """Deliver external input (``on_info``) to an actor."""
        self.sched.cast(actor, Info(payload), "input")

    def kill(self, pid: Pid, reason: Any = "killed") -> None:
        self.sched.kill(pid, reason)

    def run(self, max_steps: int = 1_000_000, timeout: float = 30.0) -> None:
        if isinstance(self.sched, SimScheduler):
            self.sched.run(max_steps)
        else:
            self.sched.wait_idle(timeout)

    def shutdown(self) -> None:
        """End every live root session, then stop the scheduler."""
        for sid, pid in sorted(self.coordinators.items()):
            coord = self.sched.procs.get(pid)
            if self.sched.is_alive(pid) and getattr(coord, "parent", None) is None:
                self.sched.cast(pid, EndReq("shutdown"), "control")
        self.run()
        if isinstance(self.sched, LiveScheduler):
            self.sched.shutdown()


def build_protocols(module: ProtocolModule) -> dict[str, ProtocolInfo]:
    """Project every protocol onto every role and compile the monitors."""
    out: dict[str, ProtocolInfo] = {}
    problems: list[str] = []
    for proto in module:
        try:
            locals_ = project_all(proto, module)
            monitors = {}
            for role in proto.roles:
                fsm = generate_monitor(locals_[role])
                monitors[role] = (fsm, compute_reachability(fsm))
        except (ProjectionError, MonitorGenerationError) as exc:
            problems.append(f"{proto.name}: {exc}")
            continue
        out[proto.name] = ProtocolInfo(proto.name, tuple(proto.roles), monitors)
    if problems:
        raise StartError(problems)
    return out


def system_start(module: Union[ProtocolModule, str],
                 config: Union[Sequence[ActorSpec], str] = (), *,
                 behaviors: Optional[Mapping[str, Any]] = None,
                 restart: Iterable[str] = (),
                 scheduler: Union[str, Scheduler] = "sim",
                 seed: int = 0,
                 monitoring: str = "full",
                 strict: bool = False,
                 call_timeout: float = 5.0) -> Runtime:
    """Validate, generate every monitor and start the registries.

    Args:
        module: a parsed module or protocol source text.
        config: actor specs or config text (``actorType protocol role,...``).
        behaviors: actor type to :class:`SessionActor` class or instance.
        restart: actor types restarted by the supervisor when they die.
        scheduler: ``"sim"``, ``"live"`` or a scheduler instance.
        monitoring: ``"full"`` (synchronous checks), ``"async"`` (checks
            without reporting back) or ``"off"`` (routing only).

    Raises:
        StartError: the module, the config or monitor generation is invalid.
    """
    if isinstance(module, str):
        try:
            module = parse_module(module)
        except ProtocolError as exc:
            raise StartError([str(d) for d in exc.diagnostics]) from exc
    bad = errors(validate(module))
    if bad:
        raise StartError([str(d) for d in bad])
    try:
        specs = parse_config(config) if isinstance(config, str) else list(config)
    except ConfigError as exc:
        raise StartError([str(exc)]) from exc
    problems = check_config(module, specs)
    if problems:
        raise StartError(problems)
    specs = bind(specs, dict(behaviors or {}), restart)
    protocols = build_protocols(module)
    if isinstance(scheduler, Scheduler):
        sched = scheduler
    elif scheduler == "sim":
        sched = SimScheduler(seed, strict)
    elif scheduler == "live":
        sched = LiveScheduler(call_timeout)
    else:
        raise ValueError(f"unknown scheduler {scheduler!r}")
    return Runtime(sched, module, specs, protocols, monitoring)
