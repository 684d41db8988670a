"""The protocol registry and the actor registry processes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..actors import Down, Pid, Process
from ..monitor import MonitorFsm, ReachabilityTable


@dataclass(frozen=True)
class ProtocolInfo:
    name: str
    roles: tuple[str, ...]
    monitors: Mapping[str, tuple[MonitorFsm, ReachabilityTable]]


@dataclass(frozen=True)
class GetProtocol:
    name: str


@dataclass(frozen=True)
class RegisterActor:
    pid: Pid
    pairs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Lookup:
    protocol: str
    role: str


class ProtocolRegistry(Process):
    """Precomputed monitors for every (protocol, role), filled once at start."""

    def __init__(self, protocols: Mapping[str, ProtocolInfo]):
        self.protocols = dict(protocols)

    def handle_call(self, req):
        if isinstance(req, GetProtocol):
            return self.protocols.get(req.name)
        raise TypeError(f"unexpected request {req!r}")

    def entry_count(self) -> int:
        return sum(len(info.monitors) for info in self.protocols.values())


class ActorRegistry(Process):
    """Protocol → role → actor pids, in spawn order."""

    def __init__(self) -> None:
        self.table: dict[str, dict[str, list[Pid]]] = {}

    def handle_call(self, req):
        if isinstance(req, RegisterActor):
            for protocol, role in req.pairs:
                self.table.setdefault(protocol, {}).setdefault(role, []).append(req.pid)
            if req.pairs:
                self.sched.watch(self.pid, req.pid)
            return True
        if isinstance(req, Lookup):
            return tuple(self.table.get(req.protocol, {}).get(req.role, ()))
        raise TypeError(f"unexpected request {req!r}")

    def handle(self, msg) -> None:
        if isinstance(msg, Down):
            self.deregister(msg.pid)
        else:
            raise TypeError(f"unexpected message {msg!r}")

    def deregister(self, pid: Pid) -> None:
        for roles in self.table.values():
            for pids in roles.values():
                while pid in pids:
                    pids.remove(pid)

    def pids(self) -> set[Pid]:
        return {p for roles in self.table.values() for pids in roles.values() for p in pids}
