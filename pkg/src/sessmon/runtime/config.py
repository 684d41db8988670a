"""Actor configuration: which roles each actor type may play.

The text form has one row per mapping::

    # actorType  protocol  role[,role...]
    mse_chat_client  ChatServer  ClientThread
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Iterable, Optional

from ..protocol import ProtocolModule


@dataclass(frozen=True)
class ActorSpec:
    actor_type: str
    behavior: Optional[Any] = None
    capabilities: tuple[tuple[str, tuple[str, ...]], ...] = ()
    restart: bool = False

    def can_play(self, protocol: str, role: str) -> bool:
        return any(p == protocol and role in roles for p, roles in self.capabilities)

    def pairs(self) -> list[tuple[str, str]]:
        return [(p, r) for p, roles in self.capabilities for r in roles]


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> list[ActorSpec]:
    """Parse config rows, merging rows for the same actor type in order."""
    order: list[str] = []
    caps: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"line {lineno}: expected 'actorType protocol role[,role...]'")
        actor_type, protocol, roles = parts
        role_list = tuple(r for r in roles.split(",") if r)
        if not role_list:
            raise ConfigError(f"line {lineno}: no roles given")
        if actor_type not in caps:
            order.append(actor_type)
            caps[actor_type] = []
        caps[actor_type].append((protocol, role_list))
    return [ActorSpec(t, None, tuple(caps[t])) for t in order]


def format_config(specs: Iterable[ActorSpec]) -> str:
    return "".join(f"{s.actor_type} {p} {','.join(roles)}\n"
                   for s in specs for p, roles in s.capabilities)


def check_config(module: ProtocolModule, specs: Iterable[ActorSpec]) -> list[str]:
    problems = []
    seen = set()
    for spec in specs:
        if spec.actor_type in seen:
            problems.append(f"actor type {spec.actor_type!r} configured twice")
        seen.add(spec.actor_type)
        for protocol, role in spec.pairs():
            if protocol not in module:
                problems.append(f"{spec.actor_type}: unknown protocol {protocol!r}")
            elif role not in module[protocol].roles:
                problems.append(f"{spec.actor_type}: protocol {protocol!r} has no role {role!r}")
    return problems


def bind(specs: Iterable[ActorSpec], behaviors: dict[str, Any],
         restart: Iterable[str] = ()) -> list[ActorSpec]:
    """Attach behaviours (and restart policy) to parsed specs by actor type."""
    restart = set(restart)
    return [replace(s, behavior=behaviors.get(s.actor_type, s.behavior),
                    restart=s.restart or s.actor_type in restart) for s in specs]


