"""Opaque keys handed to user code."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..actors import Pid


@dataclass(frozen=True)
class InitKey:
    """Given to ``on_init``; lets an actor start sessions and switch roles."""

    actor_pid: Pid
    monitor_pid: Pid
    runtime: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ConvKey:
    """Session key: (monitor process, role, coordinator) plus the session id."""

    monitor_pid: Pid
    role: str
    coordinator_pid: Pid
    session_id: int
    runtime: Any = field(default=None, compare=False, repr=False)
