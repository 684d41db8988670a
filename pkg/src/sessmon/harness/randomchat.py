"""Seeded random chat runs and the callback-lifecycle checker.

Every participant of every session must see, in order::

    on_join?  on_established  (message | become | subsession outcome)*  (on_ended | on_error)

An invitation may also end at a declined ``on_join``, and a joiner whose
session never got established sees ``on_error`` straight after ``on_join``.
A participant whose actor died may stop anywhere.
"""

from __future__ import annotations

import random
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from ..runtime import Runtime
from ..trace import TraceRecord
from . import chat

LIFECYCLE_KINDS = {
    "on_join": "J",
    "on_established": "E",
    "on_message": "M",
    "on_become": "B",
    "on_subsession_complete": "S",
    "on_subsession_failed": "S",
    "on_subsession_setup_failed": "S",
    "on_ended": "X",
    "on_error": "X",
}

_COMPLETE = re.compile(r"^(J?E[MBS]*X|J?X|D)$")
_PREFIX = re.compile(r"^(J?(E[MBS]*)?|D)$")

ROOMS = ("lobby", "dev", "ops")
WORDS = ("hi", "hello there", "bye", "ok", "lunch?")


@dataclass
class LifecycleReport:
    sequences: dict[tuple[int, str], str]
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_lifecycle(records: Iterable[TraceRecord]) -> LifecycleReport:
    """Check the callback order of every (session, participant) in a trace."""
    seqs: dict[tuple[int, str], str] = defaultdict(str)
    dead: set[str] = set()
    for rec in records:
        if rec.kind == "exit":
            dead.add(rec.sender)
            continue
        code = LIFECYCLE_KINDS.get(rec.kind)
        if code is None or rec.sid is None:
            continue
        if rec.kind == "on_join" and rec.outcome == "decline":
            code = "D"
        seqs[(rec.sid, rec.sender)] += code
    report = LifecycleReport(dict(seqs))
    for (sid, who), seq in sorted(seqs.items()):
        if _COMPLETE.match(seq):
            continue
        pid = who.rpartition("@")[2]
        if pid in dead and _PREFIX.match(seq):
            continue
        report.violations.append(f"session {sid} {who}: {seq}")
    return report


@dataclass
class RandomRun:
    seed: int
    runtime: Runtime
    lifecycle: LifecycleReport
    commands: list[str]


def random_chat_run(seed: int, clients: int = 3, rounds: int = 12,
                    kill_rate: float = 0.08) -> RandomRun:
    """Drive a chat system with random commands, kicks and kills, then shut down."""
    rng = random.Random(seed)
    rt = chat.start(seed=seed)
    rt.spawn_actor("mse_chat_room_manager")
    rt.spawn_actor("mse_chat_logger")
    pids = [rt.spawn_actor("mse_chat_client", [f"c{i}"]) for i in range(clients)]
    commands: list[str] = []
    for _ in range(rounds):
        alive = [p for p in pids if rt.sched.is_alive(p)]
        for pid in alive:
            for _ in range(rng.randint(0, 2)):
                cmd = rng.choice([
                    f"CREATE:{rng.choice(ROOMS)}", f"JOIN:{rng.choice(ROOMS)}", "LIST",
                    f"CHAT:{rng.choice(WORDS)}", f"CHAT:{rng.choice(WORDS)}", "LEAVE", "BAD",
                ])
                commands.append(f"{pid} {cmd}")
                rt.inject(pid, cmd)
        for _ in range(rng.randint(1, 40)):
            if not rt.sched.step():
                break
        roll = rng.random()
        if roll < kill_rate:
            room = rng.choice(ROOMS)
            try:
                target = chat.resolve(rt, f"room:{room}")
            except KeyError:
                continue
            if rt.sched.is_alive(target):
                commands.append(f"kill room:{room}")
                rt.kill(target)
        elif roll < 2 * kill_rate:
            room = rng.choice(ROOMS)
            try:
                target = chat.resolve(rt, f"room:{room}")
            except KeyError:
                continue
            commands.append(f"kick room:{room}")
            rt.inject(target, "KICK")
        elif roll < 2.5 * kill_rate and len(alive) > 1:
            victim = rng.choice(alive)
            commands.append(f"kill {victim}")
            rt.kill(victim)
    rt.run()
    rt.shutdown()
    return RandomRun(seed, rt, check_lifecycle(rt.trace), commands)
