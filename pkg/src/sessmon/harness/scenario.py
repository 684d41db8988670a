"""Scripted simulation scenarios.

A scenario file has one action per line; ``#`` starts a comment::

    name    chat_leave
    app     chat
    seed    7
    spawn   mgr   mse_chat_room_manager
    spawn   alice mse_chat_client alice
    input   alice CREATE:lobby
    run
    kill    @room:lobby
    expect  kind=on_subsession_failed label=ChatSession outcome=ParticipantOffline

Actions:

``spawn ALIAS TYPE [ARGS...]``
    spawn an actor and name its pid ``ALIAS``.
``input ALIAS TEXT``
    deliver external input (the rest of the line) to an actor.
``run`` / ``step N`` / ``advance N``
    run until idle, deliver N messages, or move logical time forward.
``until FIELD=VALUE...``
    deliver messages until a matching trace record appears.
``kill TARGET``
    kill an actor. ``TARGET`` is an alias or an application reference
    such as ``@room:lobby``.
``expect``, ``expect-none``, ``expect-count N``
    check the trace. Conditions are ``field=value``, ``field~substring``
    or ``field!=value``; ``$ALIAS`` in a value stands for that actor's pid.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from types import ModuleType
from typing import Optional

from ..runtime import Runtime
from ..trace import FIELDS, TraceRecord
from . import chat, dns

APPS: dict[str, ModuleType] = {"chat": chat, "dns": dns}

VERBS = {"name", "app", "seed", "monitoring", "spawn", "input", "run", "step", "advance",
         "until", "kill", "expect", "expect-none", "expect-count"}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    verb: str
    args: tuple[str, ...]
    line: int
    rest: str = ""


@dataclass
class Scenario:
    name: str = "scenario"
    app: str = "chat"
    seed: int = 0
    monitoring: str = "full"
    actions: list[Action] = field(default_factory=list)


@dataclass
class ScenarioResult:
    scenario: Scenario
    seed: int
    runtime: Runtime
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def trace_text(self) -> str:
        return self.runtime.trace.text()


def parse_scenario(text: str) -> Scenario:
    scn = Scenario()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        verb, _, rest = line.partition(" ")
        verb = verb.lower()
        if verb not in VERBS:
            raise ScenarioError(f"line {lineno}: unknown action {verb!r}")
        rest = rest.strip()
        if verb == "input":
            alias, _, payload = rest.partition(" ")
            args = (alias, payload.strip())
        else:
            args = tuple(shlex.split(rest))
        if verb == "name":
            scn.name = rest
        elif verb == "app":
            if rest not in APPS:
                raise ScenarioError(f"line {lineno}: unknown app {rest!r}")
            scn.app = rest
        elif verb == "seed":
            scn.seed = int(rest)
        elif verb == "monitoring":
            scn.monitoring = rest
        else:
            scn.actions.append(Action(verb, args, lineno, rest))
    return scn


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


_COND = re.compile(r"^(\w+)(!=|=|~)(.*)$")


@dataclass(frozen=True)
class Condition:
    name: str
    op: str
    value: str

    def holds(self, rec: TraceRecord) -> bool:
        got = rec.get(self.name)
        if self.op == "=":
            return got == self.value
        if self.op == "!=":
            return got != self.value
        return self.value in got


def parse_conditions(args, aliases: dict[str, int]) -> list[Condition]:
    out = []
    for arg in args:
        m = _COND.match(arg)
        if not m or m.group(1) not in FIELDS:
            raise ScenarioError(f"bad condition {arg!r}")
        value = re.sub(r"\$(\w+)", lambda g: str(aliases.get(g.group(1), g.group(0))),
                       m.group(3))
        out.append(Condition(m.group(1), m.group(2), value))
    return out


def matching(rt: Runtime, conds: list[Condition]) -> list[TraceRecord]:
    return [r for r in rt.trace if all(c.holds(r) for c in conds)]


def run_scenario(scn: Scenario, seed: Optional[int] = None,
                 max_steps: int = 200_000) -> ScenarioResult:
    """Replay ``scn``; the same seed always yields the same trace."""
    app = APPS[scn.app]
    seed = scn.seed if seed is None else seed
    rt = app.start(seed=seed, monitoring=scn.monitoring)
    aliases: dict[str, int] = {}
    failures: list[str] = []

    def target(ref: str) -> int:
        if ref.startswith("@"):
            return app.resolve(rt, ref[1:])
        if ref in aliases:
            return aliases[ref]
        raise ScenarioError(f"unknown actor {ref!r}")

    for act in scn.actions:
        where = f"line {act.line}"
        try:
            if act.verb == "spawn":
                alias, actor_type, *args = act.args
                aliases[alias] = rt.spawn_actor(actor_type, args)
            elif act.verb == "input":
                rt.inject(target(act.args[0]), act.args[1])
            elif act.verb == "run":
                rt.sched.run(max_steps)
            elif act.verb == "step":
                for _ in range(int(act.args[0])):
                    rt.sched.step()
            elif act.verb == "advance":
                rt.sched.advance(int(act.args[0]))
            elif act.verb == "until":
                conds = parse_conditions(act.args, aliases)
                for _ in range(max_steps):
                    if matching(rt, conds) or not rt.sched.step():
                        break
                if not matching(rt, conds):
                    failures.append(f"{where}: never saw {act.rest}")
            elif act.verb == "kill":
                rt.kill(target(act.args[0]))
            elif act.verb == "expect":
                if not matching(rt, parse_conditions(act.args, aliases)):
                    failures.append(f"{where}: expected a record with {act.rest}")
            elif act.verb == "expect-none":
                found = matching(rt, parse_conditions(act.args, aliases))
                if found:
                    failures.append(f"{where}: unexpected record {found[0].to_line()!r}")
            elif act.verb == "expect-count":
                want = int(act.args[0])
                got = len(matching(rt, parse_conditions(act.args[1:], aliases)))
                if got != want:
                    failures.append(f"{where}: expected {want} records with "
                                    f"{' '.join(act.args[1:])}, found {got}")
        except (KeyError, ValueError, IndexError) as exc:
            failures.append(f"{where}: {act.verb} failed: {exc}")
    return ScenarioResult(scn, seed, rt, failures)


def corpus_scenarios() -> list[Path]:
    """Scenario files shipped with the package."""
    from importlib.resources import files

    root = files("sessmon.corpus").joinpath("scenarios")
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".scn"))
