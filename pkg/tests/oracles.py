"""Independent oracles for the monitor tests.

Nothing here uses the FSM builder or the reachability code:

* :func:`interpreter_language` runs a local type directly, unfolding ``rec``
  by substitution and tracking sets of configurations.
* :func:`path_roles` finds peers by enumerating edge-simple paths through a
  generated machine.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from importlib.resources import files
from typing import Iterable, Union

from sessmon.monitor import CommEvent, MonitorFsm
from sessmon.projection import (
    ExternalChoice,
    InitiatesLocal,
    InternalChoice,
    LocalContinue,
    LocalEnd,
    LocalPar,
    LocalRec,
    LocalType,
    Recv,
    Send,
    nodes,
)
from sessmon.protocol import load_module

CORPUS_FILES = ("chat.scr", "chat_logged.scr", "dns.scr", "twobuyer.scr", "multicast.scr",
                "pingpong.scr")


def corpus_source(name: str) -> str:
    return files("sessmon.corpus").joinpath(name).read_text(encoding="utf-8")


def corpus_modules():
    return {name: load_module(corpus_source(name)) for name in CORPUS_FILES}


# LocalType interpreter.

def substitute(t: LocalType, label: str, rec: LocalRec) -> LocalType:
    """Replace free ``continue label`` in ``t`` by ``rec``."""
    if isinstance(t, LocalContinue):
        return rec if t.label == label else t
    if isinstance(t, LocalRec) and t.label == label:
        return t
    changes = {}
    for f in fields(t):
        value = getattr(t, f.name)
        if f.name == "handlers":
            changes[f.name] = tuple((k, substitute(v, label, rec)) for k, v in value)
        elif f.name in ("branches", "blocks"):
            changes[f.name] = tuple(substitute(v, label, rec) for v in value)
        elif f.name in ("cont", "body", "success"):
            changes[f.name] = substitute(value, label, rec)
    return replace(t, **changes) if changes else t


@dataclass(frozen=True)
class ParConfig:
    blocks: tuple
    cont: LocalType


@dataclass(frozen=True)
class WaitConfig:
    node: InitiatesLocal


Config = Union[LocalType, ParConfig, WaitConfig]


def _initiate_event(t: InitiatesLocal) -> CommEvent:
    peers = frozenset(p for p, _ in t.internal if p != t.initiator)
    sorts = tuple(f"{p}->{c}" for p, c in t.internal) + tuple(f"new {e}" for e in t.external)
    return CommEvent("initiate", peers, t.child, sorts)


def _outcome_event(observers, failure) -> CommEvent:
    label = "$subsession_ok" if failure is None else f"$subsession_fail:{failure}"
    return CommEvent("outcome", frozenset(observers), label, ())


def normalize(c: Config) -> Config:
    if isinstance(c, LocalPar):
        c = ParConfig(tuple(normalize(b) for b in c.blocks), c.cont)
    if isinstance(c, ParConfig) and all(isinstance(b, LocalEnd) for b in c.blocks):
        return normalize(c.cont)
    return c


def moves(c: Config) -> list[tuple[CommEvent, Config]]:
    if isinstance(c, LocalEnd):
        return []
    if isinstance(c, Send):
        return [(CommEvent("send", frozenset(c.to), c.label, c.sorts), normalize(c.cont))]
    if isinstance(c, Recv):
        return [(CommEvent("receive", frozenset([c.sender]), c.label, c.sorts),
                 normalize(c.cont))]
    if isinstance(c, (InternalChoice, ExternalChoice)):
        return [m for b in c.branches for m in moves(b)]
    if isinstance(c, LocalRec):
        return moves(substitute(c.body, c.label, c))
    if isinstance(c, LocalPar):
        return moves(normalize(c))
    if isinstance(c, ParConfig):
        out = []
        for i, b in enumerate(c.blocks):
            for ev, nxt in moves(b):
                blocks = c.blocks[:i] + (nxt,) + c.blocks[i + 1:]
                out.append((ev, normalize(ParConfig(blocks, c.cont))))
        return out
    if isinstance(c, InitiatesLocal):
        return [(_initiate_event(c), WaitConfig(c))]
    if isinstance(c, WaitConfig):
        n = c.node
        out = [(_outcome_event(n.observers, None), normalize(n.success))]
        out += [(_outcome_event(n.observers, f), normalize(h)) for f, h in n.handlers]
        return out
    if isinstance(c, LocalContinue):
        raise ValueError(f"unguarded continue {c.label}")
    raise TypeError(c)


def alphabet(local: LocalType) -> list[CommEvent]:
    """Every event named in ``local``, plus near-miss decoys."""
    real: list[CommEvent] = []
    for n in nodes(local):
        if isinstance(n, Send):
            real.append(CommEvent("send", frozenset(n.to), n.label, n.sorts))
        elif isinstance(n, Recv):
            real.append(CommEvent("receive", frozenset([n.sender]), n.label, n.sorts))
        elif isinstance(n, InitiatesLocal):
            real.append(_initiate_event(n))
            real.append(_outcome_event(n.observers, None))
            real += [_outcome_event(n.observers, f) for f, _ in n.handlers]
    decoys: list[CommEvent] = []
    for ev in real:
        flipped = {"send": "receive", "receive": "send"}.get(ev.direction)
        if flipped and (flipped == "send" or len(ev.peers) == 1):
            decoys.append(CommEvent(flipped, ev.peers, ev.label, ev.sorts))
        decoys.append(CommEvent(ev.direction, ev.peers | {"Stranger"}, ev.label, ev.sorts))
        decoys.append(CommEvent(ev.direction, ev.peers, ev.label, ev.sorts + ("Extra",)))
    out: list[CommEvent] = []
    for ev in real + decoys:
        if ev not in out:
            out.append(ev)
    return out


def interpreter_language(local: LocalType, events: Iterable[CommEvent],
                         max_len: int) -> set[tuple[CommEvent, ...]]:
    """Event strings of length <= ``max_len`` the local type allows."""
    events = list(events)
    accepted = {()}
    frontier = [((), frozenset([normalize(local)]))]
    for _ in range(max_len):
        nxt_frontier = []
        for word, configs in frontier:
            options = [m for c in configs for m in moves(c)]
            for ev in events:
                targets = frozenset(c for e, c in options if e == ev)
                if targets:
                    w = word + (ev,)
                    accepted.add(w)
                    nxt_frontier.append((w, targets))
        frontier = nxt_frontier
    return accepted


def monitor_language(fsm: MonitorFsm, events: Iterable[CommEvent],
                     max_len: int) -> set[tuple[CommEvent, ...]]:
    from sessmon.monitor import MonitorState, initial_state, step

    events = list(events)
    accepted = {()}
    frontier = [((), initial_state(fsm))]
    for _ in range(max_len):
        nxt_frontier = []
        for word, st in frontier:
            for ev in events:
                res = step(fsm, st, ev)
                if isinstance(res, MonitorState):
                    w = word + (ev,)
                    accepted.add(w)
                    nxt_frontier.append((w, res))
        frontier = nxt_frontier
    return accepted


# Reachability by path search.

def _edges(fsm: MonitorFsm) -> list[tuple[int, int, frozenset[str]]]:
    out = [(t.source, t.target, t.peers) for t in fsm.transitions]
    out += [(s, e, frozenset()) for s, e in fsm.par_exits.items()]
    return out


def nested_roles(fsm: MonitorFsm) -> frozenset[str]:
    """Every peer of every transition in ``fsm`` and the machines nested in it."""
    out: set[str] = set()
    for t in fsm.transitions:
        out |= t.peers
    for kids in fsm.children.values():
        for kid in kids:
            out |= nested_roles(kid)
    return frozenset(out)


def path_roles(fsm: MonitorFsm, start: int) -> frozenset[str]:
    """Peers met on some edge-simple path from ``start``.

    A ``par`` state entered along a path adds every role its blocks use.
    """
    edges = _edges(fsm)
    found: set[str] = set()

    def walk(state: int, used: frozenset[int]) -> None:
        for i, (src, dst, peers) in enumerate(edges):
            if src != state or i in used:
                continue
            found.update(peers)
            for kid in fsm.children.get(dst, ()):
                found.update(nested_roles(kid))
            walk(dst, used | {i})

    walk(start, frozenset())
    return frozenset(found)
