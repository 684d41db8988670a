"""Communicating finite-state monitors generated from local types.

A ``par`` compiles to a single outer state carrying one nested machine per
block; the outer machine leaves that state through an internal completion
edge once every nested machine is terminal. Nothing is built for the product
of the blocks, so the outer machine stays linear in the local type.

Two transition kinds beyond send/receive model subsessions on the initiator
side: ``initiate`` (starting the child protocol; the transition's ``sorts``
hold the role arguments) and ``outcome`` (the child's result, announced to
the observer roles in ``peers``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

from ..projection import (
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
    outcome_label,
)

Direction = Literal["send", "receive", "initiate", "outcome"]
StateId = int


class MonitorGenerationError(Exception):
    pass


@dataclass(frozen=True)
class Transition:
    source: StateId
    target: StateId
    direction: Direction
    peers: frozenset[str]
    label: str
    sorts: tuple[str, ...] = ()

    def matches(self, ev: CommEvent) -> bool:
        if (self.direction != ev.direction or self.label != ev.label
                or self.peers != ev.peers or len(self.sorts) != ev.arity):
            return False
        return all(s is None or s == want for s, want in zip(ev.sorts, self.sorts))

    def describe(self) -> str:
        return describe_edge(self.direction, self.peers, self.label, self.sorts)


def describe_edge(direction: str, peers: Iterable[str], label: str,
                  sorts: Iterable[Optional[str]] = ()) -> str:
    who = ",".join(sorted(peers))
    if direction == "send":
        return f"!{label}@{who}"
    if direction == "receive":
        return f"?{label}@{who}"
    if direction == "initiate":
        return f"^{label}({', '.join(s or '_' for s in sorts)})"
    return f"~{label}@{who}" if who else f"~{label}"


@dataclass(frozen=True)
class CommEvent:
    """One observed communication action, checked against a transition.

    A ``None`` entry in ``sorts`` is a payload value without a sort name;
    only its position counts.
    """

    direction: Direction
    peers: frozenset[str]
    label: str
    sorts: tuple[Optional[str], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.sorts)

    @classmethod
    def send(cls, to: Iterable[str], label: str, sorts: Iterable[Optional[str]] = ()):
        return cls("send", frozenset(to), label, tuple(sorts))

    @classmethod
    def receive(cls, sender: str, label: str, sorts: Iterable[Optional[str]] = ()):
        return cls("receive", frozenset([sender]), label, tuple(sorts))

    def describe(self) -> str:
        return describe_edge(self.direction, self.peers, self.label, self.sorts)


@dataclass(eq=False)
class MonitorFsm:
    states: frozenset[StateId]
    initial: StateId
    terminals: frozenset[StateId]
    transitions: tuple[Transition, ...]
    children: dict[StateId, tuple[MonitorFsm, ...]] = field(default_factory=dict)
    par_exits: dict[StateId, StateId] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._out: dict[StateId, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            self._out[t.source].append(t)

    def outgoing(self, state: StateId) -> list[Transition]:
        return self._out[state]

    def nested(self) -> Iterable[MonitorFsm]:
        for kids in self.children.values():
            for kid in kids:
                yield kid
                yield from kid.nested()


@dataclass(frozen=True)
class MonitorState:
    outer: StateId
    children: tuple[MonitorState, ...] = ()


@dataclass(frozen=True)
class Violation:
    event: CommEvent
    expected: tuple[Transition, ...]

    def __str__(self) -> str:
        wanted = ", ".join(t.describe() for t in self.expected) or "nothing"
        return f"unexpected {self.event.describe()}; expected {wanted}"


def initiate_args(internal: Iterable[tuple[str, str]], external: Iterable[str]) -> tuple[str, ...]:
    """Encoding of ``initiates`` role arguments carried in transition sorts."""
    return tuple(f"{p}->{c}" for p, c in internal) + tuple(f"new {e}" for e in external)


class _Builder:
    def __init__(self) -> None:
        self.next_id = 0
        self.transitions: list[Transition] = []
        self.terminals: set[StateId] = set()
        self.children: dict[StateId, tuple[MonitorFsm, ...]] = {}
        self.par_exits: dict[StateId, StateId] = {}
        self.end_state: Optional[StateId] = None

    def new(self) -> StateId:
        s = self.next_id
        self.next_id += 1
        return s

    def end(self) -> StateId:
        if self.end_state is None:
            self.end_state = self.new()
            self.terminals.add(self.end_state)
        return self.end_state

    def entry(self, t: LocalType, env: dict[str, StateId]) -> StateId:
        if isinstance(t, LocalEnd):
            return self.end()
        if isinstance(t, LocalContinue):
            try:
                return env[t.label]
            except KeyError:
                raise MonitorGenerationError(f"unbound continue {t.label!r}") from None
        s = self.new()
        self.build_from(t, s, env)
        return s

    def add(self, source, target, direction, peers, label, sorts) -> None:
        self.transitions.append(Transition(source, target, direction, frozenset(peers),
                                           label, tuple(sorts)))

    def build_from(self, t: LocalType, s: StateId, env: dict[str, StateId]) -> None:
        if isinstance(t, LocalEnd):
            self.terminals.add(s)
        elif isinstance(t, Send):
            self.add(s, self.entry(t.cont, env), "send", t.to, t.label, t.sorts)
        elif isinstance(t, Recv):
            self.add(s, self.entry(t.cont, env), "receive", [t.sender], t.label, t.sorts)
        elif isinstance(t, (InternalChoice, ExternalChoice)):
            for branch in t.branches:
                self.build_from(branch, s, env)
        elif isinstance(t, LocalRec):
            self.build_from(t.body, s, {**env, t.label: s})
        elif isinstance(t, LocalPar):
            self.children[s] = tuple(generate_monitor(b) for b in t.blocks)
            self.par_exits[s] = self.entry(t.cont, env)
        elif isinstance(t, InitiatesLocal):
            wait = self.new()
            self.add(s, wait, "initiate", [p for p, _ in t.internal if p != t.initiator],
                     t.child,
                     initiate_args(t.internal, t.external))
            self.add(wait, self.entry(t.success, env), "outcome", t.observers,
                     outcome_label(None), ())
            for failure, handler in t.handlers:
                self.add(wait, self.entry(handler, env), "outcome", t.observers,
                         outcome_label(failure), ())
        elif isinstance(t, LocalContinue):
            raise MonitorGenerationError(
                f"continue {t.label!r} is not guarded by any action")
        else:
            raise TypeError(f"not a local type: {t!r}")


def generate_monitor(local: LocalType) -> MonitorFsm:
    """Compile a local type to a monitor.

    Raises:
        MonitorGenerationError: if two transitions leaving one state share
            direction, peers and label, or a ``continue`` is unguarded.
    """
    b = _Builder()
    initial = b.entry(local, {})
    fsm = MonitorFsm(
        states=frozenset(range(b.next_id)),
        initial=initial,
        terminals=frozenset(b.terminals),
        transitions=tuple(b.transitions),
        children=b.children,
        par_exits=b.par_exits,
    )
    for s in fsm.states:
        seen: dict[tuple, Transition] = {}
        for t in fsm.outgoing(s):
            key = (t.direction, t.peers, t.label)
            if key in seen:
                raise MonitorGenerationError(
                    f"nondeterministic local type: two transitions {t.describe()} "
                    f"leave state {s}")
            seen[key] = t
    return fsm


def is_terminal(fsm: MonitorFsm, st: MonitorState) -> bool:
    return st.outer in fsm.terminals and not fsm.children.get(st.outer)


def enter(fsm: MonitorFsm, state: StateId) -> MonitorState:
    """The monitor state on arriving at ``state``, par completions applied."""
    seen: set[StateId] = set()
    while True:
        kids = fsm.children.get(state)
        if not kids:
            return MonitorState(state)
        st = MonitorState(state, tuple(initial_state(k) for k in kids))
        if not all(is_terminal(k, ks) for k, ks in zip(kids, st.children)) or state in seen:
            return st
        seen.add(state)
        state = fsm.par_exits[state]


def initial_state(fsm: MonitorFsm) -> MonitorState:
    return enter(fsm, fsm.initial)


def _check(fsm: MonitorFsm, st: MonitorState) -> None:
    if st.outer not in fsm.states:
        raise ValueError(f"state {st.outer} does not belong to this monitor")
    kids = fsm.children.get(st.outer, ())
    if len(kids) != len(st.children):
        raise ValueError(f"state {st.outer} expects {len(kids)} nested states, "
                         f"got {len(st.children)}")


def expected(fsm: MonitorFsm, st: MonitorState) -> tuple[Transition, ...]:
    out = list(fsm.outgoing(st.outer))
    for kid, ks in zip(fsm.children.get(st.outer, ()), st.children):
        out.extend(expected(kid, ks))
    return tuple(out)


def step(fsm: MonitorFsm, st: MonitorState, ev: CommEvent) -> MonitorState | Violation:
    """Advance ``st`` by ``ev``, or report why the event is not allowed.

    Outer transitions are tried first, then nested machines in block order.
    """
    _check(fsm, st)
    for t in fsm.outgoing(st.outer):
        if t.matches(ev):
            return enter(fsm, t.target)
    kids = fsm.children.get(st.outer, ())
    for i, (kid, ks) in enumerate(zip(kids, st.children)):
        nxt = step(kid, ks, ev)
        if isinstance(nxt, MonitorState):
            new_children = st.children[:i] + (nxt,) + st.children[i + 1:]
            if all(is_terminal(k, c) for k, c in zip(kids, new_children)):
                return enter(fsm, fsm.par_exits[st.outer])
            return MonitorState(st.outer, new_children)
    return Violation(ev, expected(fsm, st))


def accepts(fsm: MonitorFsm, events: Iterable[CommEvent]) -> bool:
    st = initial_state(fsm)
    for ev in events:
        nxt = step(fsm, st, ev)
        if isinstance(nxt, Violation):
            return False
        st = nxt
    return True


def all_transitions(fsm: MonitorFsm) -> list[Transition]:
    out = list(fsm.transitions)
    for kid in fsm.nested():
        out.extend(kid.transitions)
    return out


def dump(fsm: MonitorFsm, indent: str = "") -> str:
    """Stable text form used for golden tests."""
    lines = [f"{indent}initial {fsm.initial}; terminals "
             f"[{', '.join(map(str, sorted(fsm.terminals)))}]"]
    for s in sorted(fsm.states):
        for t in fsm.outgoing(s):
            lines.append(f"{indent}{t.source} -> {t.target} {t.describe()}")
        for i, kid in enumerate(fsm.children.get(s, ())):
            lines.append(f"{indent}{s} par block {i + 1}:")
            lines.append(dump(kid, indent + "    ").rstrip("\n"))
        if s in fsm.par_exits:
            lines.append(f"{indent}{s} -> {fsm.par_exits[s]} (par complete)")
    return "\n".join(lines) + "\n"
