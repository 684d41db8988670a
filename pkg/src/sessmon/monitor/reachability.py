"""Which roles a monitor may still communicate with.

For each state the table holds every peer labelling a transition on some
path out of that state. Nested machines get their own tables; a ``par``
state reached again by a later edge also contributes the roles of its
blocks, since a fresh copy of them will run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fsm import MonitorFsm, MonitorState, StateId


@dataclass(eq=False)
class ReachabilityTable:
    roles: dict[StateId, frozenset[str]]
    children: dict[StateId, tuple[ReachabilityTable, ...]] = field(default_factory=dict)

    def all_roles(self) -> frozenset[str]:
        out: set[str] = set()
        for rs in self.roles.values():
            out |= rs
        for kids in self.children.values():
            for kid in kids:
                out |= kid.all_roles()
        return frozenset(out)

    def as_dict(self) -> dict[StateId, list[str]]:
        return {s: sorted(rs) for s, rs in sorted(self.roles.items())}


def _successors(fsm: MonitorFsm, s: StateId) -> list[StateId]:
    out = [t.target for t in fsm.outgoing(s)]
    if s in fsm.par_exits:
        out.append(fsm.par_exits[s])
    return out


def compute_reachability(fsm: MonitorFsm) -> ReachabilityTable:
    kid_tables = {s: tuple(compute_reachability(k) for k in kids)
                  for s, kids in fsm.children.items()}
    kid_roles = {s: frozenset().union(*(k.all_roles() for k in ks))
                 for s, ks in kid_tables.items()}
    roles: dict[StateId, frozenset[str]] = {}
    for s in fsm.states:
        # Everything reachable by one or more edges.
        seen: set[StateId] = set()
        frontier = _successors(fsm, s)
        while frontier:
            n = frontier.pop()
            if n not in seen:
                seen.add(n)
                frontier.extend(_successors(fsm, n))
        acc: set[str] = set()
        for n in seen | {s}:
            for t in fsm.outgoing(n):
                acc |= t.peers
        for n in seen:
            acc |= kid_roles.get(n, frozenset())
        roles[s] = frozenset(acc)
    return ReachabilityTable(roles, kid_tables)


def involved(table: ReachabilityTable, st: MonitorState, role: str) -> bool:
    """Whether ``role`` may still take part, given the current monitor state."""
    if role in table.roles[st.outer]:
        return True
    return any(involved(kt, ks, role)
               for kt, ks in zip(table.children.get(st.outer, ()), st.children))


def involved_roles(table: ReachabilityTable, st: MonitorState) -> frozenset[str]:
    out = set(table.roles[st.outer])
    for kt, ks in zip(table.children.get(st.outer, ()), st.children):
        out |= involved_roles(kt, ks)
    return frozenset(out)
