"""Abstract syntax for global protocols.

Nodes are immutable. ``Choice``, ``Rec`` and ``Initiates`` keep an explicit
``cont`` holding whatever follows them in the source, so a parsed module can
be printed back token-for-token. :func:`flatten` pushes those continuations
into the branches, producing the normal form used by projection, where only
``Interaction`` and ``Par`` carry continuations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

PARTICIPANT_OFFLINE = "ParticipantOffline"

Loc = tuple[int, int]


@dataclass(frozen=True)
class End:
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Interaction:
    label: str
    sorts: tuple[str, ...]
    sender: str
    receivers: tuple[str, ...]
    cont: GlobalBody = End()
    loc: Loc = field(default=(0, 0), compare=False, repr=False)

    @property
    def receiver_set(self) -> frozenset[str]:
        return frozenset(self.receivers)


@dataclass(frozen=True)
class Choice:
    at: str
    branches: tuple[GlobalBody, ...]
    cont: GlobalBody = End()
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Rec:
    label: str
    body: GlobalBody
    cont: GlobalBody = End()
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Continue:
    label: str
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Par:
    blocks: tuple[GlobalBody, ...]
    cont: GlobalBody = End()
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class InitArg:
    name: str
    new: bool = False


@dataclass(frozen=True)
class Initiates:
    """``initiator initiates child(args) { success } handle(F) { ... }``.

    ``args`` are positional: the i-th argument fills the i-th role of the
    child protocol. Plain arguments carry a parent role into the child; ``new``
    arguments are filled by invitation.
    """

    initiator: str
    child: str
    args: tuple[InitArg, ...]
    success: GlobalBody = End()
    handlers: tuple[tuple[str, GlobalBody], ...] = ()
    has_block: bool = False
    cont: GlobalBody = End()
    loc: Loc = field(default=(0, 0), compare=False, repr=False)

    @property
    def internal_args(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.args if not a.new)

    @property
    def external_roles(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.args if a.new)

    @property
    def failure_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.handlers)


GlobalBody = Union[Interaction, Choice, Rec, Continue, Par, Initiates, End]


@dataclass(frozen=True)
class GlobalProtocol:
    name: str
    roles: tuple[str, ...]
    body: GlobalBody
    loc: Loc = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class ProtocolModule:
    protocols: dict[str, GlobalProtocol]

    def __getitem__(self, name: str) -> GlobalProtocol:
        return self.protocols[name]

    def __contains__(self, name: object) -> bool:
        return name in self.protocols

    def __iter__(self) -> Iterator[GlobalProtocol]:
        return iter(self.protocols.values())

    def __hash__(self) -> int:
        return hash(tuple(self.protocols))


def roles_of(protocol: GlobalProtocol) -> list[str]:
    """Declared roles in declaration order."""
    return list(protocol.roles)


def flatten(body: GlobalBody, rest: GlobalBody = End()) -> GlobalBody:
    """Sequence ``body`` before ``rest`` and push continuations into branches.

    ``rest`` replaces every ``End`` leaf reachable without crossing a
    ``Continue``. Par blocks are flattened on their own; ``rest`` goes after
    the par's continuation.
    """
    if isinstance(body, End):
        return rest
    if isinstance(body, Continue):
        return body
    if isinstance(body, Interaction):
        return Interaction(body.label, body.sorts, body.sender, body.receivers,
                           flatten(body.cont, rest), body.loc)
    if isinstance(body, Choice):
        after = flatten(body.cont, rest)
        return Choice(body.at, tuple(flatten(b, after) for b in body.branches),
                      End(), body.loc)
    if isinstance(body, Rec):
        return Rec(body.label, flatten(body.body, flatten(body.cont, rest)), End(), body.loc)
    if isinstance(body, Par):
        return Par(tuple(flatten(b) for b in body.blocks), flatten(body.cont, rest), body.loc)
    if isinstance(body, Initiates):
        after = flatten(body.cont, rest)
        return Initiates(
            body.initiator, body.child, body.args,
            flatten(body.success, after),
            tuple((name, flatten(h, after)) for name, h in body.handlers),
            body.has_block, End(), body.loc,
        )
    raise TypeError(f"not a global body: {body!r}")


def walk(body: GlobalBody) -> Iterator[GlobalBody]:
    """Pre-order traversal of every node, continuations included."""
    stack = [body]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Interaction):
            stack.append(node.cont)
        elif isinstance(node, Choice):
            stack.append(node.cont)
            stack.extend(reversed(node.branches))
        elif isinstance(node, Rec):
            stack.append(node.cont)
            stack.append(node.body)
        elif isinstance(node, Par):
            stack.append(node.cont)
            stack.extend(reversed(node.blocks))
        elif isinstance(node, Initiates):
            stack.append(node.cont)
            stack.extend(reversed([h for _, h in node.handlers]))
            stack.append(node.success)


def roles_mentioned(body: GlobalBody) -> set[str]:
    """Roles named anywhere in ``body`` (senders, receivers, deciders, initiators)."""
    found: set[str] = set()
    for node in walk(body):
        if isinstance(node, Interaction):
            found.add(node.sender)
            found.update(node.receivers)
        elif isinstance(node, Choice):
            found.add(node.at)
        elif isinstance(node, Initiates):
            found.add(node.initiator)
            found.update(node.internal_args)
    return found


def interactions(body: GlobalBody) -> Iterator[Interaction]:
    for node in walk(body):
        if isinstance(node, Interaction):
            yield node
