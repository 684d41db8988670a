"""Projection of global protocols onto a single role.

The merge rule for roles that do not decide a choice is deliberately plain:
branch projections must be identical, or must all begin with distinct
receives, in which case they form an external choice. One relaxation: a
branch that projects to ``continue L`` while the role has done nothing since
entering ``rec L`` is dropped from the merge, because for that role the loop
simply goes round again and it keeps waiting where it is.

Subsession outcomes reach roles that appear in ``initiates`` blocks as
synthetic messages from the initiator, labelled :data:`OUTCOME_OK` or
``OUTCOME_FAIL_PREFIX + failure_name``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .protocol import ast as g

OUTCOME_OK = "$subsession_ok"
OUTCOME_FAIL_PREFIX = "$subsession_fail:"


def outcome_label(failure: str | None) -> str:
    return OUTCOME_OK if failure is None else OUTCOME_FAIL_PREFIX + failure


def is_synthetic(label: str) -> bool:
    return label.startswith("$")


class ProjectionError(Exception):
    pass


@dataclass(frozen=True)
class LocalEnd:
    pass


@dataclass(frozen=True)
class Send:
    to: frozenset[str]
    label: str
    sorts: tuple[str, ...]
    cont: LocalType = LocalEnd()


@dataclass(frozen=True)
class Recv:
    sender: str
    label: str
    sorts: tuple[str, ...]
    cont: LocalType = LocalEnd()


@dataclass(frozen=True)
class InternalChoice:
    branches: tuple[LocalType, ...]


@dataclass(frozen=True)
class ExternalChoice:
    branches: tuple[LocalType, ...]


@dataclass(frozen=True)
class LocalRec:
    label: str
    body: LocalType


@dataclass(frozen=True)
class LocalContinue:
    label: str


@dataclass(frozen=True)
class LocalPar:
    blocks: tuple[LocalType, ...]
    cont: LocalType = LocalEnd()


@dataclass(frozen=True)
class InitiatesLocal:
    """The initiator's view of ``initiates``.

    ``internal`` maps parent roles to the child roles they take on;
    ``observers`` are the parent roles told the outcome.
    """

    initiator: str
    child: str
    internal: tuple[tuple[str, str], ...]
    external: tuple[str, ...]
    observers: frozenset[str]
    success: LocalType
    handlers: tuple[tuple[str, LocalType], ...] = ()


LocalType = Union[Send, Recv, InternalChoice, ExternalChoice, LocalRec, LocalContinue,
                  LocalPar, InitiatesLocal, LocalEnd]


def project(protocol: g.GlobalProtocol, role: str,
            module: g.ProtocolModule | None = None) -> LocalType:
    """Project ``protocol`` onto ``role``.

    ``module`` resolves the role lists of protocols started with ``initiates``;
    without it, carried-over roles keep their names in the child.

    Raises:
        ProjectionError: if ``role`` is not declared, or if some construct has
            no projection under the merge rule.
    """
    if role not in protocol.roles:
        raise ProjectionError(f"role {role!r} is not declared in {protocol.name!r}")
    return _Projector(role, module).project(g.flatten(protocol.body), frozenset())


def project_all(protocol: g.GlobalProtocol,
                module: g.ProtocolModule | None = None) -> dict[str, LocalType]:
    results: dict[str, LocalType] = {}
    failures: list[str] = []
    for role in protocol.roles:
        try:
            results[role] = project(protocol, role, module)
        except ProjectionError as exc:
            failures.append(f"{role}: {exc}")
    if failures:
        raise ProjectionError("; ".join(failures))
    return results


class _Projector:
    def __init__(self, role: str, module: g.ProtocolModule | None):
        self.role = role
        self.module = module

    def project(self, node: g.GlobalBody, fresh: frozenset[str]) -> LocalType:
        """``fresh`` holds rec labels the role has not acted under since entering them."""
        r = self.role
        if isinstance(node, g.End):
            return LocalEnd()
        if isinstance(node, g.Continue):
            return LocalContinue(node.label)
        if isinstance(node, g.Interaction):
            if node.sender == r:
                return Send(node.receiver_set, node.label, node.sorts,
                            self.project(node.cont, frozenset()))
            if r in node.receivers:
                return Recv(node.sender, node.label, node.sorts,
                            self.project(node.cont, frozenset()))
            return self.project(node.cont, fresh)
        if isinstance(node, g.Choice):
            if node.at == r:
                branches = tuple(self.project(b, frozenset()) for b in node.branches)
                return branches[0] if len(branches) == 1 else InternalChoice(branches)
            branches = tuple(self.project(b, fresh) for b in node.branches)
            return self._merge(branches, fresh, f"choice at {node.at}", node.loc)
        if isinstance(node, g.Rec):
            body = self.project(node.body, fresh | {node.label})
            return _close_rec(node.label, body)
        if isinstance(node, g.Par):
            blocks = tuple(b for b in (self.project(b, frozenset()) for b in node.blocks)
                           if not isinstance(b, LocalEnd))
            if not blocks:
                return self.project(node.cont, fresh)
            return LocalPar(blocks, self.project(node.cont, frozenset()))
        if isinstance(node, g.Initiates):
            return self._initiates(node, fresh)
        raise TypeError(f"not a global body: {node!r}")

    def _initiates(self, node: g.Initiates, fresh: frozenset[str]) -> LocalType:
        r = self.role
        blocks = [(None, node.success), *node.handlers]
        mentioned: set[str] = set()
        for _, block in blocks:
            mentioned |= g.roles_mentioned(block)
        observers = frozenset(mentioned - {node.initiator})
        if node.initiator == r:
            return InitiatesLocal(
                node.initiator,
                node.child,
                self._internal_mapping(node),
                node.external_roles,
                observers,
                self.project(node.success, frozenset()),
                tuple((f, self.project(h, frozenset())) for f, h in node.handlers),
            )
        if r in observers:
            outcomes = tuple(
                Recv(node.initiator, outcome_label(f), (), self.project(block, frozenset()))
                for f, block in blocks
            )
            return outcomes[0] if len(outcomes) == 1 else ExternalChoice(outcomes)
        projected = tuple(self.project(block, fresh) for _, block in blocks)
        return self._merge(projected, fresh, f"initiates {node.child}", node.loc)

    def _internal_mapping(self, node: g.Initiates) -> tuple[tuple[str, str], ...]:
        if self.module is not None and node.child in self.module:
            child_roles = self.module[node.child].roles
            return tuple((a.name, cr) for a, cr in zip(node.args, child_roles) if not a.new)
        return tuple((name, name) for name in node.internal_args)

    def _merge(self, branches: tuple[LocalType, ...], fresh: frozenset[str],
               where: str, loc) -> LocalType:
        kept = [b for b in branches
                if not (isinstance(b, LocalContinue) and b.label in fresh)]
        if not kept:
            return branches[0]
        unique: list[LocalType] = []
        for b in kept:
            if b not in unique:
                unique.append(b)
        if len(unique) == 1:
            return unique[0]
        flat: list[LocalType] = []
        for b in unique:
            flat.extend(b.branches if isinstance(b, ExternalChoice) else [b])
        seen: dict[tuple[str, str], LocalType] = {}
        for b in flat:
            if not isinstance(b, Recv):
                raise ProjectionError(
                    f"{where} (line {loc[0]}): branches differ for role {self.role!r} "
                    f"and do not all begin with a receive")
            key = (b.sender, b.label)
            if key in seen and seen[key] != b:
                raise ProjectionError(
                    f"{where} (line {loc[0]}): role {self.role!r} cannot tell branches "
                    f"apart; both begin with {b.label!r} from {b.sender!r}")
            seen[key] = b
        result = tuple(dict.fromkeys(flat))
        return result[0] if len(result) == 1 else ExternalChoice(result)


def _close_rec(label: str, body: LocalType) -> LocalType:
    if isinstance(body, LocalEnd):
        return body
    if isinstance(body, LocalContinue):
        return LocalEnd() if body.label == label else body
    if label not in free_labels(body):
        return body
    return LocalRec(label, body)


def children(t: LocalType) -> Iterator[LocalType]:
    if isinstance(t, (Send, Recv)):
        yield t.cont
    elif isinstance(t, (InternalChoice, ExternalChoice)):
        yield from t.branches
    elif isinstance(t, LocalRec):
        yield t.body
    elif isinstance(t, LocalPar):
        yield from t.blocks
        yield t.cont
    elif isinstance(t, InitiatesLocal):
        yield t.success
        for _, h in t.handlers:
            yield h


def nodes(t: LocalType) -> Iterator[LocalType]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def free_labels(t: LocalType) -> set[str]:
    if isinstance(t, LocalContinue):
        return {t.label}
    if isinstance(t, LocalRec):
        return free_labels(t.body) - {t.label}
    out: set[str] = set()
    for c in children(t):
        out |= free_labels(c)
    return out


def size(t: LocalType) -> int:
    return sum(1 for _ in nodes(t))


def labels(t: LocalType) -> list[str]:
    """Message labels in ``t``, one per Send/Recv node."""
    return [n.label for n in nodes(t) if isinstance(n, (Send, Recv))]


def format_local(t: LocalType, indent: str = "  ") -> str:
    """Stable multi-line rendering, used by golden tests and the CLI."""
    return "\n".join(_fmt(t, 0, indent)) + "\n"


def _fmt(t: LocalType, depth: int, ind: str) -> list[str]:
    pad = ind * depth
    out: list[str] = []
    while True:
        if isinstance(t, LocalEnd):
            out.append(f"{pad}end")
            return out
        if isinstance(t, LocalContinue):
            out.append(f"{pad}continue {t.label}")
            return out
        if isinstance(t, Send):
            out.append(f"{pad}send {t.label}({', '.join(t.sorts)}) to {', '.join(sorted(t.to))}")
            t = t.cont
            continue
        if isinstance(t, Recv):
            out.append(f"{pad}recv {t.label}({', '.join(t.sorts)}) from {t.sender}")
            t = t.cont
            continue
        if isinstance(t, (InternalChoice, ExternalChoice)):
            head = "select" if isinstance(t, InternalChoice) else "branch"
            out.extend(_fmt_blocks(f"{pad}{head}", "or", t.branches, depth, ind))
            return out
        if isinstance(t, LocalRec):
            out.extend(_fmt_blocks(f"{pad}rec {t.label}", "", [t.body], depth, ind))
            return out
        if isinstance(t, LocalPar):
            out.extend(_fmt_blocks(f"{pad}par", "and", t.blocks, depth, ind))
            t = t.cont
            continue
        if isinstance(t, InitiatesLocal):
            args = [f"{p} as {c}" for p, c in t.internal] + [f"new {e}" for e in t.external]
            notify = f" notify {', '.join(sorted(t.observers))}" if t.observers else ""
            head = f"{pad}initiates {t.child}({', '.join(args)}){notify}"
            out.extend(_fmt_blocks(head, "", [t.success], depth, ind))
            for name, h in t.handlers:
                out[-1] += f" handle({name}) {{"
                out.extend(_fmt(h, depth + 1, ind))
                out.append(pad + "}")
            return out
        raise TypeError(t)


def _fmt_blocks(head: str, sep: str, blocks, depth: int, ind: str) -> list[str]:
    pad = ind * depth
    out = [head + " {"]
    for i, block in enumerate(blocks):
        if i:
            out.append(f"{pad}}} {sep} {{")
        out.extend(_fmt(block, depth + 1, ind))
    out.append(pad + "}")
    return out


def project_module(module: g.ProtocolModule) -> dict[tuple[str, str], LocalType]:
    """Every (protocol, role) projection in ``module``."""
    out: dict[tuple[str, str], LocalType] = {}
    for proto in module:
        for role, local in project_all(proto, module).items():
            out[(proto.name, role)] = local
    return out


def roles_in(t: LocalType) -> set[str]:
    found: set[str] = set()
    for n in nodes(t):
        if isinstance(n, Send):
            found |= n.to
        elif isinstance(n, Recv):
            found.add(n.sender)
    return found


__all__ = [
    "OUTCOME_FAIL_PREFIX",
    "OUTCOME_OK",
    "ExternalChoice",
    "InitiatesLocal",
    "InternalChoice",
    "LocalContinue",
    "LocalEnd",
    "LocalPar",
    "LocalRec",
    "LocalType",
    "ProjectionError",
    "Recv",
    "Send",
    "format_local",
    "is_synthetic",
    "outcome_label",
    "project",
    "project_all",
    "project_module",
]
