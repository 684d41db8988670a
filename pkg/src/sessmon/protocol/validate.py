"""Well-formedness checks over parsed protocol modules."""

from __future__ import annotations

from .ast import (
    Choice,
    Continue,
    End,
    GlobalBody,
    GlobalProtocol,
    Initiates,
    Interaction,
    Par,
    ProtocolModule,
    Rec,
    interactions,
    roles_mentioned,
)
from .parser import Diagnostic


def _err(node: GlobalBody | GlobalProtocol, message: str) -> Diagnostic:
    line, col = node.loc
    return Diagnostic("error", line, col, message)


def check_recursion_scoping(proto: GlobalProtocol) -> list[Diagnostic]:
    """Report every ``continue`` not lexically enclosed by a ``rec`` of the same label."""
    out: list[Diagnostic] = []

    def visit(node: GlobalBody, bound: frozenset[str]) -> None:
        if isinstance(node, Continue):
            if node.label not in bound:
                out.append(_err(node, f"unbound recursion label {node.label!r}"))
        elif isinstance(node, Interaction):
            visit(node.cont, bound)
        elif isinstance(node, Choice):
            for b in node.branches:
                visit(b, bound)
            visit(node.cont, bound)
        elif isinstance(node, Rec):
            visit(node.body, bound | {node.label})
            visit(node.cont, bound)
        elif isinstance(node, Par):
            for b in node.blocks:
                visit(b, bound)
            visit(node.cont, bound)
        elif isinstance(node, Initiates):
            visit(node.success, bound)
            for _, h in node.handlers:
                visit(h, bound)
            visit(node.cont, bound)

    visit(proto.body, frozenset())
    return out


def _choice_like(
    blocks: list[tuple[str, GlobalBody]],
    decider: str,
    what: str,
    require_start: bool,
) -> list[Diagnostic]:
    """Shared rule for choice branches and initiates blocks."""
    out: list[Diagnostic] = []
    seen: dict[str, str] = {}
    for name, block in blocks:
        if isinstance(block, Interaction):
            key, who = block.label, block.sender
        elif isinstance(block, Initiates):
            key, who = f"initiates {block.child}", block.initiator
        else:
            if require_start:
                out.append(_err(block, f"{what} {name} must begin with a message "
                                       f"or 'initiates' by {decider!r}"))
            continue
        if who != decider:
            out.append(_err(block, f"{what} {name} begins with an action by {who!r}, "
                                   f"but the choice is made by {decider!r}"))
        if key in seen:
            out.append(_err(block, f"ambiguous choice: {what} {seen[key]} and {what} {name} "
                                   f"both begin with {key!r}"))
        else:
            seen[key] = name
    return out


def _validate_protocol(module: ProtocolModule, proto: GlobalProtocol) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    declared = set(proto.roles)
    if len(declared) != len(proto.roles):
        dupes = sorted({r for r in proto.roles if proto.roles.count(r) > 1})
        out.append(_err(proto, f"duplicate role declaration(s): {', '.join(dupes)}"))

    out.extend(check_recursion_scoping(proto))

    def role_ok(node: GlobalBody, role: str) -> None:
        if role not in declared:
            out.append(_err(node, f"role {role!r} is not declared in protocol {proto.name!r}"))

    def visit(node: GlobalBody, recs: frozenset[str]) -> None:
        if isinstance(node, End):
            return
        if isinstance(node, Continue):
            if node.label not in recs and node.label in _all_recs(proto.body):
                out.append(_err(node, f"continue {node.label!r} crosses a par boundary"))
            return
        if isinstance(node, Interaction):
            role_ok(node, node.sender)
            for r in node.receivers:
                role_ok(node, r)
            if node.sender in node.receivers:
                out.append(_err(node, f"sender equals receiver: {node.sender!r} sends "
                                      f"{node.label!r} to itself"))
            if len(set(node.receivers)) != len(node.receivers):
                out.append(_err(node, f"duplicate receiver in {node.label!r}"))
            visit(node.cont, recs)
        elif isinstance(node, Choice):
            role_ok(node, node.at)
            named = [(f"#{i + 1}", b) for i, b in enumerate(node.branches)]
            out.extend(_choice_like(named, node.at, "branch", require_start=True))
            for b in node.branches:
                visit(b, recs)
            visit(node.cont, recs)
        elif isinstance(node, Rec):
            if node.label in recs:
                out.append(_err(node, f"recursion label {node.label!r} shadows an "
                                      f"enclosing rec"))
            visit(node.body, recs | {node.label})
            visit(node.cont, recs)
        elif isinstance(node, Par):
            owners: dict[tuple, int] = {}
            for idx, block in enumerate(node.blocks):
                for msg in interactions(block):
                    key = (msg.label, msg.sender, frozenset(msg.receivers))
                    if key in owners and owners[key] != idx:
                        out.append(_err(msg, f"par blocks {owners[key] + 1} and {idx + 1} "
                                             f"share message {msg.label!r} from "
                                             f"{msg.sender!r}"))
                    owners.setdefault(key, idx)
                visit(block, frozenset())
            visit(node.cont, recs)
        elif isinstance(node, Initiates):
            _check_initiates(module, proto, node, role_ok, out)
            blocks = [("success block", node.success)]
            blocks += [(f"handle({f})", h) for f, h in node.handlers]
            out.extend(_choice_like(blocks, node.initiator, "block", require_start=False))
            visit(node.success, recs)
            for _, h in node.handlers:
                visit(h, recs)
            visit(node.cont, recs)

    visit(proto.body, frozenset())

    used = roles_mentioned(proto.body)
    for role in proto.roles:
        if role not in used:
            line, col = proto.loc
            out.append(Diagnostic("warning", line, col,
                                  f"role {role!r} takes no part in protocol {proto.name!r}"))
    return out


def _check_initiates(module, proto, node: Initiates, role_ok, out: list[Diagnostic]) -> None:
    role_ok(node, node.initiator)
    for arg in node.internal_args:
        role_ok(node, arg)
    if len(set(node.internal_args)) != len(node.internal_args):
        out.append(_err(node, "a parent role is passed twice to 'initiates'"))
    if node.initiator not in node.internal_args:
        out.append(_err(node, f"initiator {node.initiator!r} must take part in "
                              f"subsession {node.child!r}"))
    names = node.failure_names
    if len(set(names)) != len(names):
        out.append(_err(node, "duplicate handle(...) failure name"))
    child = module.protocols.get(node.child)
    if child is None:
        out.append(_err(node, f"initiates unknown protocol {node.child!r}"))
        return
    if len(node.args) != len(child.roles):
        out.append(_err(node, f"{node.child!r} takes {len(child.roles)} role(s), "
                              f"{len(node.args)} given"))
        return
    for arg, child_role in zip(node.args, child.roles):
        if arg.new and arg.name != child_role:
            out.append(_err(node, f"'new {arg.name}' does not match role {child_role!r} "
                                  f"of {node.child!r}"))


def _all_recs(body: GlobalBody) -> set[str]:
    from .ast import walk

    return {n.label for n in walk(body) if isinstance(n, Rec)}


def validate(module: ProtocolModule) -> list[Diagnostic]:
    """All diagnostics for ``module``; no errors means it may be projected."""
    out: list[Diagnostic] = []
    for proto in module:
        out.extend(_validate_protocol(module, proto))
    return out


def errors(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity == "error"]


def load_module(source: str) -> ProtocolModule:
    """Parse and validate; raise :class:`ProtocolError` if anything is an error."""
    from .parser import ProtocolError, parse_module

    module = parse_module(source)
    bad = errors(validate(module))
    if bad:
        raise ProtocolError(bad)
    return module
