"""Pretty-printing of global protocols back to source form."""

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
)

INDENT = "  "


def format_module(module: ProtocolModule) -> str:
    return "\n".join(format_protocol(p) for p in module)


def format_protocol(proto: GlobalProtocol) -> str:
    roles = ", ".join(f"role {r}" for r in proto.roles)
    lines = [f"global protocol {proto.name}({roles}) {{"]
    lines += _body(proto.body, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _block(body: GlobalBody, depth: int) -> list[str]:
    inner = _body(body, depth + 1)
    return ["{", *inner, INDENT * depth + "}"]


def _body(node: GlobalBody, depth: int) -> list[str]:
    pad = INDENT * depth
    out: list[str] = []
    while not isinstance(node, End):
        if isinstance(node, Interaction):
            out.append(f"{pad}{node.label}({', '.join(node.sorts)}) from {node.sender} "
                       f"to {', '.join(node.receivers)};")
        elif isinstance(node, Continue):
            out.append(f"{pad}continue {node.label};")
            break
        elif isinstance(node, Choice):
            out.extend(_blocks(f"{pad}choice at {node.at} ", "or", node.branches, depth))
        elif isinstance(node, Rec):
            out.extend(_blocks(f"{pad}rec {node.label} ", "", [node.body], depth))
        elif isinstance(node, Par):
            out.extend(_blocks(f"{pad}par ", "and", node.blocks, depth))
        elif isinstance(node, Initiates):
            args = ", ".join(("new " if a.new else "") + a.name for a in node.args)
            head = f"{pad}{node.initiator} initiates {node.child}({args})"
            if not node.has_block:
                out.append(head + ";")
            else:
                lines = _block(node.success, depth)
                out.append(f"{head} {lines[0]}")
                out.extend(lines[1:-1])
                tail = lines[-1]
                for name, handler in node.handlers:
                    hl = _block(handler, depth)
                    out.append(f"{tail} handle({name}) {hl[0]}")
                    out.extend(hl[1:-1])
                    tail = hl[-1]
                out.append(tail)
        else:
            raise TypeError(node)
        node = node.cont
    return out


def _blocks(head: str, sep: str, blocks, depth: int) -> list[str]:
    out: list[str] = []
    tail = None
    for block in blocks:
        lines = _block(block, depth)
        if tail is None:
            out.append(head + lines[0])
        else:
            out.append(f"{tail} {sep} {lines[0]}")
        out.extend(lines[1:-1])
        tail = lines[-1]
    out.append(tail)
    return out
