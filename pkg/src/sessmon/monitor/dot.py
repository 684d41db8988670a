"""Graphviz export of monitors."""

from __future__ import annotations

from .fsm import MonitorFsm


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(fsm: MonitorFsm, name: str = "monitor") -> str:
    lines = [f"digraph {_quote(name)} {{", "  rankdir=LR;", "  node [shape=circle];"]
    lines += _body(fsm, "s", "  ")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _body(fsm: MonitorFsm, prefix: str, pad: str) -> list[str]:
    out = []
    for s in sorted(fsm.states):
        attrs = []
        if s in fsm.terminals:
            attrs.append("shape=doublecircle")
        if s == fsm.initial:
            attrs.append("style=bold")
        label = f"label={_quote(str(s))}"
        out.append(f"{pad}{prefix}{s} [{', '.join([label, *attrs])}];")
    for t in fsm.transitions:
        out.append(f"{pad}{prefix}{t.source} -> {prefix}{t.target} "
                   f"[label={_quote(t.describe())}];")
    for s, kids in sorted(fsm.children.items()):
        for i, kid in enumerate(kids):
            sub = f"{prefix}{s}_{i}_"
            out.append(f"{pad}subgraph cluster_{sub.rstrip('_')} {{")
            out.append(f"{pad}  label={_quote(f'state {s}, block {i + 1}')};")
            out += _body(kid, sub, pad + "  ")
            out.append(f"{pad}}}")
            out.append(f"{pad}{prefix}{s} -> {sub}{kid.initial} [style=dotted, arrowhead=none];")
        out.append(f"{pad}{prefix}{s} -> {prefix}{fsm.par_exits[s]} "
                   f"[label=\"par done\", style=dashed];")
    return out
