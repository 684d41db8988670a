"""Line-oriented trace log shared by every runtime process.

Each record has seven tab-separated fields: logical time, session id, event
kind, sender, recipients, label and outcome. Empty fields print as ``-``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Optional

FIELDS = ("t", "sid", "kind", "sender", "recipients", "label", "outcome")


def _text(value: Any) -> str:
    if value is None or value == "":
        return "-"
    return str(value).replace("\t", " ").replace("\n", " ")


@dataclass(frozen=True)
class TraceRecord:
    t: float
    sid: Optional[int]
    kind: str
    sender: str = ""
    recipients: tuple[str, ...] = ()
    label: str = ""
    outcome: str = ""

    def to_line(self) -> str:
        return "\t".join([
            _text(self.t), _text(self.sid), self.kind, _text(self.sender),
            _text(",".join(self.recipients)), _text(self.label), _text(self.outcome),
        ])

    @classmethod
    def from_line(cls, line: str) -> TraceRecord:
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(FIELDS):
            raise ValueError(f"trace line needs {len(FIELDS)} fields: {line!r}")
        t, sid, kind, sender, recips, label, outcome = (
            "" if p == "-" else p for p in parts)
        num = float(t) if "." in t else int(t)
        return cls(num, int(sid) if sid else None, kind, sender,
                   tuple(recips.split(",")) if recips else (), label, outcome)

    def get(self, name: str) -> str:
        if name == "recipients":
            return ",".join(self.recipients)
        value = getattr(self, name)
        return "" if value is None else str(value)


class TraceLog:
    def __init__(self, clock: Callable[[], float] = lambda: 0):
        self.clock = clock
        self.records: list[TraceRecord] = []
        self._lock = threading.Lock()

    def emit(self, kind: str, sid: Optional[int] = None, sender: str = "",
             recipients: Iterable[str] = (), label: Any = "", outcome: Any = "") -> TraceRecord:
        with self._lock:
            rec = TraceRecord(self.clock(), sid, kind, sender, tuple(sorted(recipients)),
                              _field(label), _field(outcome))
            self.records.append(rec)
        return rec

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(list(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def select(self, **want: Any) -> list[TraceRecord]:
        """Records whose fields equal every given value (compared as text)."""
        return [r for r in self if all(r.get(k) == str(v) for k, v in want.items())]

    def text(self) -> str:
        return "".join(r.to_line() + "\n" for r in self)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text(), encoding="utf-8")


def _field(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple) and len(value) == 2 and value[0] in ("crash", "linked"):
        return f"{value[0]}:{value[1]}"
    return str(value)


def read_trace(path: str | Path) -> list[TraceRecord]:
    text = Path(path).read_text(encoding="utf-8")
    return [TraceRecord.from_line(line) for line in text.splitlines() if line.strip()]
