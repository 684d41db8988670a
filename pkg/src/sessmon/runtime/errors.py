"""Exceptions raised to user code by the session API."""

from __future__ import annotations

from typing import Mapping, Sequence


class ConversationError(Exception):
    """Misuse of the session API (unknown key, root-session misuse, and so on)."""


class MonitorViolation(ConversationError):
    """A monitor refused a message or action.

    Attributes:
        label: the offending message label.
        expected: descriptions of the transitions the sender's monitor allowed.
        rejections: per-recipient reasons when a remote monitor refused.
    """

    def __init__(self, message: str, label: str = "", expected: Sequence[str] = (),
                 rejections: Mapping[str, str] | None = None):
        super().__init__(message)
        self.label = label
        self.expected = tuple(expected)
        self.rejections = dict(rejections or {})


class StartError(Exception):
    """The runtime could not be started from the given module and config."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)
