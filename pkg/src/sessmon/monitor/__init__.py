"""Runtime monitors: generation from local types, stepping and reachability."""

from .dot import export_dot
from .fsm import (
    CommEvent,
    MonitorFsm,
    MonitorGenerationError,
    MonitorState,
    Transition,
    Violation,
    accepts,
    all_transitions,
    dump,
    expected,
    generate_monitor,
    initial_state,
    initiate_args,
    is_terminal,
    step,
)
from .reachability import ReachabilityTable, compute_reachability, involved, involved_roles

__all__ = [
    "CommEvent",
    "MonitorFsm",
    "MonitorGenerationError",
    "MonitorState",
    "ReachabilityTable",
    "Transition",
    "Violation",
    "accepts",
    "all_transitions",
    "compute_reachability",
    "dump",
    "expected",
    "export_dot",
    "generate_monitor",
    "initial_state",
    "initiate_args",
    "involved",
    "involved_roles",
    "is_terminal",
    "step",
]
