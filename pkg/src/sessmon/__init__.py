"""sessmon: multiparty session protocols with runtime monitors for actors.

The layers, bottom up:

* :mod:`sessmon.protocol` parses and validates global protocols.
* :mod:`sessmon.projection` projects them onto each role.
* :mod:`sessmon.monitor` compiles local types to communicating FSMs.
* :mod:`sessmon.runtime` runs monitored sessions on an actor runtime.
* :mod:`sessmon.failure` detects failures (polling and two-phase commit).
* :mod:`sessmon.harness` holds the CLI, the case studies and the benchmark.
"""

from .monitor import compute_reachability, export_dot, generate_monitor, involved, step
from .projection import project, project_all
from .protocol import load_module, parse_module, validate

__version__ = "0.1.0"

__all__ = [
    "compute_reachability",
    "export_dot",
    "generate_monitor",
    "involved",
    "load_module",
    "parse_module",
    "project",
    "project_all",
    "step",
    "validate",
]
