"""Actor runtime: registries, coordinators, monitor processes and the session API."""

from .actor import SessionActor
from .config import ActorSpec, ConfigError, bind, check_config, format_config, parse_config
from .conversation import (
    become,
    end_conversation,
    log,
    register_conversation,
    send,
    spawn_actor,
    start_conversation,
    start_subsession,
    subsession_complete,
    subsession_failed,
)
from .coordinator import ConversationInstance, Coordinator
from .errors import ConversationError, MonitorViolation, StartError
from .keys import ConvKey, InitKey
from .system import FaultHooks, Runtime, build_protocols, system_start

__all__ = [
    "ActorSpec",
    "ConfigError",
    "ConvKey",
    "ConversationError",
    "ConversationInstance",
    "Coordinator",
    "FaultHooks",
    "InitKey",
    "MonitorViolation",
    "Runtime",
    "SessionActor",
    "StartError",
    "become",
    "bind",
    "build_protocols",
    "check_config",
    "end_conversation",
    "format_config",
    "log",
    "parse_config",
    "register_conversation",
    "send",
    "spawn_actor",
    "start_conversation",
    "start_subsession",
    "subsession_complete",
    "subsession_failed",
    "system_start",
]
