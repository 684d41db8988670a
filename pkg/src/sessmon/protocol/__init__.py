"""Protocol language: parsing, validation and printing of global protocols."""

from .ast import (
    PARTICIPANT_OFFLINE,
    Choice,
    Continue,
    End,
    GlobalBody,
    GlobalProtocol,
    InitArg,
    Initiates,
    Interaction,
    Par,
    ProtocolModule,
    Rec,
    flatten,
    roles_of,
)
from .parser import Diagnostic, ProtocolError, parse_module, tokenize
from .printer import format_module, format_protocol
from .validate import errors, load_module, validate

__all__ = [
    "PARTICIPANT_OFFLINE",
    "Choice",
    "Continue",
    "Diagnostic",
    "End",
    "GlobalBody",
    "GlobalProtocol",
    "InitArg",
    "Initiates",
    "Interaction",
    "Par",
    "ProtocolError",
    "ProtocolModule",
    "Rec",
    "errors",
    "flatten",
    "format_module",
    "format_protocol",
    "load_module",
    "parse_module",
    "roles_of",
    "tokenize",
    "validate",
]
