"""Per-process protocol state machines and their registry.

Every step function has the shape ``step(state, event, spec) -> (state,
StepOutput)`` and never mutates its input state.
"""
from ..spider import CRASH, MALICIOUS
from . import echo, exchange
from .base import (
    NO_OUTPUT,
    WAKEUP,
    Deliver,
    Event,
    Kind,
    Message,
    ProtocolError,
    ProtocolInfo,
    StepOutput,
    Wakeup,
)
from .echo import EchoCCState, echo_cc_step
from .exchange import (
    CrashCCState,
    ExchangeState,
    TrimCCState,
    crash_cc_step,
    oneround_byz_step,
    oneround_crash_step,
    trim,
    trim_cc_step,
)

_ROUNDS = frozenset({Kind.INPUT, Kind.BRANCH})
_ONE = frozenset({Kind.INPUT})

PROTOCOLS = {
    p.name: p
    for p in (
        ProtocolInfo("crash_cc", CRASH, _ROUNDS, exchange.init_state, crash_cc_step, exchange.abstract,
                     min_n=lambda f: 2 * f + 1),
        ProtocolInfo("trim_cc", MALICIOUS, _ROUNDS, exchange.init_state, trim_cc_step, exchange.abstract,
                     min_n=lambda f: 5 * f + 1),
        ProtocolInfo("echo_cc", MALICIOUS, echo.KINDS, echo.init_state, echo_cc_step, echo.abstract,
                     min_n=lambda f: 3 * f + 1),
        ProtocolInfo("oneround_crash", CRASH, _ONE, exchange.init_state, oneround_crash_step, exchange.abstract,
                     refinements=(2,), min_n=lambda f: 4 * f + 1),
        ProtocolInfo("oneround_byz", MALICIOUS, _ONE, exchange.init_state, oneround_byz_step, exchange.abstract,
                     refinements=(2,), min_n=lambda f: 12 * f + 1),
    )
}

# Binding for the one-round malicious algorithm needs more than its correctness
BINDING_MIN_N = {"oneround_byz": lambda f: 13 * f + 1}


def get_protocol(name: str) -> ProtocolInfo:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOLS)}") from None


__all__ = [
    "BINDING_MIN_N", "CrashCCState", "Deliver", "EchoCCState", "Event", "ExchangeState",
    "Kind", "Message", "NO_OUTPUT", "PROTOCOLS", "ProtocolError", "ProtocolInfo",
    "StepOutput", "TrimCCState", "WAKEUP", "Wakeup", "crash_cc_step", "echo_cc_step",
    "get_protocol", "oneround_byz_step", "oneround_crash_step", "trim", "trim_cc_step",
]
