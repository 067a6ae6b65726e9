"""Pluggable step generators: scripted fixtures, remote chat-completion
clients, and record/replay cassettes for hermetic tests."""

from specplan.adapters.cassette import (
    CassetteMode,
    ChatBackend,
    RecordBackend,
    ReplayBackend,
    record_replay,
)
from specplan.adapters.remote import (
    AgentEndpointConfig,
    HttpChatBackend,
    PromptStyle,
    RemoteAgent,
    StepExchange,
    cost_of_exchanges,
    generate_step,
    parse_action,
)
from specplan.adapters.scripted import FlakyAgent, ScriptedAgent, ScriptedAsyncAgent, scripted_reply

__all__ = [
    "AgentEndpointConfig",
    "CassetteMode",
    "ChatBackend",
    "FlakyAgent",
    "HttpChatBackend",
    "PromptStyle",
    "RecordBackend",
    "RemoteAgent",
    "ReplayBackend",
    "ScriptedAgent",
    "ScriptedAsyncAgent",
    "StepExchange",
    "cost_of_exchanges",
    "generate_step",
    "parse_action",
    "record_replay",
    "scripted_reply",
]
