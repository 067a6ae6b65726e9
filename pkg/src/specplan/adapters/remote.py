"""Remote chat-completion step generators.

One adapter per agent role, speaking the common JSON-over-HTTP completion
shape (messages array, model field, usage block). Four prompting styles are
supported: direct generation, chain-of-thought in one call, ReAct with a
deliberation call followed by an action call, and a two-agent multi-round
debate whose final turn fixes the action.
"""

from __future__ import annotations

import asyncio
import enum
import os
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import httpx

from specplan.analytics import PriceTable
from specplan.engine.types import Step, StepSource, Trajectory
from specplan.engine.virtual import AgentReply
from specplan.errors import AgentError, ParseError

if TYPE_CHECKING:
    from specplan.adapters.cassette import ChatBackend

RETRY_BACKOFF_S = 0.5


class PromptStyle(enum.Enum):
    DIRECT = "direct"
    CHAIN_OF_THOUGHT = "cot"
    REACT = "react"
    MULTI_AGENT_DEBATE = "mad"


@dataclass(frozen=True)
class AgentEndpointConfig:
    base_url: str
    model_id: str
    auth_env: str = ""
    style: PromptStyle = PromptStyle.DIRECT
    timeout: float = 30.0
    max_retries: int = 2
    debate_agents: int = 2
    debate_rounds: int = 2

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.style is PromptStyle.MULTI_AGENT_DEBATE:
            if self.debate_agents < 2 or self.debate_rounds < 1:
                raise ValueError("debate needs >= 2 agents and >= 1 round")


@dataclass(frozen=True)
class StepExchange:
    """One generated step with usage accounting across its API calls."""

    prompt_tokens: int
    completion_tokens: int
    latency: float
    raw_text: str
    parsed: Step

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be >= 0")


def parse_action(text: str, *, require_marker: bool) -> str:
    """Extract the action: the last "Action:" line wins. Styles that emit
    reasoning must carry the marker; direct generation may answer bare."""
    action: str | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.lower().startswith("action:"):
            action = stripped[len("action:"):].strip()
    if action is None:
        if require_marker:
            raise ParseError(text, "no 'Action:' line in agent response")
        action = text.strip()
    if not action:
        raise ParseError(text, "empty action text")
    return action


def render_context(task: str, history: Sequence[tuple[str, str]]) -> str:
    lines = [task]
    for i, (action, observation) in enumerate(history):
        lines.append(f"Step {i}: {action} -> {observation}")
    return "\n".join(lines)


_DIRECT_SYSTEM = (
    "You are a planning agent. Given the task and the steps taken so far, "
    "reply with only the next action, nothing else. Reply 'terminate' when "
    "the plan is complete."
)
_COT_SYSTEM = (
    "You are a planning agent. Reason briefly about the next step, then give "
    "your decision on a final line formatted exactly as 'Action: <action>'. "
    "Use 'Action: terminate' when the plan is complete."
)
_REACT_THOUGHT_SYSTEM = (
    "You are a planning agent. Think out loud about what the next step of "
    "the plan should be. Do not state the action yet."
)
_REACT_ACT_SYSTEM = (
    "You are a planning agent. Given the task, the steps so far and your "
    "deliberation, answer with a single line formatted exactly as "
    "'Action: <action>'."
)
_DEBATE_SYSTEM = (
    "You are debater {agent} of {agents} deciding the next step of a plan. "
    "Consider the discussion so far and argue for the best next action. "
    "End your turn with a line formatted exactly as 'Action: <action>'."
)


class HttpChatBackend:
    """Plain chat-completion POST; auth comes from the configured env var."""

    def __init__(self, client: httpx.AsyncClient | None = None):
        self._client = client
        self._own_client = client is None

    async def complete(
        self, config: AgentEndpointConfig, messages: list[dict[str, str]]
    ) -> tuple[str, int, int]:
        if self._client is None:
            self._client = httpx.AsyncClient()
        headers = {"content-type": "application/json"}
        if config.auth_env:
            key = os.environ.get(config.auth_env, "")
            if key:
                headers["authorization"] = f"Bearer {key}"
        response = await self._client.post(
            config.base_url.rstrip("/") + "/chat/completions",
            json={"model": config.model_id, "messages": messages},
            headers=headers,
            timeout=config.timeout,
        )
        response.raise_for_status()
        payload = response.json()
        text = payload["choices"][0]["message"]["content"]
        usage = payload.get("usage", {})
        return text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))

    async def aclose(self) -> None:
        if self._own_client and self._client is not None:
            await self._client.aclose()


@dataclass
class _Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    texts: list[str] = field(default_factory=list)


async def _call(
    backend: "ChatBackend",
    config: AgentEndpointConfig,
    messages: list[dict[str, str]],
    usage: _Usage,
) -> str:
    attempts = 0
    while True:
        try:
            text, prompt_tokens, completion_tokens = await backend.complete(config, messages)
        except asyncio.CancelledError:
            raise
        except Exception as exc:
            attempts += 1
            if attempts > config.max_retries:
                raise AgentError(-1, f"remote call failed: {exc}") from exc
            await asyncio.sleep(RETRY_BACKOFF_S)
            continue
        usage.prompt_tokens += prompt_tokens
        usage.completion_tokens += completion_tokens
        usage.texts.append(text)
        return text


async def _generate(
    backend: "ChatBackend", config: AgentEndpointConfig, context: str, index: int
) -> StepExchange:
    started = time.monotonic()
    usage = _Usage()
    style = config.style
    if style is PromptStyle.DIRECT:
        text = await _call(
            backend,
            config,
            [{"role": "system", "content": _DIRECT_SYSTEM}, {"role": "user", "content": context}],
            usage,
        )
        action = parse_action(text, require_marker=False)
    elif style is PromptStyle.CHAIN_OF_THOUGHT:
        text = await _call(
            backend,
            config,
            [{"role": "system", "content": _COT_SYSTEM}, {"role": "user", "content": context}],
            usage,
        )
        action = parse_action(text, require_marker=True)
    elif style is PromptStyle.REACT:
        thought = await _call(
            backend,
            config,
            [
                {"role": "system", "content": _REACT_THOUGHT_SYSTEM},
                {"role": "user", "content": context},
            ],
            usage,
        )
        text = await _call(
            backend,
            config,
            [
                {"role": "system", "content": _REACT_ACT_SYSTEM},
                {"role": "user", "content": f"{context}\n\nDeliberation:\n{thought}"},
            ],
            usage,
        )
        action = parse_action(text, require_marker=True)
    else:
        transcript: list[str] = []
        text = ""
        for round_no in range(config.debate_rounds):
            for agent_no in range(config.debate_agents):
                system = _DEBATE_SYSTEM.format(agent=agent_no + 1, agents=config.debate_agents)
                body = context
                if transcript:
                    body += "\n\nDiscussion so far:\n" + "\n".join(transcript)
                text = await _call(
                    backend,
                    config,
                    [{"role": "system", "content": system}, {"role": "user", "content": body}],
                    usage,
                )
                transcript.append(f"(round {round_no + 1}, debater {agent_no + 1}) {text}")
        action = parse_action(text, require_marker=True)
    latency = time.monotonic() - started
    step = Step(index=index, content=action, source=StepSource.TARGET,
                tokens=usage.completion_tokens, gen_duration=latency)
    return StepExchange(
        prompt_tokens=usage.prompt_tokens,
        completion_tokens=usage.completion_tokens,
        latency=latency,
        raw_text="\n\n".join(usage.texts),
        parsed=step,
    )


async def generate_step(
    config: AgentEndpointConfig,
    task: str,
    trajectory: Trajectory | Sequence[tuple[str, str]],
    *,
    backend: "ChatBackend" | None = None,
) -> StepExchange:
    """Generate exactly one next step for the task given the trajectory prefix."""
    history = trajectory.history() if isinstance(trajectory, Trajectory) else list(trajectory)
    if backend is None:
        backend = HttpChatBackend()
    return await _generate(backend, config, render_context(task, history), len(history))


class RemoteAgent:
    """LiveAgent adapter over a chat backend; exchanges are retained for
    cost accounting."""

    def __init__(self, config: AgentEndpointConfig, backend: "ChatBackend" | None = None):
        self.config = config
        self.backend = backend or HttpChatBackend()
        self.exchanges: list[StepExchange] = []

    async def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        exchange = await _generate(self.backend, self.config, prompt, len(history))
        self.exchanges.append(exchange)
        return AgentReply(
            exchange.parsed.content, exchange.completion_tokens, exchange.latency
        )


def cost_of_exchanges(
    approx: Sequence[StepExchange], target: Sequence[StepExchange], prices: PriceTable
) -> float:
    """Dollar cost over both prompt and completion tokens of live exchanges."""
    total = 0.0
    for ex in approx:
        total += ex.prompt_tokens * prices.approx_input + ex.completion_tokens * prices.approx_output
    for ex in target:
        total += ex.prompt_tokens * prices.target_input + ex.completion_tokens * prices.target_output
    return total
