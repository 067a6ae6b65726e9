"""Wire models for the session service. These payloads are the compatibility
surface consumed by the CLI client and the web UI."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from specplan.adapters.remote import AgentEndpointConfig, PromptStyle
from specplan.analytics import PriceTable
from specplan.engine.types import EngineConfig, MatchKind, MatchPolicy, ProcessKind
from specplan.simkit import SimAgentSpec, SimWorld


class MatchPolicyModel(BaseModel):
    kind: Literal["exact", "soft"] = "exact"
    threshold: float = Field(default=0.3, gt=0, lt=1)
    function_name_exact: bool = True

    def to_engine(self) -> MatchPolicy:
        return MatchPolicy(
            kind=MatchKind(self.kind),
            threshold=self.threshold,
            function_name_exact=self.function_name_exact,
        )


class EngineConfigModel(BaseModel):
    k: int = Field(default=4, ge=1)
    max_steps: int = Field(default=30, ge=1)
    match_policy: MatchPolicyModel = MatchPolicyModel()
    terminate_token: str = Field(default="terminate", min_length=1)
    interrupt_window: float = Field(default=1.0, ge=0)

    def to_engine(self) -> EngineConfig:
        return EngineConfig(
            k=self.k,
            max_steps=self.max_steps,
            match_policy=self.match_policy.to_engine(),
            terminate_token=self.terminate_token,
            interrupt_window=self.interrupt_window,
        )


class WorldModel(BaseModel):
    n: int = Field(default=10, ge=1)
    accuracy: float = Field(default=1.0, ge=0, le=1)
    exec_time: float = Field(default=0.0, ge=0)
    seed: int = 0
    ground_truth: list[str] | None = None

    def to_sim(self) -> SimWorld:
        return SimWorld(
            n=self.n,
            accuracy=self.accuracy,
            exec_time=self.exec_time,
            seed=self.seed,
            ground_truth=tuple(self.ground_truth) if self.ground_truth else (),
        )


class AgentSpecModel(BaseModel):
    step_latency: float = Field(gt=0)
    step_tokens: int = Field(gt=0)

    def to_sim(self, role: ProcessKind) -> SimAgentSpec:
        return SimAgentSpec(self.step_latency, self.step_tokens, role)


class EndpointModel(BaseModel):
    base_url: str = Field(min_length=1)
    model_id: str = Field(min_length=1)
    auth_env: str = ""
    style: Literal["direct", "cot", "react", "mad"] = "direct"
    timeout: float = Field(default=30.0, gt=0)
    max_retries: int = Field(default=2, ge=0)

    def to_config(self) -> AgentEndpointConfig:
        return AgentEndpointConfig(
            base_url=self.base_url,
            model_id=self.model_id,
            auth_env=self.auth_env,
            style=PromptStyle(self.style),
            timeout=self.timeout,
            max_retries=self.max_retries,
        )


class PacingModel(BaseModel):
    # Wall seconds per virtual second; 0 runs the session as fast as possible.
    scale: float = Field(default=1.0, ge=0)
    # Freeze the virtual clock whenever an interrupt window opens, until a
    # client interrupt or an explicit advance arrives.
    paused: bool = False


class PriceModel(BaseModel):
    approx_input: float = Field(default=0.0, ge=0)
    approx_output: float = Field(default=0.0, ge=0)
    target_input: float = Field(default=0.0, ge=0)
    target_output: float = Field(default=0.0, ge=0)

    def to_table(self) -> PriceTable:
        return PriceTable(
            approx_input=self.approx_input,
            approx_output=self.approx_output,
            target_input=self.target_input,
            target_output=self.target_output,
        )


class CreateSessionRequest(BaseModel):
    mode: Literal["simulated", "live"] = "simulated"
    task: str = ""
    config: EngineConfigModel = EngineConfigModel()
    world: WorldModel = WorldModel()
    approx: AgentSpecModel = AgentSpecModel(step_latency=2.0, step_tokens=10)
    target: AgentSpecModel = AgentSpecModel(step_latency=8.0, step_tokens=20)
    approx_endpoint: EndpointModel | None = None
    target_endpoint: EndpointModel | None = None
    pacing: PacingModel = PacingModel()
    prices: PriceModel = PriceModel()


class SessionCreated(BaseModel):
    id: str
    status: str


class SessionStatusResponse(BaseModel):
    id: str
    status: str
    seq: int
    overflowed: bool = False


class InterruptRequest(BaseModel):
    index: int = Field(ge=0)
    content: str = Field(min_length=1)


class InterruptAck(BaseModel):
    status: Literal["accepted", "stale"]


class AdvanceResponse(BaseModel):
    resumed: bool


class MetricsResponse(BaseModel):
    id: str
    status: str
    partial: bool
    metrics: dict[str, float | int]
