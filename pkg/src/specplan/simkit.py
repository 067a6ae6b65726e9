"""Deterministic virtual-time simulation studies.

Simulated agents have fixed per-step latency and token counts; the
approximation agent reproduces the target's canonical step with a seeded
per-call probability. Three study drivers mirror the planning-time,
token, and interruption experiments: an accuracy x k grid, an approximation
speed x accuracy grid, and an impatient-user interruption sweep.
"""

from __future__ import annotations

import csv
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from specplan.analytics import (
    MetricsReport,
    PriceTable,
    StepProfile,
    constant_profiles,
    measure_metrics,
)
from specplan.engine.coordinator import PlanResult
from specplan.engine.events import Event, EventLog, EventType
from specplan.engine.types import EngineConfig, MatchPolicy, ProcessKind
from specplan.engine.virtual import AgentReply, PureExecutor, VirtualRuntime

TERMINATE = "terminate"


@dataclass(frozen=True)
class SimAgentSpec:
    step_latency: float
    step_tokens: int
    role: ProcessKind

    def __post_init__(self) -> None:
        if self.step_latency <= 0:
            raise ValueError("step_latency must be > 0")
        if self.step_tokens <= 0:
            raise ValueError("step_tokens must be > 0")


def make_ground_truth(n: int) -> tuple[str, ...]:
    """Canonical n-step plan whose final step is the terminate sentinel."""
    return tuple(f"plan-step-{i}" for i in range(n - 1)) + (TERMINATE,)


@dataclass(frozen=True)
class SimWorld:
    n: int
    accuracy: float
    exec_time: float = 0.0
    seed: int = 0
    ground_truth: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be in [0, 1]")
        if self.exec_time < 0:
            raise ValueError("exec_time must be >= 0")
        if not self.ground_truth:
            object.__setattr__(self, "ground_truth", make_ground_truth(self.n))
        if len(self.ground_truth) != self.n:
            raise ValueError("ground_truth length must equal n")

    def step(self, index: int) -> str:
        return self.ground_truth[index] if index < self.n else TERMINATE


class SimTargetAgent:
    """Authoritative step generator: always the canonical plan step."""

    def __init__(self, world: SimWorld, spec: SimAgentSpec):
        self.world = world
        self.spec = spec

    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        return AgentReply(self.world.step(len(history)), self.spec.step_tokens, self.spec.step_latency)


class SimApproxAgent:
    """Fast step generator that hits the canonical step with the configured
    probability; misses produce distinct off-plan steps. Draws are i.i.d. per
    call from a run-seeded stream, so the miss pattern is reproducible."""

    def __init__(self, world: SimWorld, spec: SimAgentSpec):
        self.world = world
        self.spec = spec
        self._rng = random.Random(f"approx:{world.seed}")
        self._misses = 0

    def propose(self, prompt: str, history: Sequence[tuple[str, str]]) -> AgentReply:
        index = len(history)
        if index >= self.world.n:
            content = TERMINATE
        elif self._rng.random() < self.world.accuracy:
            content = self.world.ground_truth[index]
        else:
            self._misses += 1
            content = f"offplan-{index}-{self._misses}"
        return AgentReply(content, self.spec.step_tokens, self.spec.step_latency)


def make_sim_agents(
    world: SimWorld, approx: SimAgentSpec, target: SimAgentSpec
) -> tuple[SimApproxAgent, SimTargetAgent]:
    return SimApproxAgent(world, approx), SimTargetAgent(world, target)


@dataclass(frozen=True)
class ImpatienceModel:
    """Simulated user who interrupts a pending target step after waiting a
    uniform delay past the approximation presentation."""

    max_interrupts: int
    wait_low: float = 1.0
    wait_high: float = 5.0

    def __post_init__(self) -> None:
        if self.max_interrupts < 0:
            raise ValueError("max_interrupts must be >= 0")
        if not 0 < self.wait_low <= self.wait_high:
            raise ValueError("need 0 < wait_low <= wait_high")

    def validate_against(self, target: SimAgentSpec) -> None:
        if self.wait_high >= target.step_latency:
            raise ValueError("user patience must stay below the target step latency")


class SimUserModel:
    """Runtime observer scheduling oracle interrupts while budget remains.

    The budget is consumed only by interrupts that actually land; an attempt
    that finds the target already presented costs nothing."""

    def __init__(self, world: SimWorld, impatience: ImpatienceModel, seed: int):
        self.world = world
        self.impatience = impatience
        self._rng = random.Random(f"impatience:{seed}")
        self.accepted = 0

    def __call__(self, event: Event, runtime: VirtualRuntime) -> None:
        if event.type is EventType.PRESENT_APPROX and self.accepted < self.impatience.max_interrupts:
            delay = self._rng.uniform(self.impatience.wait_low, self.impatience.wait_high)
            runtime.schedule_interrupt(
                event.t_us + round(delay * 1_000_000), event.index, self.world.step(event.index)
            )
        elif event.type is EventType.USER_INTERRUPT:
            self.accepted += 1


@dataclass
class SimRunResult:
    plan: PlanResult
    metrics: MetricsReport
    profiles: list[StepProfile]
    world: SimWorld
    k: int

    @property
    def events(self) -> EventLog:
        return self.plan.events


def _sim_config(world: SimWorld, k: int) -> EngineConfig:
    return EngineConfig(
        k=k,
        max_steps=max(30, world.n + k + 2),
        match_policy=MatchPolicy(),
        terminate_token=TERMINATE,
        interrupt_window=1.0,
    )


def sim_profiles(world: SimWorld, approx: SimAgentSpec, target: SimAgentSpec) -> list[StepProfile]:
    return constant_profiles(
        world.n,
        time_a=approx.step_latency,
        time_t=target.step_latency,
        exec=world.exec_time,
        tok_a=approx.step_tokens,
        tok_t=target.step_tokens,
    )


def simulate_run(
    world: SimWorld,
    approx_spec: SimAgentSpec,
    target_spec: SimAgentSpec,
    k: int,
    *,
    impatience: ImpatienceModel | None = None,
    prices: PriceTable | None = None,
) -> SimRunResult:
    """One speculative planning run under the virtual clock."""
    approx, target = make_sim_agents(world, approx_spec, target_spec)
    observers = []
    if impatience is not None and impatience.max_interrupts > 0:
        impatience.validate_against(target_spec)
        observers.append(SimUserModel(world, impatience, world.seed))
    runtime = VirtualRuntime(
        approx,
        target,
        PureExecutor(world.exec_time),
        _sim_config(world, k),
        observers=observers,
    )
    plan = runtime.run(task=f"simulated task ({world.n} steps)")
    metrics = measure_metrics(plan.events, prices, steps=len(plan.trajectory.entries))
    return SimRunResult(plan, metrics, sim_profiles(world, approx_spec, target_spec), world, k)


def sequential_run(
    world: SimWorld, target_spec: SimAgentSpec, *, prices: PriceTable | None = None
) -> tuple[EventLog, MetricsReport]:
    """Target-only baseline: one call at a time, concurrency 1."""
    log = EventLog()
    t_us = 0
    step_us = round(target_spec.step_latency * 1_000_000)
    exec_us = round(world.exec_time * 1_000_000)
    for i in range(world.n):
        content = world.ground_truth[i]
        log.append(Event(t_us / 1e6, EventType.PROCESS_STARTED, i, "T"))
        t_us += step_us
        log.append(
            Event(t_us / 1e6, EventType.PROCESS_FINISHED, i, "T", content=content,
                  tokens=target_spec.step_tokens)
        )
        t_us += exec_us
        log.append(Event(t_us / 1e6, EventType.STEP_EXECUTED, i, "T", content=content))
        log.append(Event(t_us / 1e6, EventType.STEP_VERIFIED, i, "T", content=content))
        log.append(Event(t_us / 1e6, EventType.PRESENT_TARGET, i, "T", content=content))
    log.append(Event(t_us / 1e6, EventType.TERMINATED, world.n - 1, "T"))
    return log, measure_metrics(log, prices, steps=world.n)


def approx_only_time(world: SimWorld, approx_spec: SimAgentSpec) -> float:
    return world.n * (approx_spec.step_latency + world.exec_time)


def target_only_time(world: SimWorld, target_spec: SimAgentSpec) -> float:
    return world.n * (target_spec.step_latency + world.exec_time)


# ---- study drivers ----


@dataclass(frozen=True)
class GridRow:
    accuracy: float
    knob: float
    seed: int
    tt: float
    st: float
    to: int
    so: float
    mc: int


@dataclass(frozen=True)
class CellStats:
    mean: float
    std: float
    minimum: float


@dataclass
class GridResult:
    knob_name: str
    rows: list[GridRow] = field(default_factory=list)
    baselines: dict[str, float] = field(default_factory=dict)

    def cell(self, accuracy: float, knob: float) -> list[GridRow]:
        return [r for r in self.rows if r.accuracy == accuracy and r.knob == knob]

    def cell_stats(self, accuracy: float, knob: float, metric: str) -> CellStats:
        values = [float(getattr(r, metric)) for r in self.cell(accuracy, knob)]
        return CellStats(statistics.fmean(values), statistics.pstdev(values), min(values))

    def accuracies(self) -> list[float]:
        return sorted({r.accuracy for r in self.rows})

    def knobs(self) -> list[float]:
        return sorted({r.knob for r in self.rows})


def _metrics_row(accuracy: float, knob: float, seed: int, metrics: MetricsReport) -> GridRow:
    return GridRow(accuracy, knob, seed, metrics.tt, metrics.st, metrics.to, metrics.so, metrics.mc)


def run_accuracy_k_grid(
    accuracies: Sequence[float],
    ks: Sequence[int],
    seeds: int,
    *,
    n: int = 10,
    approx_spec: SimAgentSpec | None = None,
    target_spec: SimAgentSpec | None = None,
    exec_time: float = 0.0,
) -> GridResult:
    """Planning time and token totals across approximation accuracy and k."""
    approx_spec = approx_spec or SimAgentSpec(2.0, 10, ProcessKind.APPROXIMATION)
    target_spec = target_spec or SimAgentSpec(8.0, 20, ProcessKind.TARGET)
    result = GridResult(knob_name="k")
    for accuracy in accuracies:
        for k in ks:
            for seed in range(seeds):
                world = SimWorld(n=n, accuracy=accuracy, exec_time=exec_time, seed=seed)
                run = simulate_run(world, approx_spec, target_spec, k)
                result.rows.append(_metrics_row(accuracy, float(k), seed, run.metrics))
    world = SimWorld(n=n, accuracy=1.0, exec_time=exec_time)
    result.baselines = {
        "approx_only_tt": approx_only_time(world, approx_spec),
        "target_only_tt": target_only_time(world, target_spec),
        "approx_only_to": float(n * approx_spec.step_tokens),
        "target_only_to": float(n * target_spec.step_tokens),
    }
    return result


def run_speed_grid(
    speeds: Sequence[float],
    accuracies: Sequence[float],
    k: int = 5,
    seeds: int = 10,
    *,
    n: int = 10,
    target_spec: SimAgentSpec | None = None,
    approx_tokens: int = 10,
    exec_time: float = 0.0,
) -> GridResult:
    """Planning time and token totals across approximation speed and accuracy."""
    target_spec = target_spec or SimAgentSpec(8.0, 20, ProcessKind.TARGET)
    result = GridResult(knob_name="speed")
    for accuracy in accuracies:
        for speed in speeds:
            approx_spec = SimAgentSpec(float(speed), approx_tokens, ProcessKind.APPROXIMATION)
            for seed in range(seeds):
                world = SimWorld(n=n, accuracy=accuracy, exec_time=exec_time, seed=seed)
                run = simulate_run(world, approx_spec, target_spec, k)
                result.rows.append(_metrics_row(accuracy, float(speed), seed, run.metrics))
    world = SimWorld(n=n, accuracy=1.0, exec_time=exec_time)
    result.baselines = {"target_only_tt": target_only_time(world, target_spec)}
    return result


def run_interruption_study(
    world: SimWorld,
    approx_spec: SimAgentSpec,
    target_spec: SimAgentSpec,
    k: int,
    impatience: ImpatienceModel,
    interrupt_counts: Sequence[int],
    sims_per_count: int,
) -> GridResult:
    """Stepwise latency across allowed user interruption counts.

    Each simulation index shares its world seed and patience stream across
    counts, so a larger budget differs only by the extra interruptions."""
    impatience.validate_against(target_spec)
    result = GridResult(knob_name="interrupts")
    for count in interrupt_counts:
        for sim in range(sims_per_count):
            sim_world = replace(world, seed=world.seed + sim)
            model = replace(impatience, max_interrupts=count)
            run = simulate_run(sim_world, approx_spec, target_spec, k, impatience=model)
            result.rows.append(_metrics_row(world.accuracy, float(count), sim, run.metrics))
    return result


# ---- CSV export ----


def write_grid_csv(result: GridResult, path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["accuracy", result.knob_name, "seed", "TT", "ST", "TO", "SO", "MC"])
        for r in result.rows:
            writer.writerow([repr(r.accuracy), repr(r.knob), r.seed, repr(r.tt), repr(r.st), r.to, repr(r.so), r.mc])


def write_grid_aggregate_csv(result: GridResult, path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["accuracy", result.knob_name, "metric", "mean", "std", "min"])
        for accuracy in result.accuracies():
            for knob in result.knobs():
                if not result.cell(accuracy, knob):
                    continue
                for metric in ("tt", "st", "to", "so", "mc"):
                    stats = result.cell_stats(accuracy, knob, metric)
                    writer.writerow(
                        [repr(accuracy), repr(knob), metric.upper(),
                         repr(stats.mean), repr(stats.std), repr(stats.minimum)]
                    )


def write_events_jsonl(events: Iterable[Event], path: str | Path) -> None:
    with open(path, "w") as handle:
        for event in events:
            handle.write(event.to_json() + "\n")
