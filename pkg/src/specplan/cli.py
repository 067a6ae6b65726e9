"""Operator command line: simulate runs, sweep grids, analyze logs, serve
sessions, replay transcripts.

Defaults mirror the canonical simulation constants (10 steps, 2 s / 8 s agent
latencies, 10/20 tokens, zero execution time), so a bare ``specplan simulate``
reproduces the reference scenario. Flag values win over a ``--config``
JSON/YAML file, which wins over defaults. Exit codes: 0 success, 1 usage
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from specplan import analytics, simkit
from specplan.engine.events import EventLog, EventType
from specplan.engine.types import ProcessKind
from specplan.errors import SpecPlanError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    text = Path(path).read_text()
    if path.endswith((".yaml", ".yml")):
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a mapping")
    return data


def _setting(args: argparse.Namespace, config: dict[str, Any], name: str, default: Any) -> Any:
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _prices(args: argparse.Namespace, config: dict[str, Any]) -> analytics.PriceTable:
    return analytics.PriceTable(
        approx_input=_setting(args, config, "price_a_in", 0.0),
        approx_output=_setting(args, config, "price_a_out", 0.0),
        target_input=_setting(args, config, "price_t_in", 0.0),
        target_output=_setting(args, config, "price_t_out", 0.0),
    )


def _out_dir(args: argparse.Namespace, config: dict[str, Any]) -> Path:
    out = Path(_setting(args, config, "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_overwrite(paths: Sequence[Path], force: bool) -> None:
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise SpecPlanError(
            "refusing to overwrite existing output (use --force): " + ", ".join(existing)
        )


def _print_metrics(report: analytics.MetricsReport) -> None:
    rows = report.to_dict()
    width = max(len(key) for key in rows)
    for key in ("TT", "ST", "TO", "SO", "MC", "cost", "steps"):
        print(f"  {key:<{width}}  {rows[key]}")


# ---- commands ----


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    n = int(_setting(args, config, "n", 10))
    ta = float(_setting(args, config, "ta", 2.0))
    tt = float(_setting(args, config, "tt", 8.0))
    toka = int(_setting(args, config, "toka", 10))
    tokt = int(_setting(args, config, "tokt", 20))
    exec_time = float(_setting(args, config, "exec", 0.0))
    acc = float(_setting(args, config, "acc", 1.0))
    k = int(_setting(args, config, "k", 4))
    seed = int(_setting(args, config, "seed", 0))
    if not 0.0 <= acc <= 1.0:
        raise UsageError(f"--acc must be in [0, 1], got {acc}")
    if k < 1:
        raise UsageError(f"--k must be >= 1, got {k}")
    if n < 1:
        raise UsageError(f"--n must be >= 1, got {n}")

    world = simkit.SimWorld(n=n, accuracy=acc, exec_time=exec_time, seed=seed)
    approx = simkit.SimAgentSpec(ta, toka, ProcessKind.APPROXIMATION)
    target = simkit.SimAgentSpec(tt, tokt, ProcessKind.TARGET)
    run = simkit.simulate_run(world, approx, target, k, prices=_prices(args, config))

    out = _out_dir(args, config)
    events_path = out / "events.jsonl"
    metrics_path = out / "metrics.json"
    simkit.write_events_jsonl(run.events, events_path)
    metrics_path.write_text(run.metrics.to_json())
    print(f"simulated {n} steps (accuracy={acc}, k={k}, seed={seed})")
    _print_metrics(run.metrics)
    print(f"wrote {events_path} and {metrics_path}")
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    study = args.study
    seeds = int(_setting(args, config, "seeds", 10))
    n = int(_setting(args, config, "n", 10))
    accs = _floats(_setting(args, config, "accs", "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"))
    out = _out_dir(args, config)
    raw_path = out / f"{study}_raw.csv"
    agg_path = out / f"{study}_aggregate.csv"
    _check_overwrite([raw_path, agg_path], args.force)

    if study == "accuracy-k":
        ks = _ints(_setting(args, config, "ks", "1,2,3,4,5,6,7,8,9,10"))
        result = simkit.run_accuracy_k_grid(accs, ks, seeds, n=n)
    elif study == "speed":
        speeds = _floats(_setting(args, config, "speeds", "1,2,3,4,5,6,7,8"))
        k = int(_setting(args, config, "k", 5))
        result = simkit.run_speed_grid(speeds, accs, k, seeds, n=n)
    else:
        k = int(_setting(args, config, "k", 10))
        acc = float(_setting(args, config, "acc", 0.5))
        counts = _ints(_setting(args, config, "counts", ",".join(str(i) for i in range(n + 1))))
        sims = int(_setting(args, config, "sims", 5))
        world = simkit.SimWorld(n=n, accuracy=acc, seed=int(_setting(args, config, "seed", 0)))
        impatience = simkit.ImpatienceModel(
            max_interrupts=0,
            wait_low=float(_setting(args, config, "wait_low", 1.0)),
            wait_high=float(_setting(args, config, "wait_high", 5.0)),
        )
        result = simkit.run_interruption_study(
            world,
            simkit.SimAgentSpec(float(_setting(args, config, "ta", 2.0)), 10, ProcessKind.APPROXIMATION),
            simkit.SimAgentSpec(float(_setting(args, config, "tt", 8.0)), 20, ProcessKind.TARGET),
            k,
            impatience,
            counts,
            sims,
        )
    simkit.write_grid_csv(result, raw_path)
    simkit.write_grid_aggregate_csv(result, agg_path)
    print(f"{study}: {len(result.rows)} runs")
    print(f"wrote {raw_path} and {agg_path}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    log_path = Path(args.logpath)
    paths = sorted(log_path.glob("*.jsonl")) if log_path.is_dir() else [log_path]
    if not paths:
        raise SpecPlanError(f"no event logs found under {log_path}")
    prices = _prices(args, config)
    k = int(_setting(args, config, "k", 4))
    out = _out_dir(args, config)

    reports = []
    documents = []
    for path in paths:
        text = path.read_text()
        if not text.strip():
            raise SpecPlanError(f"{path}: empty event log")
        events = EventLog.from_jsonl(text)
        report = analytics.measure_metrics(events, prices)
        steps = report.steps
        document: dict[str, Any] = {"log": str(path), "metrics": report.to_dict()}
        if steps > 0:
            breaks = analytics.breaking_points(events, k, steps)
            document["breaking_points"] = list(breaks.points)
        reports.append(report)
        documents.append(document)

    metrics_path = out / "metrics.json"
    breakdown_path = out / "breakdown.csv"
    payload = documents[0] if len(documents) == 1 else documents
    metrics_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    analytics.write_aggregate_csv(analytics.aggregate_reports(reports), breakdown_path)
    print(f"analyzed {len(paths)} log(s)")
    _print_metrics(reports[0])
    print(f"wrote {metrics_path} and {breakdown_path}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    text = Path(args.logpath).read_text()
    events = EventLog.from_jsonl(text)
    shown = {
        EventType.PRESENT_APPROX: "A",
        EventType.PRESENT_TARGET: "T",
        EventType.USER_INTERRUPT: "USER",
    }
    for event in events:
        label = shown.get(event.type)
        if label is not None:
            print(f"[{event.t:10.3f}s] {label}#{event.index}: {event.content}")
        elif event.type is EventType.TERMINATED:
            print(f"[{event.t:10.3f}s] -- plan complete ({event.index + 1} steps) --")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    host = _setting(args, config, "host", "127.0.0.1")
    port = int(_setting(args, config, "port", 8732))
    persist = _setting(args, config, "persist_dir", None)
    ui_dir = _setting(args, config, "ui_dir", None)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise SpecPlanError(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    import uvicorn

    from specplan.service.app import create_app

    app = create_app(persist_dir=persist, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="specplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run one simulated planning session")
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--ta", type=float, help="approximation seconds per step")
    simulate.add_argument("--tt", type=float, help="target seconds per step")
    simulate.add_argument("--toka", type=int)
    simulate.add_argument("--tokt", type=int)
    simulate.add_argument("--exec", type=float, dest="exec")
    simulate.add_argument("--acc", type=float)
    simulate.add_argument("--k", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.set_defaults(func=cmd_simulate)

    grid = sub.add_parser("grid", help="run a simulation study over a parameter grid")
    grid.add_argument("study", choices=["accuracy-k", "speed", "interruption"])
    grid.add_argument("--accs")
    grid.add_argument("--ks")
    grid.add_argument("--speeds")
    grid.add_argument("--counts")
    grid.add_argument("--k", type=int)
    grid.add_argument("--acc", type=float)
    grid.add_argument("--n", type=int)
    grid.add_argument("--ta", type=float)
    grid.add_argument("--tt", type=float)
    grid.add_argument("--seed", type=int)
    grid.add_argument("--seeds", type=int)
    grid.add_argument("--sims", type=int)
    grid.add_argument("--wait-low", type=float, dest="wait_low")
    grid.add_argument("--wait-high", type=float, dest="wait_high")
    grid.add_argument("--force", action="store_true")
    grid.set_defaults(func=cmd_grid)

    analyze = sub.add_parser("analyze", help="recompute metrics from a stored event log")
    analyze.add_argument("logpath")
    analyze.add_argument("--k", type=int)
    analyze.set_defaults(func=cmd_analyze)

    replay = sub.add_parser("replay", help="print the presented transcript of an event log")
    replay.add_argument("logpath")
    replay.set_defaults(func=cmd_replay)

    serve = sub.add_parser("serve", help="start the session service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--persist-dir", dest="persist_dir")
    serve.add_argument("--ui-dir", dest="ui_dir", help="serve a built web console at /ui")
    serve.set_defaults(func=cmd_serve)

    for command in (simulate, grid, analyze, replay, serve):
        command.add_argument("--config", help="JSON/YAML defaults file")
        command.add_argument("--out", help="output directory (default ./out)")
        for price in ("price-a-in", "price-a-out", "price-t-in", "price-t-out"):
            command.add_argument(f"--{price}", type=float, dest=price.replace("-", "_"))

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SpecPlanError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
