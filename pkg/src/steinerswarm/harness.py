"""Batch experiment runner and CLI: config parsing, seeded trial sweeps
across strategies and failure rates, quartile statistics, and file
outputs (traces, CSV summaries, SVG frames).

Seeds derive from (seed base, failure rate, trial index), never from the
strategy or execution order, so all strategies face identical failure
histories and outputs are independent of scheduling.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from .engine import (ConfigError, SwarmConfig, config_from_dict, config_to_dict,
                     init_world, step)
from .metrics import (TrialRecord, performance_ratio, relay_reference_line,
                      steiner_minimal_tree)
from .svgrender import dump_frame, render_state

TRACE_HEADER = "# steinerswarm trace v1"


@dataclass
class ExperimentPlan:
    strategies: List[str] = field(default_factory=lambda: ["base", "lead", "all"])
    failure_rates: List[float] = field(default_factory=lambda: [0.0])
    trials: int = 20
    seed_base: int = 0
    max_seconds: float = 45.0
    out_dir: str = "out"
    frame_ticks: List[int] = field(default_factory=list)
    paper_scale: bool = False
    jobs: int = 1

    def validate(self) -> "ExperimentPlan":
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if sorted(self.failure_rates) != list(self.failure_rates):
            raise ConfigError("failure rates must be sorted ascending")
        return self


@dataclass
class SummaryRow:
    strategy: str
    failure_rate: float
    trials: int
    median_perf: float
    q1_perf: float
    q3_perf: float
    median_survival: float   # seconds

    def __post_init__(self):
        assert self.q1_perf <= self.median_perf <= self.q3_perf


def trial_seed(seed_base: int, failure_rate: float, trial: int) -> int:
    """Stable per-trial seed, identical across strategies."""
    ss = np.random.SeedSequence([seed_base, int(round(failure_rate * 1e6)), trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 62))


@dataclass
class TrialResult:
    strategy: str
    failure_rate: float
    trial: int
    seed: int
    records: List[TrialRecord]
    survival_seconds: float
    disconnected: bool
    final_perf: float


def run_trial(config: SwarmConfig, frame_ticks=(), out_dir: Optional[Path] = None,
              tag: str = "") -> TrialResult:
    """Run one trial until disconnection or max time, sampling metrics."""
    world = init_world(config)
    max_ticks = int(round(config.max_seconds * config.tick_rate))
    leader_cols = np.arange(config.leaders)
    records: List[TrialRecord] = []

    def sample(tick: int, connected: bool) -> TrialRecord:
        terminals = world.positions[world.leader_idx]
        smt = steiner_minimal_tree(terminals).length
        ratio = performance_ratio(smt, world.alive_count, config.range)
        rec = TrialRecord(tick=tick, alive_count=world.alive_count,
                          connected=connected, smt_length=smt, perf_ratio=ratio,
                          strategy=config.strategy,
                          failure_rate=config.failure_rate, seed=config.seed)
        records.append(rec)
        return rec

    disconnected = False
    end_tick = max_ticks
    while True:
        tick = world.tick
        if tick in frame_ticks and out_dir is not None:
            dump_frame(world, tick, out_dir / f"frame_{tag}{tick:06d}.svg",
                       out_dir / f"frame_{tag}{tick:06d}.json")
        step(world)
        if not world.connected:
            disconnected = True
            end_tick = tick
            break
        if tick % config.sample_every == 0:
            sample(tick, True)
        if tick >= max_ticks:
            end_tick = tick
            break
    final = sample(end_tick, not disconnected)
    return TrialResult(strategy=config.strategy, failure_rate=config.failure_rate,
                       trial=-1, seed=config.seed, records=records,
                       survival_seconds=end_tick / config.tick_rate,
                       disconnected=disconnected, final_perf=final.perf_ratio)


def write_trace(result: TrialResult, config: SwarmConfig, path: Path) -> None:
    lines = [TRACE_HEADER,
             f"# strategy={result.strategy} failure_rate={result.failure_rate:.6f} "
             f"trial={result.trial} seed={result.seed} n={config.n} "
             f"leaders={config.leaders} range={config.range:.6f}",
             "# columns: tick alive connected smt_length perf_ratio"]
    for r in result.records:
        lines.append(f"{r.tick} {r.alive_count} {int(r.connected)} "
                     f"{r.smt_length:.10e} {r.perf_ratio:.10e}")
    event = "disconnected" if result.disconnected else "maxtime"
    lines.append(f"# end {event} tick={result.records[-1].tick} "
                 f"survival={result.survival_seconds:.6f}")
    path.write_text("\n".join(lines) + "\n")


def read_trace(path: Path) -> dict:
    """Parse one trace file back into metadata and records."""
    meta, records, event = {}, [], None
    for line in path.read_text().splitlines():
        if line.startswith("# strategy="):
            for part in line[2:].split():
                k, v = part.split("=")
                meta[k] = v
        elif line.startswith("# end"):
            parts = line.split()
            event = parts[2]
            meta.update(p.split("=") for p in parts[3:] if "=" in p)
        elif line.startswith("#"):
            continue
        elif line.strip():
            tick, alive, conn, smt, ratio = line.split()
            records.append(TrialRecord(tick=int(tick), alive_count=int(alive),
                                       connected=bool(int(conn)),
                                       smt_length=float(smt),
                                       perf_ratio=float(ratio)))
    if event is None:
        raise ValueError(f"trace {path} has no end event")
    meta["event"] = event
    return {"meta": meta, "records": records}


def _run_cell_trial(args) -> TrialResult:
    config_dict, strategy, rate, trial, seed_base, max_seconds = args
    config = config_from_dict(config_dict)
    config = dataclasses.replace(config, strategy=strategy, failure_rate=rate,
                                 seed=trial_seed(seed_base, rate, trial),
                                 max_seconds=max_seconds)
    result = run_trial(config)
    result.trial = trial
    return result


def quartiles(values) -> tuple:
    """(q1, median, q3) by the standard linear-interpolation method."""
    v = np.asarray(values, dtype=float)
    return (float(np.percentile(v, 25)), float(np.percentile(v, 50)),
            float(np.percentile(v, 75)))


def summarize_results(results: List[TrialResult]) -> List[SummaryRow]:
    cells = {}
    for r in results:
        cells.setdefault((r.strategy, r.failure_rate), []).append(r)
    rows = []
    for (strategy, rate) in sorted(cells, key=lambda k: (k[0], k[1])):
        group = cells[(strategy, rate)]
        q1, med, q3 = quartiles([g.final_perf for g in group])
        _, med_surv, _ = quartiles([g.survival_seconds for g in group])
        rows.append(SummaryRow(strategy=strategy, failure_rate=rate,
                               trials=len(group), median_perf=med, q1_perf=q1,
                               q3_perf=q3, median_survival=med_surv))
    return rows


def write_summary_csv(rows: List[SummaryRow], path: Path) -> None:
    lines = ["strategy,failure_rate,trials,median_perf,q1_perf,q3_perf,"
             "median_survival_s,relay_reference"]
    for r in rows:
        lines.append(f"{r.strategy},{r.failure_rate:.6f},{r.trials},"
                     f"{r.median_perf:.10e},{r.q1_perf:.10e},{r.q3_perf:.10e},"
                     f"{r.median_survival:.6f},{relay_reference_line():.4f}")
    path.write_text("\n".join(lines) + "\n")


def run_experiment(plan: ExperimentPlan, base_config: SwarmConfig) -> List[SummaryRow]:
    """Run the full sweep, write traces and the summary CSV, return rows."""
    plan.validate()
    out = Path(plan.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".writable"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}")

    if plan.paper_scale:
        base_config = dataclasses.replace(base_config, n=400, leaders=5)

    tasks = []
    config_dict = config_to_dict(base_config)
    for strategy in plan.strategies:
        for rate in plan.failure_rates:
            for trial in range(plan.trials):
                tasks.append((config_dict, strategy, rate, trial,
                              plan.seed_base, plan.max_seconds))

    if plan.jobs > 1:
        with multiprocessing.Pool(plan.jobs) as pool:
            results = pool.map(_run_cell_trial, tasks)
    else:
        results = [_run_cell_trial(t) for t in tasks]
    results.sort(key=lambda r: (r.strategy, r.failure_rate, r.trial))

    trial_config = config_from_dict(config_dict)
    for r in results:
        name = f"trace_{r.strategy}_r{r.failure_rate:.6f}_t{r.trial:04d}.txt"
        write_trace(r, trial_config, out / name)

    rows = summarize_results(results)
    write_summary_csv(rows, out / "summary.csv")
    return rows


# --- configuration file handling -----------------------------------------

def serialize_config(config: SwarmConfig) -> str:
    lines = ["# steinerswarm configuration"]
    for f in dc_fields(SwarmConfig):
        lines.append(f"{f.name}={getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


def _coerce(key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is bool:
            if raw.lower() in ("true", "1"):
                return True
            if raw.lower() in ("false", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"malformed value for {key!r}: {raw!r}")


def parse_config(path: Optional[str] = None, overrides: Optional[dict] = None
                 ) -> SwarmConfig:
    """Load a key=value config file, apply overrides, validate everything."""
    types = {f.name: f.type for f in dc_fields(SwarmConfig)}
    # dataclass field types may be strings under future annotations
    resolved = {}
    defaults = SwarmConfig()
    for name in types:
        resolved[name] = type(getattr(defaults, name))

    values = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        for lineno, line in enumerate(p.read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in resolved:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, raw, resolved[key])
    for key, val in (overrides or {}).items():
        if key not in resolved:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, str(val), resolved[key]) if isinstance(val, str) \
            else val
    return config_from_dict(values)


# --- CLI -------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--max-seconds", type=float, help="simulated time cap")
    p.add_argument("--out", default="out", help="output directory")


def _config_from_args(args, strategy=None, failure_rate=None) -> SwarmConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_seconds is not None:
        overrides["max_seconds"] = args.max_seconds
    if strategy is not None:
        overrides["strategy"] = strategy
    if failure_rate is not None:
        overrides["failure_rate"] = failure_rate
    return parse_config(args.config, overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="steinerswarm",
        description="Headless swarm simulator and Steiner-tree benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment sweep")
    _add_common(p_run)
    p_run.add_argument("--strategy", default="base,lead,all",
                       help="comma-separated subset of base,lead,all")
    p_run.add_argument("--failure-rate", default="0",
                       help="comma-separated ascending failure rates")
    p_run.add_argument("--trials", type=int, default=20)
    p_run.add_argument("--paper-scale", action="store_true",
                       help="n=400, 5 leaders, 100 trials")
    p_run.add_argument("--jobs", type=int, default=1)

    p_sim = sub.add_parser("simulate", help="run a single trial with frame dumps")
    _add_common(p_sim)
    p_sim.add_argument("--strategy", default="all", choices=["base", "lead", "all"])
    p_sim.add_argument("--failure-rate", type=float, default=0.0)
    p_sim.add_argument("--frames", default="",
                       help="comma-separated ticks at which to dump SVG frames")

    p_render = sub.add_parser("render", help="re-render frames from dumped state")
    p_render.add_argument("--trace", required=True,
                          help="directory containing frame_*.json dumps")
    p_render.add_argument("--out", default="out")

    p_sum = sub.add_parser("summarize", help="summarize trace files into CSV")
    p_sum.add_argument("--traces", required=True, help="directory of trace_*.txt")
    p_sum.add_argument("--out", default="out")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as e:
        print(f"error: config: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    if args.command == "run":
        strategies = [s for s in args.strategy.split(",") if s]
        rates = [float(r) for r in args.failure_rate.split(",")]
        trials = 100 if (args.paper_scale and args.trials == 20) else args.trials
        base = _config_from_args(args)
        plan = ExperimentPlan(strategies=strategies, failure_rates=rates,
                              trials=trials, seed_base=args.seed or 0,
                              max_seconds=args.max_seconds or base.max_seconds,
                              out_dir=args.out, paper_scale=args.paper_scale,
                              jobs=args.jobs)
        rows = run_experiment(plan, base)
        for r in rows:
            print(f"{r.strategy} rate={r.failure_rate:.4f} "
                  f"median_perf={r.median_perf:.4f} "
                  f"median_survival={r.median_survival:.1f}s")
        return 0

    if args.command == "simulate":
        config = _config_from_args(args, strategy=args.strategy,
                                   failure_rate=args.failure_rate)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        frames = [int(t) for t in args.frames.split(",") if t]
        result = run_trial(config, frame_ticks=set(frames), out_dir=out)
        result.trial = 0
        write_trace(result, config, out / "trace_single.txt")
        event = "disconnected" if result.disconnected else "reached max time"
        print(f"{event} at t={result.survival_seconds:.2f}s, "
              f"perf_ratio={result.final_perf:.4f}")
        return 0

    if args.command == "render":
        src = Path(args.trace)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        count = 0
        for statefile in sorted(src.glob("frame_*.json")):
            state = json.loads(statefile.read_text())
            svg = render_state(state)
            (out / statefile.name.replace(".json", ".svg")).write_text(svg)
            count += 1
        print(f"rendered {count} frames")
        return 0

    if args.command == "summarize":
        src = Path(args.traces)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        results = []
        for trace in sorted(src.glob("trace_*.txt")):
            data = read_trace(trace)
            meta = data["meta"]
            final = data["records"][-1]
            results.append(TrialResult(
                strategy=meta["strategy"], failure_rate=float(meta["failure_rate"]),
                trial=int(meta.get("trial", -1)), seed=int(meta.get("seed", 0)),
                records=data["records"],
                survival_seconds=float(meta.get("survival", 0.0)),
                disconnected=meta["event"] == "disconnected",
                final_perf=final.perf_ratio))
        rows = summarize_results(results)
        write_summary_csv(rows, out / "summary.csv")
        print(f"summarized {len(results)} traces into {out / 'summary.csv'}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
