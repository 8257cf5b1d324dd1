"""Command-line entry point: headless runs, ablation sweeps, replay, serving.

Exit codes: 0 success, 2 scenario/validation error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (
    ArmsteerError,
    BehindCameraError,
    ConfigurationError,
    DivergenceError,
    NumericalIntegrityError,
)
from .scenario import Scenario, parse_scenario, parse_scenario_dict
from .simulator import IntentSchedule, Simulation, run
from .telemetry import TelemetryLog, summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _apply_overrides(scn: Scenario, args) -> Scenario:
    sim = scn.sim
    if getattr(args, "duration", None) is not None:
        sim = replace(sim, duration=args.duration)
    if getattr(args, "hz", None) is not None:
        sim = replace(sim, dt=1.0 / args.hz)
    if getattr(args, "seed", None) is not None:
        sim = replace(sim, seed=args.seed)
    if getattr(args, "integrator", None) is not None:
        sim = replace(sim, integrator=args.integrator)
    controller = scn.controller
    if getattr(args, "no_adapt", False):
        controller = replace(controller, adaptation_enabled=False)
    return replace(scn, sim=sim, controller=controller)


def _write_outputs(out_dir: Path, scn: Scenario, log: TelemetryLog, metrics,
                   extra: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    log.to_csv(out_dir / "telemetry.csv")
    (out_dir / "effective_config.yaml").write_text(scn.echo_yaml())
    payload = dataclasses.asdict(metrics)
    if extra:
        payload.update(extra)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _print_metrics(name: str, metrics) -> None:
    print(f"== {name} ==")
    for label, value in metrics.table_rows():
        print(f"  {label:<38} {value}")


def cmd_run(args) -> int:
    scn = _apply_overrides(parse_scenario(args.scenario), args)
    out_dir = Path(args.out) if args.out else None
    try:
        log, metrics = run(scn)
    except (DivergenceError, NumericalIntegrityError) as err:
        print(f"error: {err}", file=sys.stderr)
        if out_dir is not None and err.telemetry is not None and len(err.telemetry):
            out_dir.mkdir(parents=True, exist_ok=True)
            err.telemetry.to_csv(out_dir / "telemetry_partial.csv")
            print(f"partial telemetry dumped to {out_dir}", file=sys.stderr)
        return EXIT_DIVERGED
    extra = {"scenario": scn.name}
    if args.compare_intent_off:
        log_off, _ = run(scn, intents=IntentSchedule.empty(scn.robot.n))
        divergence = max(
            float(np.linalg.norm(a.x - b.x)) for a, b in zip(log, log_off)
        )
        extra["intent_off_max_divergence_px"] = divergence
        print(f"paired d=0 run: max image-trajectory divergence "
              f"{divergence:.3e} px")
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            log_off.to_csv(out_dir / "telemetry_intent_off.csv")
    if out_dir is not None:
        _write_outputs(out_dir, scn, log, metrics, extra)
    _print_metrics(scn.name, metrics)
    return EXIT_OK


def _ablation_worker(payload) -> tuple[int, float, float]:
    effective, seed, t_check = payload
    scn = parse_scenario_dict(effective, name=effective.get("name", "scenario"))
    sim = replace(scn.sim, seed=seed,
                  duration=max(t_check + scn.sim.dt, 2 * scn.sim.dt))
    errs = []
    for adapt in (True, False):
        variant = replace(scn, sim=sim,
                          controller=replace(scn.controller,
                                             adaptation_enabled=adapt))
        try:
            log, _ = run(variant)
            k = min(round(t_check / variant.sim.dt), len(log) - 1)
            errs.append(log[k].error_norm)
        except (DivergenceError, NumericalIntegrityError):
            errs.append(float("inf"))
    return seed, errs[0], errs[1]


def cmd_ablate(args) -> int:
    scn = parse_scenario(args.scenario)
    effective = scn.effective_dict()
    payloads = [(effective, seed, args.t_check) for seed in range(args.seeds)]
    rows = []
    if args.workers > 1:
        try:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
                rows = list(pool.map(_ablation_worker, payloads))
        except (OSError, RuntimeError):
            rows = []
    if not rows:
        rows = [_ablation_worker(p) for p in payloads]
    wins = sum(1 for _, ea, en in rows if ea <= en)
    print(f"ablation over {args.seeds} seeds (|e| at t={args.t_check:g} s):")
    print(f"  {'seed':>4}  {'adaptive':>12}  {'no-adapt':>12}  result")
    for seed, ea, en in rows:
        verdict = "win" if ea < en else ("tie" if ea == en else "loss")
        print(f"  {seed:>4}  {ea:>12.4f}  {en:>12.4f}  {verdict}")
    print(f"adaptive <= non-adaptive in {wins}/{args.seeds} seeds")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "ablation.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "error_adaptive_px", "error_no_adapt_px", "win"])
            for seed, ea, en in rows:
                writer.writerow([seed, repr(ea), repr(en), int(ea <= en)])
        with open(out_dir / "ablation_summary.json", "w") as fh:
            json.dump({"scenario": scn.name, "seeds": args.seeds,
                       "t_check_s": args.t_check, "wins": wins}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def read_intent_trace(path) -> list[np.ndarray]:
    """Per-step applied intents recorded by the session service."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    dims = [name for name in header if name.startswith("d")]
    trace = []
    for row in reader:
        trace.append(np.array([float(v) for v in row[1:1 + len(dims)]]))
    return trace


def cmd_replay(args) -> int:
    scn = _apply_overrides(parse_scenario(args.scenario), args)
    trace = read_intent_trace(args.trace)
    sim = Simulation(scn)
    log = TelemetryLog()
    try:
        for k in range(len(trace)):
            log.append(sim.step(trace[k]))
    except (DivergenceError, NumericalIntegrityError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    metrics = summarize(log)
    if args.out:
        _write_outputs(Path(args.out), scn, log, metrics,
                       {"replayed_trace": str(args.trace)})
    _print_metrics(f"{scn.name} (replay)", metrics)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve  # uvicorn import deferred to keep CLI light

    scn = _apply_overrides(parse_scenario(args.scenario), args)
    host, _, port = args.bind.rpartition(":")
    serve(scn, host=host or "127.0.0.1", port=int(port),
          decimation=args.decimation, out_dir=args.out, ui_dir=args.ui,
          pace=args.pace)
    return EXIT_OK


def cmd_validate(args) -> int:
    scn = parse_scenario(args.scenario)
    print(f"{args.scenario}: valid ({scn.robot.n}-joint {scn.robot.name}, "
          f"target {type(scn.target).__name__}, {scn.sim.steps} steps)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armsteer",
        description="Visual-servoing arm simulator with null-space steering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="output directory for telemetry/summary")
    p_run.add_argument("--duration", type=float)
    p_run.add_argument("--hz", type=float, help="control rate override")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--no-adapt", action="store_true",
                       help="disable parameter adaptation (ablation)")
    p_run.add_argument("--integrator", choices=["euler", "rk4"])
    p_run.add_argument("--compare-intent-off", action="store_true",
                       help="also run with d=0 and report image divergence")
    p_run.set_defaults(func=cmd_run)

    p_abl = sub.add_parser("ablate", help="adaptive vs non-adaptive seed sweep")
    p_abl.add_argument("scenario")
    p_abl.add_argument("--seeds", type=int, default=20)
    p_abl.add_argument("--t-check", type=float, default=2.0)
    p_abl.add_argument("--out")
    p_abl.add_argument("--workers", type=int, default=4)
    p_abl.set_defaults(func=cmd_ablate)

    p_rep = sub.add_parser("replay", help="replay a recorded intent trace headless")
    p_rep.add_argument("scenario")
    p_rep.add_argument("trace")
    p_rep.add_argument("--out")
    p_rep.set_defaults(func=cmd_replay)

    p_srv = sub.add_parser("serve", help="run a live session service")
    p_srv.add_argument("scenario")
    p_srv.add_argument("--bind", default="127.0.0.1:8732")
    p_srv.add_argument("--decimation", type=int, default=1)
    p_srv.add_argument("--out", help="record telemetry and intent trace here")
    p_srv.add_argument("--ui", help="static UI bundle directory to serve at /")
    p_srv.add_argument("--pace", type=float, default=1.0,
                       help="wall seconds per simulated second (0 = free-run)")
    p_srv.set_defaults(func=cmd_serve)

    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, BehindCameraError) as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ArmsteerError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
