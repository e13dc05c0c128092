"""Command-line pipeline driver: every stage is a subcommand.

Machine output goes to files or stdout; logs and counters go to stderr.
Exit codes: 0 success (recalls included), 1 when estimation produced nothing
usable, 2 for usage, config or path errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import evaluate, pipeline, plots, preprocess
from .config import ConfigError, Settings, load_settings
from .duration import analyze_waits, build_overlay
from .errors import CorruptDatasetError
from .fcd import (
    PhaseEstimate,
    read_calibration,
    read_estimates,
    read_events,
    read_fcd,
    read_truth,
    write_calibration,
    write_estimates,
    write_events,
    write_fcd,
    write_truth,
    clock_of,
)
from .oracle import SimConfig, constant_plan, fitted_calibration, simulate, switch_plan
from .tod import _aligned

log = logging.getLogger("spatfcd")

USAGE_ERROR = 2
ESTIMATION_ERROR = 1


class CliError(Exception):
    def __init__(self, message: str, code: int = USAGE_ERROR):
        super().__init__(message)
        self.code = code


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(f"{what} not found: {path}")
    return p


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_settings(args) -> Settings:
    if args.config is None:
        return Settings()
    _require(args.config, "config file")
    return load_settings(args.config)


def _parse_clock(value: str) -> int:
    if ":" in value:
        hh, mm = value.split(":")
        return int(hh) * 3600 + int(mm) * 60
    return int(value)


# ----------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    out = _out_dir(args.out)
    approaches = tuple(args.approaches.split(","))
    if args.switch_clock is not None:
        plan = switch_plan(args.intersection, args.cycle, args.red,
                           args.cycle2 or args.cycle, args.red2 or args.red,
                           _parse_clock(args.switch_clock), approaches)
    else:
        plan = constant_plan(args.intersection, args.cycle, args.red, approaches)
    hours = None
    if args.hours:
        h0, h1 = args.hours.split("-")
        hours = (int(h0), int(h1))
    cfg = SimConfig(
        plan=plan, arrival_rate_vph=args.rate, penetration=args.penetration,
        start_jitter_sd_s=args.jitter, days=args.days, seed=args.seed,
        hours=hours, long_parker_rate=args.long_parker_rate,
        dropped_stop_rate=args.dropped_stop_rate, day_class=args.day_class,
    )
    records, truth = simulate(cfg)
    write_fcd(records, out / "fcd.csv")
    write_truth([truth], out / "truth.jsonl")
    write_calibration(fitted_calibration(cfg), out / "calibration.csv")
    log.info("synth: %d records over %d days -> %s", len(records), args.days, out)
    return 0


def _read_inputs(args) -> tuple[list, object]:
    report = read_fcd(_require(args.fcd, "FCD file"))
    log.info("read %d records (%d malformed lines rejected)",
             len(report.records), report.rejected)
    table = read_calibration(_require(args.calibration, "calibration table"))
    return report.records, table


def cmd_preprocess(args) -> int:
    settings = _load_settings(args)
    records, table = _read_inputs(args)
    out = _out_dir(args.out)
    events, counters = preprocess.run(records, table, settings, args.day_class)
    write_events(events, out / "events.csv")
    log.info("preprocess: %s", counters)
    return 0


def cmd_cycle(args) -> int:
    settings = _load_settings(args)
    events = read_events(_require(args.events, "events file"))
    out = _out_dir(args.out)
    rows = pipeline.stage_cycle(events, settings)
    pipeline.write_cycle_windows(rows, out / "cycle_windows.jsonl")
    reliable = sum(1 for r in rows if r["status"] == "ok")
    log.info("cycle: %d/%d reliable windows", reliable, len(rows))
    return 0


def cmd_tod(args) -> int:
    settings = _load_settings(args)
    events = read_events(_require(args.events, "events file"))
    out = _out_dir(args.out)
    schedules, failures = pipeline.stage_tod(events, settings)
    pipeline.write_schedules(schedules, out / "schedule.jsonl")
    log.info("tod: %d schedules, %d streams failed", len(schedules), len(failures))
    return 0 if schedules else ESTIMATION_ERROR


def cmd_duration(args) -> int:
    settings = _load_settings(args)
    records, table = _read_inputs(args)
    events = read_events(_require(args.events, "events file"))
    schedules = pipeline.read_schedules(_require(args.schedule, "schedule file"))
    cycle_rows = pipeline.read_cycle_windows(_require(args.windows, "cycle windows file"))
    kept, _ = preprocess.clean(records, settings.clean)
    out = _out_dir(args.out)
    rows = pipeline.stage_duration(kept, events, schedules, cycle_rows, settings)
    write_estimates(rows, out / "estimates.jsonl")
    ok = sum(1 for r in rows if isinstance(r, PhaseEstimate))
    log.info("duration: %d estimates, %d recalled", ok, len(rows) - ok)
    return 0 if ok else ESTIMATION_ERROR


def _run_one(payload):
    records, table, settings, day_class = payload
    return pipeline.run_pipeline(records, table, settings, day_class)


def cmd_pipeline(args) -> int:
    settings = _load_settings(args)
    records, table = _read_inputs(args)
    out = _out_dir(args.out)
    by_intersection: dict[str, list] = {}
    for r in records:
        by_intersection.setdefault(r.intersection_id, []).append(r)
    chunks = [(recs, table, settings, args.day_class)
              for _, recs in sorted(by_intersection.items())]
    if args.jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, chunks))
    else:
        results = [_run_one(chunk) for chunk in chunks]
    events, cycle_rows, estimates = [], [], []
    schedules = {}
    for res in results:
        events.extend(res.events)
        cycle_rows.extend(res.cycle_windows)
        estimates.extend(res.estimates)
        schedules.update(res.schedules)
        log.info("pipeline counters: %s", res.counters)
    write_events(events, out / "events.csv")
    pipeline.write_cycle_windows(cycle_rows, out / "cycle_windows.jsonl")
    pipeline.write_schedules(schedules, out / "schedule.jsonl")
    write_estimates(estimates, out / "estimates.jsonl")
    ok = sum(1 for r in estimates if isinstance(r, PhaseEstimate))
    log.info("pipeline: %d estimates (%d recalled) -> %s",
             ok, len(estimates) - ok, out)
    return 0 if ok else ESTIMATION_ERROR


def cmd_eval(args) -> int:
    rows = read_estimates(_require(args.estimates, "estimates file"))
    truths = read_truth(_require(args.truth, "truth file"))
    reports = evaluate.score_run(rows, truths)
    print(evaluate.report_to_json(reports))
    print(evaluate.format_table(reports), file=sys.stderr)
    if args.out:
        out = _out_dir(args.out)
        (out / "report.json").write_text(evaluate.report_to_json(reports) + "\n")
        (out / "report.txt").write_text(evaluate.format_table(reports) + "\n")
    return 0 if any(r.n_cases for r in reports.values()) else ESTIMATION_ERROR


def cmd_plot(args) -> int:
    settings = _load_settings(args)
    records, table = _read_inputs(args)
    events, _ = preprocess.run(records, table, settings, args.day_class)
    groups = pipeline.group_events(events)
    if not groups:
        raise CliError("no start events to plot", ESTIMATION_ERROR)
    key = next(iter(groups)) if args.approach is None else next(
        (k for k in groups if k[1] == args.approach), None)
    if key is None:
        raise CliError(f"approach {args.approach!r} not present")
    group = groups[key]
    window_clock = _parse_clock(args.window)

    if args.fig in (2, 3):
        aligned = _aligned(group, group[0].day_class, window_clock, 3600,
                           settings.superpose.min_events)
        text = (plots.superposition_csv(aligned) if args.fig == 2
                else plots.spectrum_csv(aligned, settings.cycle))
    else:
        kept, _ = preprocess.clean(records, settings.clean)
        result = pipeline.run_pipeline(records, table, settings, args.day_class)
        est = next((r for r in result.estimates
                    if isinstance(r, PhaseEstimate)
                    and (r.intersection_id, r.approach, r.movement) == key), None)
        if est is None:
            raise CliError("no confirmed estimate available to plot", ESTIMATION_ERROR)
        in_period = lambda ts: est.period_start_s <= clock_of(ts) < est.period_end_s
        recs = [r for r in kept
                if (r.intersection_id, r.approach, r.movement) == key]
        stopped = [r for r in recs if r.stop is not None
                   and in_period(r.stop.stop_ts + r.stop.wait_s)
                   and r.stop.wait_s <= est.cycle_s]
        if args.fig == 6:
            analysis = analyze_waits([r.stop.wait_s for r in stopped],
                                     settings.duration)
            text = plots.waits_csv(analysis)
        else:
            crossings = [r.exit_ts for r in recs if in_period(r.exit_ts)]
            anchors = [e.calibrated_start_ts for e in group
                       if in_period(e.calibrated_start_ts)]
            overlay = build_overlay(stopped, crossings, anchors, est.cycle_s)
            if overlay is None:
                raise CliError("overlay undefined for this stream", ESTIMATION_ERROR)
            text = plots.overlay_csv(overlay)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatfcd",
        description="Estimate signal phase and timing from floating-car data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", default=None, help="flat key=value settings file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--day-class", choices=("weekday", "weekend"),
                       default="weekday")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate synthetic FCD with known truth")
    common(p)
    p.add_argument("--intersection", default="X1")
    p.add_argument("--cycle", type=float, default=90.0)
    p.add_argument("--red", type=int, default=50)
    p.add_argument("--cycle2", type=float, default=None)
    p.add_argument("--red2", type=int, default=None)
    p.add_argument("--switch-clock", default=None, help="HH:MM of a schedule change")
    p.add_argument("--rate", type=float, default=600.0, help="arrivals per hour")
    p.add_argument("--penetration", type=float, default=0.1)
    p.add_argument("--jitter", type=float, default=5.0)
    p.add_argument("--days", type=int, default=20)
    p.add_argument("--hours", default=None, help="restrict generation, e.g. 7-10")
    p.add_argument("--approaches", default="N")
    p.add_argument("--long-parker-rate", type=float, default=0.0)
    p.add_argument("--dropped-stop-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="clean, calibrate and extract start events")
    common(p)
    p.add_argument("--fcd", required=True)
    p.add_argument("--calibration", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("cycle", help="hourly cycle-length estimates")
    common(p)
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("tod", help="time-of-day schedule boundaries")
    common(p)
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_tod)

    p = sub.add_parser("duration", help="red/green durations with vote confirmation")
    common(p)
    p.add_argument("--fcd", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--windows", required=True)
    p.set_defaults(func=cmd_duration)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    common(p)
    p.add_argument("--fcd", required=True)
    p.add_argument("--calibration", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="score estimates against a truth sidecar")
    common(p, out_required=False)
    p.add_argument("--estimates", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="emit CSV series for the diagnostic figures")
    common(p, out_required=False)
    p.add_argument("--fig", type=int, choices=(2, 3, 6, 7), required=True)
    p.add_argument("--fcd", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--approach", default=None)
    p.add_argument("--window", default="08:00", help="window clock start for figs 2-3")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except (ConfigError, CorruptDatasetError, OSError) as exc:
        log.error("%s", exc)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
