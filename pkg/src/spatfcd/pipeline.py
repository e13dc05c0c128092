"""End-to-end driver chaining preprocess, cycle, TOD and duration stages.

Every stage's intermediate product has a file form, so the CLI can run
stages separately and a chained run equals the all-in-one run by
construction (the same functions produce both).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import preprocess
from .config import Settings
from .cycle import select_cycle
from .duration import analyze_waits, vote_confirm
from .errors import EstimationError
from .fcd import (
    DAY_S,
    CalibrationTable,
    EstimateRow,
    PhaseEstimate,
    RecalledCase,
    StartEvent,
    TrajectoryRecord,
    clock_of,
)
from .tod import TodPeriod, TodSchedule, build_schedule, _aligned


GroupKey = tuple[str, str, str]  # (intersection_id, approach, movement)


@dataclass(slots=True)
class PipelineResult:
    estimates: list[EstimateRow]
    events: list[StartEvent]
    cycle_windows: list[dict]
    schedules: dict[GroupKey, TodSchedule]
    counters: dict[str, int] = field(default_factory=dict)


def group_events(events: list[StartEvent]) -> dict[GroupKey, list[StartEvent]]:
    groups: dict[GroupKey, list[StartEvent]] = {}
    for e in events:
        groups.setdefault((e.intersection_id, e.approach, e.movement), []).append(e)
    return dict(sorted(groups.items()))


def group_records(records: list[TrajectoryRecord]) -> dict[GroupKey, list[TrajectoryRecord]]:
    groups: dict[GroupKey, list[TrajectoryRecord]] = {}
    for r in records:
        groups.setdefault((r.intersection_id, r.approach, r.movement), []).append(r)
    return dict(sorted(groups.items()))


def stage_cycle(events: list[StartEvent], settings: Settings) -> list[dict]:
    """Hourly cycle estimates per stream, as serializable rows."""
    rows = []
    for (iid, ap, mv), group in group_events(events).items():
        day_class = group[0].day_class
        for hour in range(24):
            aligned = _aligned(group, day_class, hour * 3600, 3600,
                               settings.superpose.min_events)
            row = {
                "intersection_id": iid, "approach": ap, "movement": mv,
                "window_clock_s": hour * 3600,
                "support_n": len(aligned.events),
            }
            try:
                est = select_cycle(aligned, settings.cycle)
                row.update(status="ok", cycle_s=est.best.c, ks_d=est.best.ks_d)
            except EstimationError as exc:
                row.update(status="unreliable", cycle_s=None, ks_d=None,
                           reason=type(exc).__name__)
            rows.append(row)
    return rows


def stage_tod(events: list[StartEvent],
              settings: Settings) -> tuple[dict[GroupKey, TodSchedule], list[RecalledCase]]:
    """Schedules per stream; streams with no usable scan fall back later."""
    schedules: dict[GroupKey, TodSchedule] = {}
    failures: list[RecalledCase] = []
    for key, group in group_events(events).items():
        try:
            schedules[key] = build_schedule(group, settings)
        except EstimationError as exc:
            failures.append(RecalledCase(*key, 0, DAY_S, "tod",
                                         f"{type(exc).__name__}: {exc}", len(group)))
    return schedules, failures


def _fallback_schedule(group: list[StartEvent], settings: Settings) -> Optional[TodSchedule]:
    """Single-period schedule from the best hourly window, if any is reliable."""
    day_class = group[0].day_class
    best = None
    for hour in range(24):
        aligned = _aligned(group, day_class, hour * 3600, 3600,
                           settings.superpose.min_events)
        try:
            est = select_cycle(aligned, settings.cycle)
        except EstimationError:
            continue
        if best is None or est.best.ks_d > best.best.ks_d:
            best = est
    if best is None:
        return None
    return TodSchedule(periods=(TodPeriod(0, DAY_S, best.best.c, None),))


def _period_confidence(cycle_rows: list[dict], key: GroupKey,
                       period: TodPeriod) -> float:
    ks = [row["ks_d"] for row in cycle_rows
          if (row["intersection_id"], row["approach"], row["movement"]) == key
          and row["status"] == "ok"
          and row["window_clock_s"] >= period.start_clock_s
          and row["window_clock_s"] + 3600 <= period.end_clock_s]
    return float(np.median(ks)) if ks else 0.0


def stage_duration(records: list[TrajectoryRecord], events: list[StartEvent],
                   schedules: dict[GroupKey, TodSchedule],
                   cycle_rows: list[dict], settings: Settings) -> list[EstimateRow]:
    """Red/green estimation with vote confirmation, per stream and TOD period."""
    rec_groups = group_records(records)
    ev_groups = group_events(events)
    out: list[EstimateRow] = []
    for key, schedule in sorted(schedules.items()):
        recs = rec_groups.get(key, [])
        evs = ev_groups.get(key, [])
        for period in schedule.periods:
            c = period.cycle_s
            in_period = lambda ts: period.start_clock_s <= clock_of(ts) < period.end_clock_s
            stopped = [r for r in recs if r.stop is not None
                       and in_period(r.stop.stop_ts + r.stop.wait_s)
                       and r.stop.wait_s <= c]
            crossings = [r.exit_ts for r in recs if in_period(r.exit_ts)]
            anchors = [e.calibrated_start_ts for e in evs
                       if in_period(e.calibrated_start_ts)]
            waits = [r.stop.wait_s for r in stopped]
            confidence = _period_confidence(cycle_rows, key, period)
            base = dict(zip(("intersection_id", "approach", "movement"), key))
            try:
                analysis = analyze_waits(waits, settings.duration)
                red = analysis.red_s
                if not 0 < red < c:
                    raise EstimationError(f"red {red} outside (0, {c:.1f})")
            except EstimationError as exc:
                out.append(RecalledCase(
                    **base, period_start_s=period.start_clock_s,
                    period_end_s=period.end_clock_s, stage="duration",
                    reason=f"{type(exc).__name__}: {exc}", support_n=len(waits)))
                continue
            vote = vote_confirm(stopped, crossings, c, red, anchors)
            out.append(PhaseEstimate(
                **base, period_start_s=period.start_clock_s,
                period_end_s=period.end_clock_s, cycle_s=c, red_s=red,
                green_s=c - red, valid=vote.valid, confidence=confidence,
                support_n=len(waits)))
    return out


def run_pipeline(records: list[TrajectoryRecord], table: CalibrationTable,
                 settings: Settings, day_class: str = "weekday") -> PipelineResult:
    events, counters = preprocess.run(records, table, settings, day_class)
    kept, _ = preprocess.clean(records, settings.clean)
    cycle_rows = stage_cycle(events, settings)
    schedules, failures = stage_tod(events, settings)
    estimates: list[EstimateRow] = list(failures)
    ev_groups = group_events(events)
    recovered: dict[GroupKey, TodSchedule] = dict(schedules)
    still_failed = []
    for case in failures:
        key = (case.intersection_id, case.approach, case.movement)
        fallback = _fallback_schedule(ev_groups.get(key, []), settings)
        if fallback is not None:
            recovered[key] = fallback
        else:
            still_failed.append(case)
    estimates = list(still_failed)
    estimates.extend(stage_duration(kept, events, recovered, cycle_rows, settings))
    estimates.sort(key=lambda r: (r.intersection_id, r.approach, r.movement,
                                  r.period_start_s))
    counters["recalled"] = sum(1 for r in estimates if isinstance(r, RecalledCase))
    counters["estimates"] = len(estimates)
    return PipelineResult(estimates=estimates, events=events,
                          cycle_windows=cycle_rows, schedules=recovered,
                          counters=counters)


# ---------------------------------------------------------------- file forms

def write_cycle_windows(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_cycle_windows(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(ln) for ln in fh if ln.strip()]


def write_schedules(schedules: dict[GroupKey, TodSchedule], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (iid, ap, mv), sched in sorted(schedules.items()):
            obj = {
                "intersection_id": iid, "approach": ap, "movement": mv,
                "periods": [
                    {"start_clock_s": p.start_clock_s, "end_clock_s": p.end_clock_s,
                     "cycle_s": p.cycle_s,
                     "max_dispersion_at_split": p.max_dispersion_at_split}
                    for p in sched.periods
                ],
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_schedules(path) -> dict[GroupKey, TodSchedule]:
    out: dict[GroupKey, TodSchedule] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            if not ln.strip():
                continue
            obj = json.loads(ln)
            periods = tuple(
                TodPeriod(p["start_clock_s"], p["end_clock_s"], p["cycle_s"],
                          p["max_dispersion_at_split"])
                for p in obj["periods"]
            )
            out[(obj["intersection_id"], obj["approach"], obj["movement"])] = \
                TodSchedule(periods=periods)
    return out
