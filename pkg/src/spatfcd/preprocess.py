"""Trajectory cleaning, start-time calibration, multi-day superposition.

The output of this stage is the AlignedWindow: start events from many
comparable days folded into one window, with each day shifted so its first
event sits at the window reference. Everything downstream consumes these.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import CleanSettings, Settings
from .fcd import (
    DAY_S,
    StartEvent,
    CalibrationTable,
    TrajectoryRecord,
    clock_of,
    day_class_of,
    day_index_of,
    round_half_away,
)


@dataclass(slots=True)
class AlignedWindow:
    """One analysis window of superposed, per-day-aligned start events.

    `events` holds (rel_time_s, day_index) pairs with rel_time_s in
    [0, duration_s); for every contributing day the smallest rel_time_s is 0.
    Alignment offsets are computed per (approach, movement) stream.
    """

    intersection_id: str
    approach: str
    movement: str
    window_start_ts: int
    day_class: str
    duration_s: int = 3600
    events: tuple = ()
    per_day_offset_s: dict = field(default_factory=dict)
    low_support: bool = False

    def rel_times(self) -> list[float]:
        return [rel for rel, _ in self.events]


def clean(records: list[TrajectoryRecord],
          cfg: CleanSettings | None = None) -> tuple[list[TrajectoryRecord], int]:
    """Drop trajectories with implausible timing or stopping values.

    Returns (kept, rejected_count); filtering never raises.
    """
    cfg = cfg or CleanSettings()
    min_travel = cfg.approach_len_m / cfg.max_speed_mps
    kept = []
    for r in records:
        if not 0 < r.travel_time <= cfg.max_travel_s:
            continue
        if r.travel_time < min_travel:
            continue
        if r.stop is not None:
            if r.stop.wait_s > cfg.max_wait_s:
                continue
            if r.stop.dist_to_stopline_m > cfg.max_dist_m:
                continue
        kept.append(r)
    return kept, len(records) - len(kept)


def calibrate(records: list[TrajectoryRecord],
              table: CalibrationTable) -> list[StartEvent]:
    """Turn stopping records into start events with queue-position correction.

    The raw start (stop_ts + wait_s) is moved earlier by the table's linear
    model of distance to the stop line, clamped so it never precedes the stop.
    Non-stopping records produce no event.
    """
    events = []
    for r in records:
        if r.stop is None:
            continue
        raw = round_half_away(r.stop.stop_ts + r.stop.wait_s)
        hour = clock_of(raw) // 3600
        slope, icept = table.lookup(r.city, r.road_level, hour)
        correction = round_half_away(slope * r.stop.dist_to_stopline_m + icept)
        cal = max(raw - correction, r.stop.stop_ts)
        events.append(StartEvent(
            intersection_id=r.intersection_id,
            approach=r.approach,
            movement=r.movement,
            raw_start_ts=raw,
            calibrated_start_ts=cal,
            day_index=day_index_of(cal),
            day_class=day_class_of(cal),
        ))
    return events


def superpose(events: list[StartEvent], day_class: str, window_start_ts: int,
              duration_s: int = 3600, min_events: int = 30) -> AlignedWindow:
    """Fold events from many days of one clock window onto a shared timeline.

    For each contributing day the offset is that day's first calibrated start
    minus the day's window start; subtracting it pins every day's first event
    to relative time 0. An empty event set yields a valid, low-support window.
    """
    clock = window_start_ts % DAY_S
    ids = {(e.intersection_id, e.approach, e.movement) for e in events}
    if len(ids) > 1:
        raise ValueError("superpose expects a single (intersection, approach, movement) stream")
    raw_rel: list[tuple[int, int]] = []
    for e in events:
        if e.day_class != day_class:
            raise ValueError(f"event day_class {e.day_class!r} != {day_class!r}")
        day_window_start = e.day_index * DAY_S + clock
        rel = e.calibrated_start_ts - day_window_start
        if not 0 <= rel < duration_s:
            raise ValueError("event outside its day's window")
        raw_rel.append((rel, e.day_index))
    offsets: dict[int, int] = {}
    for rel, day in raw_rel:
        if day not in offsets or rel < offsets[day]:
            offsets[day] = rel
    aligned = sorted(((rel - offsets[day], day) for rel, day in raw_rel))
    iid, approach, movement = next(iter(ids)) if ids else ("", "", "")
    return AlignedWindow(
        intersection_id=iid,
        approach=approach,
        movement=movement,
        window_start_ts=window_start_ts,
        day_class=day_class,
        duration_s=duration_s,
        events=tuple(aligned),
        per_day_offset_s=dict(sorted(offsets.items())),
        low_support=len(aligned) < min_events,
    )


def run(records: list[TrajectoryRecord], table: CalibrationTable,
        settings: Settings, day_class: str) -> tuple[list[StartEvent], dict]:
    """Full preprocessing stage: clean, calibrate, filter to one day class."""
    kept, rejected = clean(records, settings.clean)
    events = calibrate(kept, table)
    selected = [e for e in events if e.day_class == day_class]
    counters = {
        "records": len(records),
        "rejected": rejected,
        "events": len(events),
        "events_selected": len(selected),
    }
    return selected, counters
