"""Shared oracle-run helpers for the test suite."""

from __future__ import annotations

from spatfcd import preprocess
from spatfcd.config import Settings
from spatfcd.fcd import StartEvent, TrajectoryRecord, StopDetail
from spatfcd.oracle import SimConfig, constant_plan, fitted_calibration, simulate
from spatfcd.tod import _aligned

SETTINGS = Settings()


def oracle_events(seed: int, cycle_s: float = 90.0, red_s: int = 50,
                  days: int = 20, penetration: float = 0.1,
                  jitter: float = 5.0, hours=(7, 10), **kw):
    """Simulate, clean and calibrate one constant-plan run; weekday events."""
    plan = constant_plan("X1", cycle_s, red_s)
    cfg = SimConfig(plan=plan, days=days, penetration=penetration,
                    start_jitter_sd_s=jitter, hours=hours, seed=seed, **kw)
    records, truth = simulate(cfg)
    kept, _ = preprocess.clean(records, SETTINGS.clean)
    events = [e for e in preprocess.calibrate(kept, fitted_calibration(cfg))
              if e.day_class == "weekday"]
    return records, kept, events, cfg


def oracle_window(seed: int, window_clock_s: int = 8 * 3600, **kw):
    """One aligned analysis window from a constant-plan oracle run."""
    _, _, events, _ = oracle_events(seed, **kw)
    return _aligned(events, "weekday", window_clock_s, 3600,
                    SETTINGS.superpose.min_events)


def synthetic_events(rel_times, day_index: int = 19723,
                     day_class: str = "weekday") -> list[StartEvent]:
    """StartEvents at given clock seconds of a single synthetic day."""
    out = []
    for rel in rel_times:
        ts = day_index * 86400 + int(rel)
        out.append(StartEvent("X1", "N", "straight", ts, ts, day_index, day_class))
    return out


def plain_record(entry=1000, exit_=1060, stop=None, **kw) -> TrajectoryRecord:
    fields = dict(city="SYN", road_level=1, intersection_id="X1",
                  approach="N", movement="straight", entry_ts=entry,
                  exit_ts=exit_, travel_time=exit_ - entry, stop=stop)
    fields.update(kw)
    return TrajectoryRecord(**fields)


def stopped_record(stop_ts=1020, wait_s=30.0, dist_m=0.0, entry=1000, exit_=1060):
    return plain_record(entry=entry, exit_=exit_,
                        stop=StopDetail(wait_s=wait_s, dist_to_stopline_m=dist_m,
                                        stop_ts=stop_ts))
