"""Domain records and dataset I/O.

Trajectory records, calibrated start events, ground-truth signal plans and
estimation outputs, plus the text formats they travel in. All record types
are immutable values; file round-trips are bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional, Union

from .errors import CorruptDatasetError

APPROACHES = frozenset(
    "N NNE NE ENE E ESE SE SSE S SSW SW WSW W WNW NW NNW".split()
)
MOVEMENTS = frozenset({"left", "straight", "right", "u_turn"})

DAY_S = 86400

FCD_HEADER = (
    "city,road_level,intersection_id,approach,movement,"
    "entry_ts,exit_ts,travel_time,wait_s,dist_to_stopline_m,stop_ts"
)
CALIBRATION_HEADER = "city,road_level,hour,slope_s_per_m,intercept_s"
EVENTS_HEADER = (
    "intersection_id,approach,movement,raw_start_ts,calibrated_start_ts,"
    "day_index,day_class"
)


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def day_index_of(ts: int) -> int:
    return ts // DAY_S


def clock_of(ts: int) -> int:
    """Seconds since midnight of the timestamp's (UTC) day."""
    return ts % DAY_S


def day_class_of(ts: int) -> str:
    wd = datetime.fromtimestamp(ts, tz=timezone.utc).weekday()
    return "weekend" if wd >= 5 else "weekday"


@dataclass(frozen=True, slots=True)
class StopDetail:
    """Stopping behaviour of one trajectory: wait, queue distance, stop onset.

    wait_s keeps the sub-second resolution of interpolated detections;
    timestamps are whole unix seconds.
    """

    wait_s: float
    dist_to_stopline_m: float
    stop_ts: int

    def __post_init__(self) -> None:
        if self.wait_s < 0:
            raise ValueError("wait_s must be >= 0")
        if self.dist_to_stopline_m < 0:
            raise ValueError("dist_to_stopline_m must be >= 0")


@dataclass(frozen=True, slots=True)
class TrajectoryRecord:
    """One matched vehicle pass through an intersection approach."""

    city: str
    road_level: int
    intersection_id: str
    approach: str
    movement: str
    entry_ts: int
    exit_ts: int
    travel_time: int
    stop: Optional[StopDetail] = None

    def __post_init__(self) -> None:
        if self.approach not in APPROACHES:
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.movement not in MOVEMENTS:
            raise ValueError(f"unknown movement {self.movement!r}")
        if self.entry_ts > self.exit_ts:
            raise ValueError("entry_ts must be <= exit_ts")
        if self.travel_time != self.exit_ts - self.entry_ts:
            raise ValueError("travel_time must equal exit_ts - entry_ts")
        if self.stop is not None:
            if not (self.entry_ts <= self.stop.stop_ts <= self.exit_ts):
                raise ValueError("stop_ts must lie within [entry_ts, exit_ts]")


@dataclass(frozen=True, slots=True)
class StartEvent:
    """Calibrated stop-to-start transition, the pipeline's primary feature."""

    intersection_id: str
    approach: str
    movement: str
    raw_start_ts: int
    calibrated_start_ts: int
    day_index: int
    day_class: str

    def __post_init__(self) -> None:
        if self.calibrated_start_ts > self.raw_start_ts:
            raise ValueError("calibration may only move start times earlier")
        if self.day_class not in ("weekday", "weekend"):
            raise ValueError(f"bad day_class {self.day_class!r}")


class CalibrationTable:
    """Linear start-time corrections keyed by (city, road_level, hour).

    Lookups cascade from the exact key through wildcard levels down to the
    mandatory ('*', '*', '*') default row, so lookup is total.
    """

    def __init__(self, entries: dict[tuple[str, str, str], tuple[float, float]]):
        if ("*", "*", "*") not in entries:
            raise ValueError("calibration table requires a *,*,* default row")
        for key, (slope, _) in entries.items():
            if slope < 0:
                raise ValueError(f"negative slope for {key}")
        self._entries = dict(entries)

    @classmethod
    def neutral(cls) -> "CalibrationTable":
        return cls({("*", "*", "*"): (0.0, 0.0)})

    def lookup(self, city: str, road_level: int, hour: int) -> tuple[float, float]:
        lv, hr = str(road_level), str(hour)
        for key in ((city, lv, hr), (city, lv, "*"), (city, "*", "*"), ("*", "*", "*")):
            if key in self._entries:
                return self._entries[key]
        raise AssertionError("unreachable: default row guaranteed")

    def items(self):
        return sorted(self._entries.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CalibrationTable) and self._entries == other._entries


@dataclass(frozen=True, slots=True)
class PlanPeriod:
    """One time-of-day span of a ground-truth plan."""

    start_clock_s: int
    end_clock_s: int
    cycle_s: float
    red_s: dict[str, int] = field(hash=False)


@dataclass(frozen=True, slots=True)
class SignalPlanTruth:
    """Ground-truth SPaT plan used by the synthetic oracle and evaluation."""

    intersection_id: str
    periods: tuple[PlanPeriod, ...]
    offsets: dict[str, int] = field(hash=False)

    def __post_init__(self) -> None:
        if not self.periods:
            raise ValueError("plan needs at least one period")
        edge = 0
        for p in self.periods:
            if p.start_clock_s != edge:
                raise ValueError("periods must tile the day without overlap")
            if not p.start_clock_s < p.end_clock_s:
                raise ValueError("period must have positive span")
            if not 0 < p.cycle_s <= 600:
                raise ValueError("cycle_s must be in (0, 600]")
            for ap, red in p.red_s.items():
                if ap not in APPROACHES:
                    raise ValueError(f"unknown approach {ap!r}")
                if not 0 < red < p.cycle_s:
                    raise ValueError("red_s must satisfy 0 < red < cycle")
            edge = p.end_clock_s
        if edge != DAY_S:
            raise ValueError("periods must tile the full day")
        for ap in self.offsets:
            if ap not in APPROACHES:
                raise ValueError(f"unknown approach {ap!r}")

    def period_at(self, clock_s: int) -> PlanPeriod:
        for p in self.periods:
            if p.start_clock_s <= clock_s < p.end_clock_s:
                return p
        raise ValueError(f"clock {clock_s} outside day")

    def approaches(self) -> list[str]:
        return sorted(self.offsets)


@dataclass(frozen=True, slots=True)
class PhaseEstimate:
    """One estimated phase: cycle, red and green durations with confidence."""

    intersection_id: str
    approach: str
    movement: str
    period_start_s: int
    period_end_s: int
    cycle_s: float
    red_s: int
    green_s: float
    valid: bool
    confidence: float
    support_n: int

    def __post_init__(self) -> None:
        if not 0 < self.red_s < self.cycle_s:
            raise ValueError("red_s must satisfy 0 < red_s < cycle_s")
        if abs(self.green_s - (self.cycle_s - self.red_s)) > 1e-9:
            raise ValueError("green_s must equal cycle_s - red_s")


@dataclass(frozen=True, slots=True)
class RecalledCase:
    """An attempted estimation that was recalled before producing numbers."""

    intersection_id: str
    approach: str
    movement: str
    period_start_s: int
    period_end_s: int
    stage: str
    reason: str
    support_n: int


EstimateRow = Union[PhaseEstimate, RecalledCase]


@dataclass(frozen=True, slots=True)
class ReadReport:
    """Parsed records plus the malformed-line accounting."""

    records: list[TrajectoryRecord]
    rejected: int
    lines: int


def _parse_fcd_line(line: str) -> TrajectoryRecord:
    parts = line.split(",")
    if len(parts) != 11:
        raise ValueError(f"expected 11 fields, got {len(parts)}")
    (city, road_level, iid, approach, movement,
     entry, exit_, travel, wait, dist, stop_ts) = parts
    stop = None
    tail = (wait.strip(), dist.strip(), stop_ts.strip())
    if any(tail):
        if not all(tail):
            raise ValueError("stop fields must be all present or all empty")
        stop = StopDetail(float(tail[0]), float(tail[1]), int(tail[2]))
    return TrajectoryRecord(
        city=city,
        road_level=int(road_level),
        intersection_id=iid,
        approach=approach,
        movement=movement,
        entry_ts=int(entry),
        exit_ts=int(exit_),
        travel_time=int(travel),
        stop=stop,
    )


def read_fcd(path) -> ReadReport:
    """Read an FCD CSV file; malformed lines are counted, not silently dropped.

    Raises CorruptDatasetError when the header is wrong or more than half of
    the data lines are malformed.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        return ReadReport([], 0, 0)
    if lines[0] != FCD_HEADER:
        raise CorruptDatasetError(f"bad FCD header in {path}")
    records: list[TrajectoryRecord] = []
    rejected = 0
    for ln in lines[1:]:
        try:
            records.append(_parse_fcd_line(ln))
        except (ValueError, TypeError):
            rejected += 1
    n = len(lines) - 1
    if n and rejected > n / 2:
        raise CorruptDatasetError(f"{rejected}/{n} malformed lines in {path}")
    return ReadReport(records, rejected, n)


def _format_fcd_line(r: TrajectoryRecord) -> str:
    if r.stop is None:
        tail = ",,"
    else:
        tail = f"{r.stop.wait_s!r},{r.stop.dist_to_stopline_m!r},{r.stop.stop_ts}"
    return (
        f"{r.city},{r.road_level},{r.intersection_id},{r.approach},"
        f"{r.movement},{r.entry_ts},{r.exit_ts},{r.travel_time},{tail}"
    )


def write_fcd(records: Iterable[TrajectoryRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(FCD_HEADER + "\n")
        for r in records:
            fh.write(_format_fcd_line(r) + "\n")


def read_calibration(path) -> CalibrationTable:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CALIBRATION_HEADER:
        raise CorruptDatasetError(f"bad calibration header in {path}")
    entries: dict[tuple[str, str, str], tuple[float, float]] = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 5:
            raise CorruptDatasetError(f"bad calibration row: {ln!r}")
        city, level, hour, slope, icept = parts
        entries[(city, level, hour)] = (float(slope), float(icept))
    try:
        return CalibrationTable(entries)
    except ValueError as exc:
        raise CorruptDatasetError(str(exc)) from exc


def write_calibration(table: CalibrationTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CALIBRATION_HEADER + "\n")
        for (city, level, hour), (slope, icept) in table.items():
            fh.write(f"{city},{level},{hour},{slope!r},{icept!r}\n")


def read_events(path) -> list[StartEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        return []
    if lines[0] != EVENTS_HEADER:
        raise CorruptDatasetError(f"bad events header in {path}")
    out = []
    for ln in lines[1:]:
        iid, ap, mv, raw, cal, day, cls = ln.split(",")
        out.append(StartEvent(iid, ap, mv, int(raw), int(cal), int(day), cls))
    return out


def write_events(events: Iterable[StartEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(EVENTS_HEADER + "\n")
        for e in events:
            fh.write(
                f"{e.intersection_id},{e.approach},{e.movement},"
                f"{e.raw_start_ts},{e.calibrated_start_ts},"
                f"{e.day_index},{e.day_class}\n"
            )


def _estimate_to_obj(row: EstimateRow) -> dict:
    if isinstance(row, PhaseEstimate):
        return {
            "status": "ok",
            "intersection_id": row.intersection_id,
            "approach": row.approach,
            "movement": row.movement,
            "period_start_s": row.period_start_s,
            "period_end_s": row.period_end_s,
            "cycle_s": row.cycle_s,
            "red_s": row.red_s,
            "green_s": row.green_s,
            "valid": row.valid,
            "confidence": row.confidence,
            "support_n": row.support_n,
        }
    return {
        "status": "recalled",
        "intersection_id": row.intersection_id,
        "approach": row.approach,
        "movement": row.movement,
        "period_start_s": row.period_start_s,
        "period_end_s": row.period_end_s,
        "stage": row.stage,
        "reason": row.reason,
        "support_n": row.support_n,
    }


def write_estimates(estimates: Iterable[EstimateRow], path) -> None:
    """Write estimates as JSON lines; read_estimates reproduces them exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in estimates:
            fh.write(json.dumps(_estimate_to_obj(row)) + "\n")


def read_estimates(path) -> list[EstimateRow]:
    out: list[EstimateRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            if not ln.strip():
                continue
            obj = json.loads(ln)
            if obj["status"] == "ok":
                out.append(PhaseEstimate(
                    obj["intersection_id"], obj["approach"], obj["movement"],
                    obj["period_start_s"], obj["period_end_s"],
                    obj["cycle_s"], obj["red_s"], obj["green_s"],
                    obj["valid"], obj["confidence"], obj["support_n"],
                ))
            else:
                out.append(RecalledCase(
                    obj["intersection_id"], obj["approach"], obj["movement"],
                    obj["period_start_s"], obj["period_end_s"],
                    obj["stage"], obj["reason"], obj["support_n"],
                ))
    return out


def _plan_to_obj(plan: SignalPlanTruth) -> dict:
    return {
        "intersection_id": plan.intersection_id,
        "periods": [
            {
                "start_clock_s": p.start_clock_s,
                "end_clock_s": p.end_clock_s,
                "cycle_s": p.cycle_s,
                "red_s": dict(sorted(p.red_s.items())),
            }
            for p in plan.periods
        ],
        "offsets": dict(sorted(plan.offsets.items())),
    }


def write_truth(plans: Iterable[SignalPlanTruth], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for plan in plans:
            fh.write(json.dumps(_plan_to_obj(plan)) + "\n")


def read_truth(path) -> list[SignalPlanTruth]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            if not ln.strip():
                continue
            obj = json.loads(ln)
            periods = tuple(
                PlanPeriod(p["start_clock_s"], p["end_clock_s"],
                           p["cycle_s"], p["red_s"])
                for p in obj["periods"]
            )
            out.append(SignalPlanTruth(obj["intersection_id"], periods,
                                       obj["offsets"]))
    return out
