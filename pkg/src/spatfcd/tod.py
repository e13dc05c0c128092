"""Time-of-day schedule boundaries: coarse spectral scan, fine dispersion search.

A sliding one-hour window stepped by 15 minutes flags clock ranges where the
cycle estimate jumps or collapses; inside each range a pair of abutting
30-minute windows slides at 5-minute steps, and the split where the two
sides commit to different cycles with the lowest worst-side dispersion is
the schedule boundary. Late-night hours are assumed switch-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .config import Settings, TodSettings
from .errors import EstimationError, InsufficientDataError, NoSwitchFoundError
from .fcd import DAY_S, StartEvent
from .preprocess import superpose
from .cycle import select_cycle


@dataclass(frozen=True, slots=True)
class WindowEstimate:
    """One coarse-scan window: its clock start and cycle estimate, if reliable."""

    start_clock_s: int
    cycle_s: Optional[float]
    ks_d: Optional[float]
    support_n: int

    @property
    def reliable(self) -> bool:
        return self.cycle_s is not None


@dataclass(frozen=True, slots=True)
class CoarseScan:
    windows: tuple[WindowEstimate, ...]
    candidate_ranges: tuple[tuple[int, int], ...]


@dataclass(frozen=True, slots=True)
class DispersionScore:
    c: float
    psi: float
    penalty: float
    total: float


@dataclass(frozen=True, slots=True)
class TodPeriod:
    start_clock_s: int
    end_clock_s: int
    cycle_s: float
    max_dispersion_at_split: Optional[float]


@dataclass(frozen=True, slots=True)
class TodSchedule:
    """Schedule periods tiling [0, 86400); the day edge is representational."""

    periods: tuple[TodPeriod, ...]

    def period_at(self, clock_s: int) -> TodPeriod:
        for p in self.periods:
            if p.start_clock_s <= clock_s < p.end_clock_s:
                return p
        raise ValueError(f"clock {clock_s} outside schedule span")


def dispersion(times: Sequence[float], c: float) -> float:
    """RMS circular deviation of folded times from their modal second, over c."""
    arr = np.asarray(times, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sample")
    if c <= 0:
        raise ValueError("cycle must be positive")
    mapped = kernels.map_to_cycle(arr, c)
    return kernels.modal_dispersion(mapped, c)


def penalized_dispersion(times: Sequence[float], c: float, w: float = 0.1,
                         c_max: float = 600.0) -> DispersionScore:
    """Dispersion plus the short-cycle penalty w*(1 - c/c_max)^2."""
    if not 0 < c <= c_max:
        raise ValueError(f"cycle {c} outside (0, {c_max}]")
    psi = dispersion(times, c)
    penalty = w * (1.0 - c / c_max) ** 2
    return DispersionScore(c=c, psi=psi, penalty=penalty, total=psi + penalty)


def _in_night(clock_s: int, tod: TodSettings) -> bool:
    start, end = tod.night_start_s, tod.night_end_s
    if start <= end:
        return start <= clock_s < end
    return clock_s >= start or clock_s < end


def _range_touches_night(lo: int, hi: int, tod: TodSettings) -> bool:
    return _in_night(lo, tod) or _in_night(hi, tod) or (
        tod.night_start_s > tod.night_end_s and lo < tod.night_end_s and hi >= tod.night_start_s
    )


def _window_events(events: list[StartEvent], day_class: str,
                   clock_lo: int, clock_hi: int) -> list[StartEvent]:
    return [e for e in events if e.day_class == day_class
            and clock_lo <= e.calibrated_start_ts % DAY_S < clock_hi]


def _aligned(events: list[StartEvent], day_class: str, clock_lo: int,
             duration_s: int, min_events: int):
    ref_day = min((e.day_index for e in events), default=0)
    subset = _window_events(events, day_class, clock_lo, clock_lo + duration_s)
    return superpose(subset, day_class, ref_day * DAY_S + clock_lo,
                     duration_s=duration_s, min_events=min_events)


def coarse_scan(events: list[StartEvent], settings: Settings | None = None) -> CoarseScan:
    """Estimate the cycle in stepped windows and flag disagreement ranges.

    A candidate range spans the midpoints of two consecutive windows whose
    reliable estimates differ by more than the tolerance, or where exactly
    one of the two is reliable. Ranges touching the night block are dropped,
    overlapping ranges are merged.
    """
    settings = settings or Settings()
    tod = settings.tod
    if not events:
        raise InsufficientDataError("no start events")
    day_class = events[0].day_class
    clocks = sorted(e.calibrated_start_ts % DAY_S for e in events)
    if clocks[-1] - clocks[0] < 2 * 3600:
        raise InsufficientDataError("events span less than two hours of clock time")
    windows: list[WindowEstimate] = []
    for start in range(0, DAY_S - tod.coarse_window_s + 1, tod.coarse_step_s):
        aligned = _aligned(events, day_class, start, tod.coarse_window_s,
                           settings.superpose.min_events)
        try:
            est = select_cycle(aligned, settings.cycle)
            windows.append(WindowEstimate(start, est.best.c, est.best.ks_d,
                                          est.support_n))
        except EstimationError:
            windows.append(WindowEstimate(start, None, None, len(aligned.events)))
    if sum(1 for w in windows if w.reliable) < 2:
        raise InsufficientDataError("fewer than 2 reliable windows")
    half = tod.coarse_window_s // 2
    raw_ranges: list[tuple[int, int]] = []
    for a, b in zip(windows, windows[1:]):
        split_between = False
        if a.reliable and b.reliable:
            split_between = abs(a.cycle_s - b.cycle_s) > tod.cycle_diff_s
        elif a.reliable != b.reliable:
            split_between = True
        if split_between:
            raw_ranges.append((a.start_clock_s + half, b.start_clock_s + half))
    merged: list[tuple[int, int]] = []
    for lo, hi in raw_ranges:
        if _range_touches_night(lo, hi, tod):
            continue
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return CoarseScan(windows=tuple(windows), candidate_ranges=tuple(merged))


def fine_search(events: list[StartEvent], search_range: tuple[int, int],
                candidate_cycles: Sequence[float],
                settings: Settings | None = None) -> tuple[int, float]:
    """Locate the switch inside a candidate range with two abutting windows.

    Each trial split gets a left and right window; each window commits to the
    candidate cycle minimizing penalized dispersion. Among splits where the
    sides disagree, the one with the lowest maximum dispersion wins. Raises
    NoSwitchFoundError when no split produces differing cycles.
    """
    settings = settings or Settings()
    tod = settings.tod
    if not events:
        raise InsufficientDataError("no start events")
    day_class = events[0].day_class
    candidates = sorted(set(float(c) for c in candidate_cycles))
    min_fine = max(5, settings.superpose.min_events // 2)
    lo, hi = search_range
    results: list[tuple[float, int]] = []
    for split in range(lo, hi + 1, tod.fine_step_s):
        sides = []
        for w_lo in (split - tod.fine_window_s, split):
            if w_lo < 0 or w_lo + tod.fine_window_s > DAY_S:
                sides = []
                break
            aligned = _aligned(events, day_class, w_lo, tod.fine_window_s, min_fine)
            if aligned.low_support:
                sides = []
                break
            rel = np.asarray(aligned.rel_times(), dtype=np.float64)
            scores = [penalized_dispersion(rel, c, tod.penalty_w, tod.c_max_s)
                      for c in candidates]
            sides.append(min(scores, key=lambda s: s.total))
        if len(sides) != 2:
            continue
        left, right = sides
        if abs(left.c - right.c) > tod.cycle_diff_s:
            results.append((max(left.psi, right.psi), split))
    if not results:
        raise NoSwitchFoundError(f"no split in {search_range} separates two cycles")
    best_disp, best_split = min(results, key=lambda r: (r[0], r[1]))
    return best_split, best_disp


def build_schedule(events: list[StartEvent], settings: Settings | None = None) -> TodSchedule:
    """Assemble the day's schedule from the coarse scan and fine searches.

    Segments between confirmed splits take the median cycle of the reliable
    windows they fully contain; segments with the same cycle merge, so a
    dissolved or spurious split never survives into the schedule.
    """
    settings = settings or Settings()
    tod = settings.tod
    scan = coarse_scan(events, settings)
    splits: list[tuple[int, float]] = []
    for lo, hi in scan.candidate_ranges:
        left_c = next((w.cycle_s for w in reversed(scan.windows)
                       if w.reliable and w.start_clock_s + tod.coarse_window_s // 2 <= lo), None)
        right_c = next((w.cycle_s for w in scan.windows
                        if w.reliable and w.start_clock_s + tod.coarse_window_s // 2 >= hi), None)
        if left_c is None or right_c is None:
            continue
        if abs(left_c - right_c) <= tod.cycle_diff_s:
            continue
        # widen toward the early side: per-day first-event alignment keeps a
        # mixed window loyal to the plan owning its first events, so the
        # estimate flip brackets the switch between window starts, half a
        # window before the midpoints
        search = (max(tod.fine_window_s, lo - tod.coarse_window_s // 2), hi)
        try:
            split, disp = fine_search(events, search, (left_c, right_c), settings)
        except (NoSwitchFoundError, InsufficientDataError):
            continue
        splits.append((split, disp))
    splits.sort()
    boundaries = [0] + [s for s, _ in splits] + [DAY_S]
    disp_by_split = dict(splits)
    reliable = [w for w in scan.windows if w.reliable]
    segment_cycles: list[Optional[float]] = []
    for seg_lo, seg_hi in zip(boundaries, boundaries[1:]):
        inside = [w.cycle_s for w in reliable
                  if w.start_clock_s >= seg_lo
                  and w.start_clock_s + tod.coarse_window_s <= seg_hi]
        segment_cycles.append(float(np.median(inside)) if inside else None)
    overall = float(np.median([w.cycle_s for w in reliable]))
    for i, c in enumerate(segment_cycles):
        if c is None:
            prev = next((segment_cycles[j] for j in range(i - 1, -1, -1)
                         if segment_cycles[j] is not None), None)
            nxt = next((segment_cycles[j] for j in range(i + 1, len(segment_cycles))
                        if segment_cycles[j] is not None), None)
            segment_cycles[i] = prev if prev is not None else (nxt if nxt is not None else overall)
    periods: list[TodPeriod] = []
    for (seg_lo, seg_hi), c in zip(zip(boundaries, boundaries[1:]), segment_cycles):
        disp = disp_by_split.get(seg_lo)
        if periods and abs(periods[-1].cycle_s - c) <= tod.cycle_diff_s:
            periods[-1] = TodPeriod(periods[-1].start_clock_s, seg_hi,
                                    periods[-1].cycle_s,
                                    periods[-1].max_dispersion_at_split)
        else:
            periods.append(TodPeriod(seg_lo, seg_hi, c, disp))
    return TodSchedule(periods=tuple(periods))
