"""Synthetic intersection oracle: known signal plans, Poisson traffic.

Vehicles arrive as a Poisson stream, queue during red in arrival order, and
discharge linearly from the green onset; a sampled subset is observed on a
3-second grid with interpolation-grade noise. The generator is a pure
function of its config, so runs are byte-reproducible and every estimator
can be scored against the exact plan that produced its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fcd import (
    DAY_S,
    CalibrationTable,
    PlanPeriod,
    SignalPlanTruth,
    StopDetail,
    TrajectoryRecord,
    day_class_of,
)

# 2024-01-01, a Monday, so weekday runs start cleanly.
DEFAULT_START_DAY = 19723

_MAX_QUEUE_DIST_M = 195.0  # keeps every record inside the cleaning gate
_MIN_DETECTED_WAIT_S = 2.0  # stops shorter than the sampling interval are invisible


@dataclass(frozen=True, slots=True)
class SimConfig:
    plan: SignalPlanTruth
    arrival_rate_vph: float = 600.0
    penetration: float = 0.1
    start_jitter_sd_s: float = 5.0
    queue_discharge_s_per_veh: float = 2.0
    days: int = 20
    seed: int = 0
    headway_m: float = 7.0
    reaction_delay_s: float = 0.0
    hours: Optional[tuple[int, int]] = None
    start_day_index: int = DEFAULT_START_DAY
    stop_obs_noise_sd_s: float = 0.8
    # waiting-behaviour mix: a small share of drivers starts late, producing
    # the long-wait tail the duration analysis keys on
    delayed_start_rate: float = 0.04
    delayed_start_range_s: tuple[float, float] = (15.0, 120.0)
    # fault injection, all off by default
    long_parker_rate: float = 0.0
    dropped_stop_rate: float = 0.0
    day_class: str = "weekday"

    def __post_init__(self) -> None:
        if self.day_class not in ("weekday", "weekend"):
            raise ValueError(f"bad day_class {self.day_class!r}")
        if not 0.0 <= self.penetration <= 1.0:
            raise ValueError("penetration must be in [0, 1]")
        for name in ("arrival_rate_vph", "queue_discharge_s_per_veh", "headway_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.start_jitter_sd_s < 0 or self.stop_obs_noise_sd_s < 0:
            raise ValueError("noise levels must be >= 0")
        for rate in (self.delayed_start_rate, self.long_parker_rate, self.dropped_stop_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must be fractions in [0, 1]")


def constant_plan(intersection_id: str, cycle_s: float, red_s: int,
                  approaches: tuple[str, ...] = ("N",),
                  offsets: Optional[dict[str, int]] = None) -> SignalPlanTruth:
    """A plan running one cycle all day."""
    reds = {ap: red_s for ap in approaches}
    offs = offsets or {ap: 0 for ap in approaches}
    return SignalPlanTruth(
        intersection_id=intersection_id,
        periods=(PlanPeriod(0, DAY_S, cycle_s, reds),),
        offsets=offs,
    )


def switch_plan(intersection_id: str, cycle1_s: float, red1_s: int,
                cycle2_s: float, red2_s: int, switch_clock_s: int,
                approaches: tuple[str, ...] = ("N",)) -> SignalPlanTruth:
    """A plan with one schedule change at the given clock second."""
    return SignalPlanTruth(
        intersection_id=intersection_id,
        periods=(
            PlanPeriod(0, switch_clock_s, cycle1_s, {ap: red1_s for ap in approaches}),
            PlanPeriod(switch_clock_s, DAY_S, cycle2_s, {ap: red2_s for ap in approaches}),
        ),
        offsets={ap: 0 for ap in approaches},
    )


def fitted_calibration(cfg: SimConfig) -> CalibrationTable:
    """The calibration table matching the oracle's own queue-discharge model."""
    slope = cfg.queue_discharge_s_per_veh / cfg.headway_m
    return CalibrationTable({("*", "*", "*"): (slope, cfg.reaction_delay_s)})


def weekday_indices(start_day_index: int, days: int,
                    day_class: str = "weekday") -> list[int]:
    out = []
    d = start_day_index
    while len(out) < days:
        if day_class_of(d * DAY_S) == day_class:
            out.append(d)
        d += 1
    return out


def _queue_positions(group_ids: np.ndarray) -> np.ndarray:
    """Arrival rank within each group; input is in arrival order."""
    if group_ids.size == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(group_ids, kind="stable")
    sorted_ids = group_ids[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_ids)) + 1]
    counts = np.diff(np.r_[starts, sorted_ids.size])
    pos_sorted = np.arange(sorted_ids.size) - np.repeat(starts, counts)
    pos = np.empty_like(pos_sorted)
    pos[order] = pos_sorted
    return pos


def _grid_ceil(values: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """Snap up to each vehicle's own 3 s sampling grid (detection is late)."""
    return phases + 3 * np.ceil((values - phases) / 3.0)


def simulate(cfg: SimConfig) -> tuple[list[TrajectoryRecord], SignalPlanTruth]:
    """Generate observed trajectory records and return them with the truth plan."""
    rng = np.random.default_rng(cfg.seed)
    plan = cfg.plan
    rate_vps = cfg.arrival_rate_vph / 3600.0
    h0, h1 = cfg.hours if cfg.hours is not None else (0, 24)
    period_starts = np.asarray([p.start_clock_s for p in plan.periods], dtype=np.float64)

    rows = []
    for day in weekday_indices(cfg.start_day_index, cfg.days, cfg.day_class):
        epoch = day * DAY_S
        for approach in plan.approaches():
            off = plan.offsets[approach]
            lo = max(0.0, h0 * 3600.0 - 1500.0)
            hi = min(float(DAY_S), h1 * 3600.0)
            n = rng.poisson(rate_vps * (hi - lo))
            clock = np.sort(rng.uniform(lo, hi, n))
            if n == 0:
                continue
            p_idx = np.clip(np.searchsorted(period_starts, clock, side="right") - 1,
                            0, len(plan.periods) - 1)
            cyc = np.asarray([plan.periods[i].cycle_s for i in p_idx])
            red = np.asarray([plan.periods[i].red_s[approach] for i in p_idx], dtype=np.float64)
            p_start = period_starts[p_idx]
            rel = clock - p_start - off
            cyc_idx = np.floor(rel / cyc)
            phase = rel - cyc_idx * cyc
            gid = (p_idx.astype(np.int64) * 2_000_000
                   + cyc_idx.astype(np.int64) + 1_000_000)
            red_arrival = phase < red
            # residual queue: early-green arrivals join while the red queue is
            # still discharging, which is what populates the short-wait range
            red_gids, red_counts = np.unique(gid[red_arrival], return_counts=True)
            lookup = np.searchsorted(red_gids, gid)
            lookup_ok = (lookup < red_gids.size) & (red_gids[np.minimum(lookup, red_gids.size - 1)] == gid)
            queue_at_green = np.where(lookup_ok, red_counts[np.minimum(lookup, red_gids.size - 1)], 0)
            clear_s = red + queue_at_green * cfg.queue_discharge_s_per_veh
            joins = ~red_arrival & (phase < clear_s)
            stopped = red_arrival | joins

            # --- stopped vehicles: queue, discharge, observed stop/start ---
            s_clock = clock[stopped]
            s_cyc = cyc[stopped]
            s_red = red[stopped]
            pos = _queue_positions(gid[stopped])
            green = epoch + p_start[stopped] + off + cyc_idx[stopped] * s_cyc + s_red
            jitter = rng.normal(0.0, cfg.start_jitter_sd_s, s_clock.size)
            start_true = (green + cfg.reaction_delay_s
                          + pos * cfg.queue_discharge_s_per_veh + jitter)
            np.maximum(start_true, green, out=start_true)
            delayed = rng.random(s_clock.size) < cfg.delayed_start_rate
            start_true[delayed] += rng.uniform(*cfg.delayed_start_range_s,
                                               int(delayed.sum()))
            parked = rng.random(s_clock.size) < cfg.long_parker_rate
            if parked.any():
                park_c = s_cyc[parked]
                start_true[parked] = (epoch + s_clock[parked]
                                      + rng.uniform(1.2 * park_c,
                                                    np.minimum(1500.0, 1.2 * park_c + 900.0)))
            grid_phase = rng.integers(0, 3, s_clock.size).astype(np.float64)
            start_obs = _grid_ceil(start_true, grid_phase)
            # stop and start onsets are interpolated between samples, so the
            # wait field has sub-second resolution and symmetric noise
            # (mirrors the released data's ms waits); timestamps stay integer
            stop_f = (epoch + s_clock
                      + rng.normal(0.0, cfg.stop_obs_noise_sd_s, s_clock.size))
            stop_obs = np.rint(stop_f)
            np.maximum(start_obs, stop_obs, out=start_obs)
            true_wait = start_true - (epoch + s_clock)
            wait = np.round(true_wait + rng.normal(0.0, cfg.stop_obs_noise_sd_s,
                                                   s_clock.size), 2)
            np.maximum(wait, 0.0, out=wait)
            s_entry = stop_obs - rng.integers(15, 40, s_clock.size)
            s_exit = start_obs + rng.integers(4, 10, s_clock.size)
            dist = np.minimum(pos * cfg.headway_m, _MAX_QUEUE_DIST_M)

            # --- unstopped vehicles pass straight through ---
            u_clock = clock[~stopped]
            u_obs = np.rint(epoch + u_clock)
            u_entry = u_obs - rng.integers(15, 40, u_clock.size)
            u_exit = u_obs + rng.integers(4, 10, u_clock.size)

            sampled = rng.random(n) < cfg.penetration
            drop_stop = rng.random(s_clock.size) < cfg.dropped_stop_rate
            # the detector thresholds on its own measurement, so the observed
            # wait distribution has a sharp edge at the detection floor
            drop_stop |= wait < _MIN_DETECTED_WAIT_S

            s_sampled = sampled[stopped]
            for i in np.flatnonzero(s_sampled):
                entry, exit_ = int(s_entry[i]), int(s_exit[i])
                if drop_stop[i]:
                    stop = None
                else:
                    stop = StopDetail(
                        wait_s=float(wait[i]),
                        dist_to_stopline_m=float(dist[i]),
                        stop_ts=int(stop_obs[i]),
                    )
                rows.append(TrajectoryRecord(
                    city="SYN", road_level=1,
                    intersection_id=plan.intersection_id,
                    approach=approach, movement="straight",
                    entry_ts=entry, exit_ts=exit_,
                    travel_time=exit_ - entry, stop=stop,
                ))
            u_sampled = sampled[~stopped]
            for i in np.flatnonzero(u_sampled):
                entry, exit_ = int(u_entry[i]), int(u_exit[i])
                rows.append(TrajectoryRecord(
                    city="SYN", road_level=1,
                    intersection_id=plan.intersection_id,
                    approach=approach, movement="straight",
                    entry_ts=entry, exit_ts=exit_,
                    travel_time=exit_ - entry, stop=None,
                ))
    rows.sort(key=lambda r: (r.entry_ts, r.approach, r.exit_ts,
                             r.stop.stop_ts if r.stop else -1))
    return rows, plan
