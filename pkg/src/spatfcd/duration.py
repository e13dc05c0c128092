"""Red-duration estimation from the sorted waiting-time curve.

Sorted single-round waits rise gently up to the red time and then jump into
a sparse long-wait tail; the first gradient jump past a dynamic threshold
marks the transition, and the analytical intersection of regressions fitted
to each side refines it. A cycle overlay of crossing and waiting frequencies
confirms or recalls the result. Indices follow the 1-based convention of the
regression formulas throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .config import DurationSettings
from .errors import (
    DegenerateRegressionError,
    EstimationError,
    InsufficientDataError,
    NoInflectionError,
)
from .fcd import TrajectoryRecord, round_half_away


@dataclass(frozen=True, slots=True)
class InflectionAnalysis:
    """Every intermediate of the sorted-wait analysis, for plots and tests."""

    sorted_waits: np.ndarray
    gradients: np.ndarray
    local_stds: np.ndarray
    theta: float
    alpha: float
    window: int
    exclusion: int
    i_star: int
    a_low: float
    b_low: float
    a_high: float
    b_high: float
    i_pred: float
    t_pred: float

    @property
    def red_s(self) -> int:
        return round_half_away(self.t_pred)


@dataclass(frozen=True, slots=True)
class CycleOverlay:
    """Normalized per-second crossing counts and waiting-vehicle counts over one cycle."""

    cross_freq: np.ndarray
    wait_count: np.ndarray


@dataclass(frozen=True, slots=True)
class VoteResult:
    outcome: str  # confirmed | rejected | unconfirmable
    interval: Optional[tuple[int, int]]
    switch_s: Optional[int]
    overlay: Optional[CycleOverlay]

    @property
    def valid(self) -> bool:
        return self.outcome == "confirmed"


def gradient_series(sorted_waits: Sequence[float]) -> np.ndarray:
    """Forward differences of the ascending waits (one-sided at the boundary)."""
    waits = np.asarray(sorted_waits, dtype=np.float64)
    if waits.size < 2:
        raise InsufficientDataError("need at least 2 waits for a gradient")
    return np.diff(waits)


def local_std(g: Sequence[float], w: int = 3) -> np.ndarray:
    """Sliding-window sample standard deviation of the gradient series.

    Window i covers gradient indices [max(1, i-w), i+w] (1-based, clipped to
    the series).
    """
    arr = np.asarray(g, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty gradient series")
    n = arr.size
    out = np.zeros(n)
    for i in range(n):
        lo = max(0, i - w)
        hi = min(n, i + w + 1)
        seg = arr[lo:hi]
        out[i] = seg.std(ddof=1) if seg.size > 1 else 0.0
    return out


def turning_points(g: Sequence[float], sigma: Sequence[float],
                   alpha: float = 10.0) -> list[int]:
    """All 1-based wait indices whose gradient jump exceeds the threshold.

    A zero mean std (all gradients equal) is declared no-inflection rather
    than an always-true comparison.
    """
    g = np.asarray(g, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    theta = alpha * float(sigma.mean())
    if theta <= 0:
        raise NoInflectionError("degenerate threshold: all gradients equal")
    jumps = np.abs(np.diff(g))
    hits = np.flatnonzero(jumps > theta)
    if hits.size == 0:
        raise NoInflectionError(f"no gradient jump exceeds theta={theta:.3f}")
    # jumps[j] compares g_{j+2} and g_{j+1} in 1-based terms; the turning
    # point is the wait index where the second gradient starts.
    return [int(j) + 2 for j in hits]


def find_inflection(g: Sequence[float], sigma: Sequence[float],
                    alpha: float = 10.0) -> int:
    """First index where the gradient jump exceeds alpha times the mean local std."""
    return turning_points(g, sigma, alpha)[0]


def _fit_line(idx: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    a, b = np.polyfit(idx, values, 1)
    return float(a), float(b)


def red_duration(sorted_waits: Sequence[float], i_star: int, exclusion: int = 20,
                 min_segment: int = 5) -> tuple[float, float, tuple[float, float, float, float]]:
    """Intersect regressions fitted below and above the excluded inflection zone.

    Returns (i_pred, t_pred, (a_low, b_low, a_high, b_high)); the red duration
    is t_pred rounded to whole seconds.
    """
    waits = np.asarray(sorted_waits, dtype=np.float64)
    n = waits.size
    idx = np.arange(1, n + 1, dtype=np.float64)
    low_mask = idx < i_star - exclusion
    high_mask = idx > i_star + exclusion
    if low_mask.sum() < min_segment or high_mask.sum() < min_segment:
        raise InsufficientDataError(
            f"segments too small around i*={i_star} (low {int(low_mask.sum())}, "
            f"high {int(high_mask.sum())})")
    a_low, b_low = _fit_line(idx[low_mask], waits[low_mask])
    a_high, b_high = _fit_line(idx[high_mask], waits[high_mask])
    if abs(a_low - a_high) < 1e-12:
        raise DegenerateRegressionError("segment regressions are parallel")
    i_pred = (b_high - b_low) / (a_low - a_high)
    t_pred = a_low * i_pred + b_low
    return float(i_pred), float(t_pred), (a_low, b_low, a_high, b_high)


# single-round waits are the majority population; a turning point in the
# lower half of the curve cannot be the low/high transition
_MAJORITY_FLOOR = 0.5


def analyze_waits(waits: Sequence[float],
                  cfg: DurationSettings | None = None) -> InflectionAnalysis:
    """Run the full sorted-wait analysis on raw (unsorted) waits.

    The first threshold-exceeding jump that sits in the majority-covered
    upper half and leaves regression-worthy segments on both sides is the
    transition; density-dip jumps at the curve head are not candidates.
    """
    cfg = cfg or DurationSettings()
    sorted_waits = np.sort(np.asarray(waits, dtype=np.float64))
    g = gradient_series(sorted_waits)
    sigma = local_std(g, cfg.grad_window)
    theta = cfg.alpha * float(sigma.mean())
    candidates = turning_points(g, sigma, cfg.alpha)
    floor = _MAJORITY_FLOOR * sorted_waits.size
    last_error: EstimationError = NoInflectionError(
        "no turning point in the majority-covered range")
    for i_star in candidates:
        if i_star < floor:
            continue
        try:
            i_pred, t_pred, (a_l, b_l, a_h, b_h) = red_duration(
                sorted_waits, i_star, cfg.exclusion_w, cfg.min_segment)
        except EstimationError as exc:
            last_error = exc
            continue
        return InflectionAnalysis(
            sorted_waits=sorted_waits, gradients=g, local_stds=sigma,
            theta=theta, alpha=cfg.alpha, window=cfg.grad_window,
            exclusion=cfg.exclusion_w, i_star=i_star, a_low=a_l, b_low=b_l,
            a_high=a_h, b_high=b_h, i_pred=i_pred, t_pred=t_pred)
    raise last_error


def _cycle_positions(times: np.ndarray, c: float, zero_bin: int, c_int: int) -> np.ndarray:
    mapped = kernels.map_to_cycle(times, c)
    bins = np.floor(mapped + c / 2.0).astype(np.int64)
    np.clip(bins, 0, c_int - 1, out=bins)
    return (bins - zero_bin) % c_int


def _anchor_bin(anchors: np.ndarray, c: float, c_int: int) -> int:
    mapped = kernels.map_to_cycle(anchors, c)
    bins = np.floor(mapped + c / 2.0).astype(np.int64)
    np.clip(bins, 0, c_int - 1, out=bins)
    return int(np.argmax(np.bincount(bins, minlength=c_int)))


def build_overlay(stopped: list[TrajectoryRecord], crossings: Sequence[int],
                  anchors: Sequence[int], c: float) -> Optional[CycleOverlay]:
    """Per-second crossing and waiting counts over the cycle, red->green at 0.

    The zero point is the modal folded second of the calibrated starts (the
    green onset cluster). Returns None when either curve is identically zero.
    """
    c_int = int(round(c))
    anchors = np.asarray(anchors, dtype=np.float64)
    if anchors.size == 0 or not crossings or not stopped:
        return None
    zero_bin = _anchor_bin(anchors, c, c_int)
    cross_pos = _cycle_positions(np.asarray(crossings, dtype=np.float64), c,
                                 zero_bin, c_int)
    cross = np.bincount(cross_pos, minlength=c_int).astype(np.float64)
    # waiting occupancy: each stopped vehicle marks its stop..start span,
    # accumulated on the cycle circle with a wrap-aware difference array
    diff = np.zeros(c_int + 1)
    stops = np.asarray([r.stop.stop_ts for r in stopped], dtype=np.float64)
    lengths = np.asarray([min(r.stop.wait_s, c_int) for r in stopped], dtype=np.int64)
    stop_pos = _cycle_positions(stops, c, zero_bin, c_int)
    for pos, length in zip(stop_pos, lengths):
        if length <= 0:
            continue
        end = pos + length
        if end <= c_int:
            diff[pos] += 1
            diff[end] -= 1
        else:
            diff[pos] += 1
            diff[c_int] -= 1
            diff[0] += 1
            diff[end - c_int] -= 1
    wait = np.cumsum(diff[:c_int])
    if cross.max() <= 0 or wait.max() <= 0:
        return None
    return CycleOverlay(cross_freq=cross / cross.max(), wait_count=wait / wait.max())


def vote_confirm(stopped: list[TrajectoryRecord], crossings: Sequence[int],
                 c: float, red_s: int, anchors: Sequence[int]) -> VoteResult:
    """Check that the implied green->red switch falls in its plausible interval.

    The interval runs from the waiting-count minimum to the first second at
    which the normalized crossing curve drops below the normalized waiting
    curve. Estimates outside it are rejected; an empty or undefined interval
    is unconfirmable. Both outcomes are recalls.
    """
    overlay = build_overlay(stopped, crossings, anchors, c)
    if overlay is None:
        return VoteResult("unconfirmable", None, None, None)
    c_int = overlay.cross_freq.shape[0]
    # first second reaching the minimum plateau (2% band absorbs the shot
    # noise of a flat valley; exact argmin would pick a random plateau point)
    low = overlay.wait_count.min() + 0.02
    i_min = int(np.argmax(overlay.wait_count <= low))
    crossover = None
    for step in range(c_int):
        s = (i_min + step) % c_int
        if overlay.cross_freq[s] < overlay.wait_count[s]:
            crossover = s
            break
    if crossover is None:
        return VoteResult("unconfirmable", None, None, overlay)
    switch_s = (c_int - int(red_s)) % c_int
    span = (crossover - i_min) % c_int
    inside = (switch_s - i_min) % c_int <= span
    outcome = "confirmed" if inside else "rejected"
    return VoteResult(outcome, (i_min, crossover), switch_s, overlay)
