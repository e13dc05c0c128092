"""Cycle-length estimation: FFT candidates verified by the KS statistic.

The spectrum of the binned start events proposes candidate periods; each
candidate is checked by folding all events onto it and measuring how far the
folded distribution departs from uniform. The true cycle concentrates the
events and wins the comparison, which is what separates it from its
half- and double-wavelength aliases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import CycleSettings
from .errors import EmptyWindowError, NoPeriodicityError, UnreliableEstimateError, InsufficientDataError
from .fcd import round_half_away
from .preprocess import AlignedWindow


@dataclass(frozen=True, slots=True)
class EventSeries:
    """Per-second start counts over one window (bin width 1 s)."""

    bin_s: int
    counts: np.ndarray


@dataclass(frozen=True, slots=True)
class CycleCandidate:
    c: float
    fft_magnitude: float
    ks_d: float


@dataclass(frozen=True, slots=True)
class CycleEstimate:
    best: CycleCandidate
    candidates: tuple[CycleCandidate, ...]
    support_n: int


def build_series(window: AlignedWindow) -> EventSeries:
    """Bin the window's relative event times at 1 s resolution."""
    if not window.events:
        raise EmptyWindowError("cannot build a series from an empty window")
    idx = np.floor(np.asarray(window.rel_times(), dtype=np.float64)).astype(np.int64)
    counts = np.bincount(idx, minlength=window.duration_s)
    return EventSeries(bin_s=1, counts=counts)


def fft_candidates(series: EventSeries, k: int = 5, min_cycle_s: float = 30.0,
                   c_max_s: float = 600.0) -> list[tuple[float, float]]:
    """Top-k spectral periods within [min_cycle_s, c_max_s].

    Mean is removed first (the DC bin carries no period information) and
    near-duplicate periods within 1 s are deduplicated. Returns
    (period_s, magnitude) pairs in decreasing magnitude order.
    """
    counts = series.counts.astype(np.float64)
    n = counts.shape[0]
    if n < 2 * c_max_s:
        raise ValueError(f"series length {n} < 2 * c_max {c_max_s}")
    x = counts - counts.mean()
    mag = np.abs(np.fft.rfft(x))
    periods = np.empty_like(mag)
    periods[0] = np.inf
    periods[1:] = n / np.arange(1, mag.shape[0], dtype=np.float64)
    usable = (periods >= min_cycle_s) & (periods <= c_max_s)
    if not usable.any() or not (mag[usable] > 0).any():
        raise NoPeriodicityError("flat series: no spectral peak in range")
    order = np.argsort(mag[usable])[::-1]
    cand_periods = periods[usable][order]
    cand_mags = mag[usable][order]
    selected: list[tuple[float, float]] = []
    for p, m in zip(cand_periods, cand_mags):
        if m <= 0:
            break
        if any(abs(p - q) <= 1.0 for q, _ in selected):
            continue
        selected.append((float(p), float(m)))
        if len(selected) == k:
            break
    return selected


def map_to_cycle(t: float, c: float) -> float:
    """Fold one timestamp onto [-c/2, c/2] (rounding halves away from zero)."""
    if c <= 0:
        raise ValueError("cycle must be positive")
    return t - round_half_away(t / c) * c


def ks_statistic(mapped, c: float) -> float:
    """Sup deviation between the folded sample's CDF and uniform on [-c/2, c/2]."""
    arr = np.asarray(mapped, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sample")
    if c <= 0:
        raise ValueError("cycle must be positive")
    return kernels.ks_uniform(arr, c)


def score_candidates(rel_times: np.ndarray,
                     candidates: list[tuple[float, float]]) -> list[CycleCandidate]:
    scored = []
    for c, m in candidates:
        mapped = kernels.map_to_cycle(rel_times, c)
        scored.append(CycleCandidate(c=c, fft_magnitude=m, ks_d=kernels.ks_uniform(mapped, c)))
    return scored


def select_cycle(window: AlignedWindow, cfg: CycleSettings | None = None) -> CycleEstimate:
    """Pick the FFT candidate whose folded distribution looks least uniform.

    Ties break toward the larger cycle (half-wavelength aliases are the
    documented failure mode). Raises UnreliableEstimateError when no
    candidate clears the KS floor; such cases count against recall.
    """
    cfg = cfg or CycleSettings()
    if window.low_support:
        raise InsufficientDataError(
            f"window at {window.window_start_ts} is low-support ({len(window.events)} events)")
    series = build_series(window)
    candidates = fft_candidates(series, cfg.k_candidates, cfg.min_cycle_s, cfg.c_max_s)
    rel = np.asarray(window.rel_times(), dtype=np.float64)
    scored = score_candidates(rel, candidates)
    ranked = sorted(scored, key=lambda cc: (-cc.ks_d, -cc.c))
    best = ranked[0]
    if best.ks_d < cfg.min_ks:
        raise UnreliableEstimateError(
            f"best KS {best.ks_d:.4f} below floor {cfg.min_ks}")
    return CycleEstimate(best=best, candidates=tuple(ranked), support_n=rel.size)


def fft_only_cycle(window: AlignedWindow, cfg: CycleSettings | None = None) -> float:
    """Baseline selector: the largest-magnitude spectral period, no KS step."""
    cfg = cfg or CycleSettings()
    series = build_series(window)
    candidates = fft_candidates(series, cfg.k_candidates, cfg.min_cycle_s, cfg.c_max_s)
    return candidates[0][0]
