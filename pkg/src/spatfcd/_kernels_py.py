"""Numpy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable; the
semantics must match spatfcd._kernels exactly.
"""

from __future__ import annotations

import numpy as np


def _round_half_away(x: np.ndarray) -> np.ndarray:
    # np.round rounds halves to even; the contract is half-away-from-zero.
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def map_to_cycle(t: np.ndarray, cycle: float) -> np.ndarray:
    """Fold times onto [-cycle/2, cycle/2] around the nearest cycle multiple."""
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    ratio = t / cycle
    return t - _round_half_away(ratio) * cycle


def ks_uniform(sorted_mapped: np.ndarray, cycle: float) -> float:
    """Two-sided sup deviation of the empirical CDF from uniform on the cycle.

    Input must be sorted ascending.
    """
    n = sorted_mapped.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    g = np.clip((sorted_mapped + cycle / 2.0) / cycle, 0.0, 1.0)
    steps = np.arange(1, n + 1, dtype=np.float64) / n
    d_hi = np.abs(steps - g)
    d_lo = np.abs(steps - 1.0 / n - g)
    return float(max(d_hi.max(), d_lo.max()))


def modal_dispersion(mapped: np.ndarray, cycle: float) -> float:
    """RMS circular deviation from the modal 1 s bin, normalized by the cycle.

    The mode is the most populated 1 s bin (ties to the earliest bin),
    represented by the mean of its members; deviations wrap at cycle/2.
    """
    n = mapped.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    half = cycle / 2.0
    nbins = int(np.floor(cycle)) + 1
    bins = np.floor(mapped + half).astype(np.int64)
    np.clip(bins, 0, nbins - 1, out=bins)
    counts = np.bincount(bins, minlength=nbins)
    mode = int(np.argmax(counts))
    mode_time = float(mapped[bins == mode].mean())
    delta = mapped - mode_time
    delta = delta - _round_half_away(delta / cycle) * cycle
    return float(np.sqrt(np.mean(delta * delta)) / cycle)
