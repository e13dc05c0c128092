"""CSV series behind the pipeline's diagnostic figures.

Each emitter returns header + rows for external rendering: the multi-day
superposition scatter, the candidate spectrum with KS scores, the sorted
waiting-time curve, and the cycle overlay with its confirmation band.
"""

from __future__ import annotations

import numpy as np

from .config import CycleSettings
from .cycle import build_series, fft_candidates, score_candidates
from .duration import CycleOverlay, InflectionAnalysis
from .preprocess import AlignedWindow


def superposition_csv(window: AlignedWindow) -> str:
    lines = ["rel_time_s,day_index"]
    for rel, day in window.events:
        lines.append(f"{rel},{day}")
    return "\n".join(lines) + "\n"


def spectrum_csv(window: AlignedWindow, cfg: CycleSettings | None = None) -> str:
    """Full in-range spectrum plus the scored candidate rows."""
    cfg = cfg or CycleSettings()
    series = build_series(window)
    x = series.counts.astype(np.float64)
    mag = np.abs(np.fft.rfft(x - x.mean()))
    n = x.shape[0]
    candidates = fft_candidates(series, cfg.k_candidates, cfg.min_cycle_s, cfg.c_max_s)
    rel = np.asarray(window.rel_times(), dtype=np.float64)
    scored = {round(c.c, 6): c.ks_d for c in score_candidates(rel, candidates)}
    lines = ["period_s,magnitude,ks_d"]
    for j in range(1, mag.shape[0]):
        period = n / j
        if not cfg.min_cycle_s <= period <= cfg.c_max_s:
            continue
        ks = scored.get(round(period, 6))
        lines.append(f"{period!r},{float(mag[j])!r},{'' if ks is None else repr(ks)}")
    return "\n".join(lines) + "\n"


def waits_csv(analysis: InflectionAnalysis) -> str:
    """Sorted waits with gradients and local stds (1-based index column)."""
    lines = ["index,sorted_wait_s,gradient_s,local_std_s"]
    n = analysis.sorted_waits.shape[0]
    for i in range(n):
        g = repr(float(analysis.gradients[i])) if i < n - 1 else ""
        s = repr(float(analysis.local_stds[i])) if i < n - 1 else ""
        lines.append(f"{i + 1},{float(analysis.sorted_waits[i])!r},{g},{s}")
    return "\n".join(lines) + "\n"


def overlay_csv(overlay: CycleOverlay) -> str:
    lines = ["second,cross_freq,wait_count"]
    for s in range(overlay.cross_freq.shape[0]):
        lines.append(f"{s},{float(overlay.cross_freq[s])!r},{float(overlay.wait_count[s])!r}")
    return "\n".join(lines) + "\n"
