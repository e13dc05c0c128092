"""Scoring: ACC-k accuracy against truth plans plus the recall rate."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .fcd import EstimateRow, PhaseEstimate, SignalPlanTruth

SLICE_S = 1800
EVAL_START_S = 6 * 3600
EVAL_END_S = 21 * 3600


@dataclass(frozen=True, slots=True)
class ScoreReport:
    acc3: float
    acc5: float
    recall: float
    n_cases: int
    residuals: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.acc3 > self.acc5 + 1e-12:
            raise ValueError("acc3 cannot exceed acc5")


def acc_k(preds: Sequence[float], truths: Sequence[float], k: float) -> float:
    """Fraction of pairs within k seconds of each other."""
    if len(preds) != len(truths):
        raise ValueError("preds and truths must pair up")
    if not preds:
        raise ValueError("empty pair list")
    hits = sum(1 for p, t in zip(preds, truths) if abs(p - t) <= k)
    return hits / len(preds)


def recall(rows: Sequence[EstimateRow]) -> float:
    """Fraction of attempted estimations that produced a confirmed estimate."""
    if not rows:
        return 0.0
    ok = sum(1 for r in rows if isinstance(r, PhaseEstimate) and r.valid)
    return ok / len(rows)


def _slices() -> list[int]:
    return list(range(EVAL_START_S, EVAL_END_S, SLICE_S))


def score_run(rows: Sequence[EstimateRow],
              truths: Sequence[SignalPlanTruth]) -> dict[str, ScoreReport]:
    """Score a pipeline run in 30-minute slices between 06:00 and 21:00.

    Every (intersection, approach, slice) covered by an attempted estimate
    counts toward recall; confirmed estimates contribute cycle and red
    residuals against the truth period at the slice midpoint.
    """
    truth_by_id = {t.intersection_id: t for t in truths}
    cycle_pairs: list[tuple[float, float]] = []
    red_pairs: list[tuple[float, float]] = []
    attempted = 0
    confirmed = 0
    for row in rows:
        truth = truth_by_id.get(row.intersection_id)
        if truth is None or row.approach not in truth.offsets:
            continue
        for s in _slices():
            mid = s + SLICE_S // 2
            if not row.period_start_s <= mid < row.period_end_s:
                continue
            attempted += 1
            if not (isinstance(row, PhaseEstimate) and row.valid):
                continue
            confirmed += 1
            period = truth.period_at(mid)
            cycle_pairs.append((row.cycle_s, period.cycle_s))
            red_pairs.append((float(row.red_s), float(period.red_s[row.approach])))
    rec = confirmed / attempted if attempted else 0.0

    def report(pairs: list[tuple[float, float]]) -> ScoreReport:
        if not pairs:
            return ScoreReport(0.0, 0.0, rec, 0, ())
        preds = [p for p, _ in pairs]
        truths_ = [t for _, t in pairs]
        residuals = tuple(p - t for p, t in pairs)
        return ScoreReport(acc_k(preds, truths_, 3), acc_k(preds, truths_, 5),
                           rec, len(pairs), residuals)

    return {"cycle": report(cycle_pairs), "red": report(red_pairs)}


def report_to_json(reports: dict[str, ScoreReport]) -> str:
    obj = {
        name: {
            "acc3": r.acc3,
            "acc5": r.acc5,
            "recall": r.recall,
            "n_cases": r.n_cases,
            "residuals": list(r.residuals),
        }
        for name, r in reports.items()
    }
    return json.dumps(obj, indent=2, sort_keys=True)


def format_table(reports: dict[str, ScoreReport]) -> str:
    """Aligned text table, one row per estimated quantity."""
    lines = [f"{'estimate':<12}{'ACC-5':>8}{'ACC-3':>8}{'recall':>8}{'n':>6}"]
    for name in sorted(reports):
        r = reports[name]
        lines.append(f"{name:<12}{r.acc5:>8.3f}{r.acc3:>8.3f}{r.recall:>8.3f}{r.n_cases:>6d}")
    return "\n".join(lines)
