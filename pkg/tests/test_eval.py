"""ACC-k arithmetic, recall accounting, slice-based scoring."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatfcd.evaluate import ScoreReport, acc_k, format_table, recall, report_to_json, score_run
from spatfcd.fcd import PhaseEstimate, PlanPeriod, RecalledCase, SignalPlanTruth


def test_acc_k_identity():
    assert acc_k([90, 120], [90, 120], 3) == 1.0


def test_acc_k_miss():
    assert acc_k([96.0], [90.0], 5) == 0.0
    assert acc_k([96.0], [90.0], 3) == 0.0
    assert acc_k([95.0], [90.0], 5) == 1.0  # boundary is inclusive


def test_acc_k_errors():
    with pytest.raises(ValueError):
        acc_k([1.0], [1.0, 2.0], 3)
    with pytest.raises(ValueError):
        acc_k([], [], 3)


@given(st.lists(st.tuples(st.floats(0, 200), st.floats(0, 200)),
                min_size=1, max_size=50))
def test_acc_monotone_in_k(pairs):
    preds = [p for p, _ in pairs]
    truths = [t for _, t in pairs]
    assert acc_k(preds, truths, 3) <= acc_k(preds, truths, 5)


@given(st.permutations(list(range(6))))
def test_acc_permutation_invariant(order):
    preds = [90.0, 92.0, 100.0, 88.0, 90.5, 70.0]
    truths = [90.0] * 6
    shuffled = [(preds[i], truths[i]) for i in order]
    assert acc_k([p for p, _ in shuffled], [t for _, t in shuffled], 3) == \
        acc_k(preds, truths, 3)


def _estimate(valid=True, **kw):
    fields = dict(intersection_id="X1", approach="N", movement="straight",
                  period_start_s=0, period_end_s=86400, cycle_s=90.0,
                  red_s=50, green_s=40.0, valid=valid, confidence=0.4,
                  support_n=100)
    fields.update(kw)
    return PhaseEstimate(**fields)


def _recalled(**kw):
    fields = dict(intersection_id="X1", approach="N", movement="straight",
                  period_start_s=0, period_end_s=86400, stage="cycle",
                  reason="UnreliableEstimateError", support_n=10)
    fields.update(kw)
    return RecalledCase(**fields)


def test_recall_fractions():
    assert recall([_estimate(), _estimate()]) == 1.0
    assert recall([_estimate(), _recalled()]) == 0.5
    assert recall([_estimate(valid=False), _estimate()]) == 0.5
    assert recall([]) == 0.0


def test_score_report_invariant():
    with pytest.raises(ValueError):
        ScoreReport(acc3=0.9, acc5=0.5, recall=1.0, n_cases=10, residuals=())


def _truth(cycle=90.0, red=50):
    return SignalPlanTruth(
        "X1", (PlanPeriod(0, 86400, cycle, {"N": red}),), {"N": 0})


def test_score_run_slices_and_residuals():
    reports = score_run([_estimate(cycle_s=92.0, red_s=48, green_s=44.0)],
                        [_truth()])
    # 30 half-hour slices between 06:00 and 21:00, one stream covering all
    assert reports["cycle"].n_cases == 30
    assert reports["cycle"].acc3 == 1.0
    assert reports["red"].residuals[0] == pytest.approx(-2.0)
    assert reports["red"].recall == 1.0


def test_score_run_counts_recalls():
    rows = [_estimate(period_end_s=43200),
            _recalled(period_start_s=43200, period_end_s=86400)]
    reports = score_run(rows, [_truth()])
    assert 0.0 < reports["cycle"].recall < 1.0
    # recalled slices contribute attempts but no residuals
    assert reports["cycle"].n_cases < 30


def test_score_run_ignores_unknown_streams():
    rows = [_estimate(intersection_id="UNKNOWN")]
    reports = score_run(rows, [_truth()])
    assert reports["cycle"].n_cases == 0


def test_report_formats():
    reports = score_run([_estimate()], [_truth()])
    text = format_table(reports)
    assert "ACC-5" in text and "cycle" in text and "red" in text
    js = report_to_json(reports)
    assert '"acc5"' in js and '"recall"' in js
