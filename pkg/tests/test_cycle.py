"""Spectrum candidates, Eq-style folding, KS scoring and cycle selection."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatfcd import kernels
from spatfcd.cycle import (
    EventSeries,
    build_series,
    fft_candidates,
    fft_only_cycle,
    ks_statistic,
    map_to_cycle,
    score_candidates,
    select_cycle,
)
from spatfcd.errors import (
    EmptyWindowError,
    InsufficientDataError,
    NoPeriodicityError,
    UnreliableEstimateError,
)
from spatfcd.preprocess import superpose
from helpers import SETTINGS, oracle_window, synthetic_events


def _window(rel_times, min_events=1):
    return superpose(synthetic_events(rel_times), "weekday",
                     19723 * 86400, min_events=min_events)


def test_build_series_binning():
    window = _window([0, 0, 5])
    series = build_series(window)
    assert series.counts[0] == 2 and series.counts[5] == 1
    assert series.counts.sum() == 3
    assert series.counts.shape == (3600,)


def test_build_series_mass_conservation():
    window = oracle_window(seed=9, days=10)
    series = build_series(window)
    assert series.counts.sum() == len(window.events)


def test_build_series_empty():
    empty = superpose([], "weekday", 19723 * 86400)
    with pytest.raises(EmptyWindowError):
        build_series(empty)


def _dft_magnitude(counts, period):
    """Independent single-frequency DFT magnitude after mean removal."""
    x = counts.astype(float) - counts.mean()
    n = x.shape[0]
    k = n / period
    angles = -2j * np.pi * k * np.arange(n) / n
    return abs(np.sum(x * np.exp(angles)))


def test_fft_candidates_impulse_train():
    counts = np.zeros(3600, dtype=np.int64)
    counts[::90] = 1
    series = EventSeries(1, counts)
    cands = fft_candidates(series)
    periods = [c for c, _ in cands]
    assert any(abs(p - 90.0) <= 1e-9 for p in periods)
    # magnitudes agree with an explicit single-frequency DFT
    for period, mag in cands:
        assert mag == pytest.approx(_dft_magnitude(counts, period), rel=1e-9)


def test_fft_candidates_harmonics_both_present():
    counts = np.zeros(3600, dtype=np.int64)
    counts[::90] += 2          # fundamental at 90
    counts[45::90] += 1        # every 45 s, weaker
    cands = fft_candidates(EventSeries(1, counts))
    periods = [c for c, _ in cands]
    assert any(abs(p - 90.0) <= 1.0 for p in periods)
    assert any(abs(p - 45.0) <= 1.0 for p in periods)


def test_fft_candidates_flat_series():
    with pytest.raises(NoPeriodicityError):
        fft_candidates(EventSeries(1, np.zeros(3600, dtype=np.int64)))
    with pytest.raises(NoPeriodicityError):
        fft_candidates(EventSeries(1, np.full(3600, 7, dtype=np.int64)))


def test_fft_candidates_respects_range_and_k():
    rng = np.random.default_rng(0)
    counts = rng.poisson(2.0, 3600)
    cands = fft_candidates(EventSeries(1, counts), k=5, min_cycle_s=30, c_max_s=600)
    assert len(cands) <= 5
    assert all(30 <= p <= 600 for p, _ in cands)
    for i, (p, _) in enumerate(cands):
        assert all(abs(p - q) > 1.0 for q, _ in cands[:i])


@pytest.mark.parametrize("t,c,expected", [
    (0, 100, 0.0),
    (130, 100, 30.0),
    (250, 100, -50.0),   # round(2.5) = 3 under half-away-from-zero
])
def test_map_to_cycle_examples(t, c, expected):
    assert map_to_cycle(t, c) == expected


def test_map_to_cycle_domain_error():
    with pytest.raises(ValueError):
        map_to_cycle(10.0, 0.0)
    with pytest.raises(ValueError):
        map_to_cycle(10.0, -5.0)


@given(st.integers(-100000, 100000), st.integers(1, 600))
def test_map_periodicity_integer(t, c):
    assert map_to_cycle(t + c, c) == pytest.approx(map_to_cycle(t, c), abs=1e-9)
    assert -c / 2 <= map_to_cycle(t, c) <= c / 2


def test_ks_statistic_examples():
    n, c = 10, 90.0
    quantiles = [-c / 2 + (i / n) * c for i in range(1, n + 1)]
    assert ks_statistic(quantiles, c) == pytest.approx(1 / n, abs=1e-12)
    assert ks_statistic([3.0] * 25, c) >= 0.5
    with pytest.raises(ValueError):
        ks_statistic([], c)
    with pytest.raises(ValueError):
        ks_statistic([1.0], 0.0)


def test_select_cycle_recovers_oracle():
    hits = 0
    for seed in range(10):
        window = oracle_window(seed=seed)
        est = select_cycle(window, SETTINGS.cycle)
        hits += abs(est.best.c - 90.0) <= 2.0
        assert est.best.ks_d == max(c.ks_d for c in est.candidates)
        assert est.support_n == len(window.events)
    assert hits >= 9


def test_select_cycle_prefers_true_over_half_and_double():
    window = oracle_window(seed=21)
    series = build_series(window)
    counts = series.counts.astype(float) - series.counts.mean()
    mag = np.abs(np.fft.rfft(counts))
    injected = [(45.0, float(mag[80])), (90.0, float(mag[40])), (180.0, float(mag[20]))]
    rel = np.asarray(window.rel_times(), dtype=np.float64)
    scored = score_candidates(rel, injected)
    best = max(scored, key=lambda cc: (cc.ks_d, cc.c))
    assert best.c == 90.0


def test_select_cycle_tie_breaks_toward_larger():
    # two events per 90 s at 0 and +45 make D(90) == D(45) == 0.5 exactly
    rel = sorted(list(range(0, 3600, 90)) * 2 + list(range(45, 3600, 90)))
    window = _window(rel)
    est = select_cycle(window, SETTINGS.cycle)
    d90 = ks_statistic(kernels.map_to_cycle(np.asarray(rel, float), 90.0), 90.0)
    d45 = ks_statistic(kernels.map_to_cycle(np.asarray(rel, float), 45.0), 45.0)
    assert d90 == d45
    assert est.best.c == pytest.approx(90.0)


def test_select_cycle_uniform_noise_is_unreliable():
    rng = np.random.default_rng(5)
    rel = np.sort(rng.uniform(0, 3600, 2500))
    rel[0] = 0.0
    window = _window(rel.tolist())
    with pytest.raises(UnreliableEstimateError):
        select_cycle(window, SETTINGS.cycle)


def test_select_cycle_low_support():
    window = _window([0, 90, 180], min_events=30)
    assert window.low_support
    with pytest.raises(InsufficientDataError):
        select_cycle(window, SETTINGS.cycle)


def test_select_cycle_permutation_invariant():
    rng = np.random.default_rng(8)
    rel = (np.arange(40) * 90 + rng.normal(0, 4, 40).round()).clip(0, 3599)
    rel = np.sort(rel).tolist()
    rel[0] = 0
    est1 = select_cycle(_window(rel), SETTINGS.cycle)
    shuffled = rel.copy()
    rng.shuffle(shuffled)
    shuffled = [r - min(shuffled) for r in shuffled]
    est2 = select_cycle(_window(shuffled), SETTINGS.cycle)
    assert est1.best.c == est2.best.c
    assert est1.best.ks_d == pytest.approx(est2.best.ks_d, abs=1e-12)


def test_disambiguation_rate_over_seeds():
    # D(C) must beat D(C/2) and D(2C) in at least 90% of seeds
    wins = 0
    for seed in range(20):
        window = oracle_window(seed=seed + 50, days=10)
        rel = np.asarray(window.rel_times(), dtype=np.float64)
        d = {c: ks_statistic(kernels.map_to_cycle(rel, c), c) for c in (45.0, 90.0, 180.0)}
        wins += d[90.0] > d[45.0] and d[90.0] > d[180.0]
    assert wins >= 18


def test_fft_only_baseline_exists():
    window = oracle_window(seed=13)
    assert abs(fft_only_cycle(window, SETTINGS.cycle) - 90.0) <= 2.5
