"""Kernel semantics plus compiled/python backend parity."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spatfcd import kernels

BACKENDS = kernels.backends()
both = pytest.mark.parametrize("impl", list(BACKENDS.values()), ids=list(BACKENDS))


@both
def test_map_examples(impl):
    out = impl.map_to_cycle(np.array([0.0, 130.0, 250.0]), 100.0)
    assert out.tolist() == [0.0, 30.0, -50.0]


@both
def test_map_rejects_bad_cycle(impl):
    with pytest.raises(ValueError):
        impl.map_to_cycle(np.array([1.0]), 0.0)


@both
def test_map_range_and_periodicity(impl):
    t = np.arange(-3000, 3000, dtype=np.float64)
    c = 97.0
    mapped = impl.map_to_cycle(t, c)
    assert np.all(mapped >= -c / 2 - 1e-9) and np.all(mapped <= c / 2 + 1e-9)
    shifted = impl.map_to_cycle(t + c, c)
    assert np.allclose(shifted, mapped, atol=1e-9)


@both
def test_ks_uniform_quantiles(impl):
    # points at the exact upper uniform quantiles force D == 1/n
    n, c = 8, 100.0
    pts = np.array(sorted(-c / 2 + (i / n) * c for i in range(1, n + 1)))
    assert impl.ks_uniform(pts, c) == pytest.approx(1 / n, abs=1e-12)


@both
def test_ks_point_mass(impl):
    pts = np.full(10, 7.0)
    assert impl.ks_uniform(pts, 100.0) >= 0.5


@both
def test_ks_point_mass_beats_quantiles(impl):
    n, c = 12, 90.0
    quant = np.array(sorted(-c / 2 + (i / n) * c for i in range(1, n + 1)))
    point = np.zeros(n)
    assert impl.ks_uniform(point, c) >= impl.ks_uniform(quant, c)


def _ks_brute(sample, c):
    """O(n^2) sup deviation via explicit counting, the independent oracle."""
    n = len(sample)
    best = 0.0
    for x in sample:
        below = sum(1 for y in sample if y <= x) / n
        strictly = sum(1 for y in sample if y < x) / n
        g = min(max((x + c / 2) / c, 0.0), 1.0)
        best = max(best, abs(below - g), abs(strictly - g))
    return best


@both
def test_ks_matches_brute_force(impl):
    rng = np.random.default_rng(42)
    c = 90.0
    sample = np.sort(np.clip(rng.normal(0, 5, 500), -c / 2, c / 2))
    assert impl.ks_uniform(sample, c) == pytest.approx(_ks_brute(sample, c), abs=1e-12)


@both
def test_ks_bounds(impl):
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = rng.uniform(10, 600)
        pts = np.sort(rng.uniform(-c / 2, c / 2, rng.integers(1, 200)))
        d = impl.ks_uniform(pts, c)
        assert 0.0 <= d <= 1.0


@both
def test_dispersion_single_instant(impl):
    assert impl.modal_dispersion(np.full(9, 13.2), 90.0) == pytest.approx(0.0, abs=1e-12)


@both
def test_dispersion_half_cycle_pair(impl):
    c = 90.0
    psi = impl.modal_dispersion(np.array([0.0, c / 2]), c)
    assert psi == pytest.approx(1 / (2 * math.sqrt(2)), abs=1e-12)


@both
def test_dispersion_gaussian_scale(impl):
    rng = np.random.default_rng(3)
    c = 90.0
    mapped = kernels.map_to_cycle(rng.normal(0, 5, 500), c)
    psi = impl.modal_dispersion(np.asarray(mapped), c)
    assert psi == pytest.approx(5 / 90, rel=0.2)


arrays = hnp.arrays(np.float64, st.integers(1, 300),
                    elements=st.floats(-5000, 5000, allow_nan=False,
                                       allow_infinity=False, width=64))


@pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")
@given(t=arrays, c=st.floats(1.0, 600.0))
def test_backend_parity(t, c):
    py, cy = BACKENDS["python"], BACKENDS["compiled"]
    t = np.ascontiguousarray(t)
    m_py = py.map_to_cycle(t, c)
    m_cy = cy.map_to_cycle(t, c)
    assert np.allclose(m_py, m_cy, atol=1e-9)
    s = np.sort(m_py)
    assert py.ks_uniform(s, c) == pytest.approx(cy.ks_uniform(s, c), abs=1e-9)
    assert py.modal_dispersion(m_py, c) == pytest.approx(
        cy.modal_dispersion(m_py, c), abs=1e-9)


def test_dispatch_wrappers_accept_lists():
    assert kernels.ks_uniform([0.0, 10.0, -10.0], 90.0) <= 1.0
    assert kernels.modal_dispersion([5.0, 5.0], 90.0) == 0.0
    assert kernels.map_to_cycle([95.0], 90.0)[0] == pytest.approx(5.0)
