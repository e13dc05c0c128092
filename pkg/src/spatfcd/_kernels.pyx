# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: cycle folding, KS sup-deviation, modal dispersion."""

import numpy as np

cimport cython
from libc.math cimport ceil, fabs, floor, sqrt


cdef inline double _round_half_away(double x) nogil:
    if x >= 0:
        return floor(x + 0.5)
    return ceil(x - 0.5)


def map_to_cycle(double[::1] t, double cycle):
    """Fold times onto [-cycle/2, cycle/2] around the nearest cycle multiple."""
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    cdef Py_ssize_t i, n = t.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = t[i] - _round_half_away(t[i] / cycle) * cycle
    return out


def ks_uniform(double[::1] sorted_mapped, double cycle):
    """Two-sided sup deviation of the empirical CDF from uniform on the cycle.

    Input must be sorted ascending.
    """
    cdef Py_ssize_t i, n = sorted_mapped.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    cdef double half = cycle / 2.0
    cdef double inv_n = 1.0 / n
    cdef double g, d, best = 0.0
    with nogil:
        for i in range(n):
            g = (sorted_mapped[i] + half) / cycle
            if g < 0.0:
                g = 0.0
            elif g > 1.0:
                g = 1.0
            d = fabs((i + 1) * inv_n - g)
            if d > best:
                best = d
            d = fabs(i * inv_n - g)
            if d > best:
                best = d
    return best


def modal_dispersion(double[::1] mapped, double cycle):
    """RMS circular deviation from the modal 1 s bin, normalized by the cycle.

    The mode is the most populated 1 s bin (ties to the earliest bin),
    represented by the mean of its members; deviations wrap at cycle/2.
    """
    cdef Py_ssize_t i, n = mapped.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    if cycle <= 0:
        raise ValueError("cycle must be positive")
    cdef double half = cycle / 2.0
    cdef Py_ssize_t nbins = <Py_ssize_t>floor(cycle) + 1
    counts_arr = np.zeros(nbins, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef Py_ssize_t b
    with nogil:
        for i in range(n):
            b = <Py_ssize_t>floor(mapped[i] + half)
            if b < 0:
                b = 0
            elif b >= nbins:
                b = nbins - 1
            counts[b] += 1
    cdef Py_ssize_t mode = 0
    cdef long long best_count = counts[0]
    for i in range(1, nbins):
        if counts[i] > best_count:
            best_count = counts[i]
            mode = i
    cdef double mode_sum = 0.0
    cdef Py_ssize_t mode_n = 0
    with nogil:
        for i in range(n):
            b = <Py_ssize_t>floor(mapped[i] + half)
            if b < 0:
                b = 0
            elif b >= nbins:
                b = nbins - 1
            if b == mode:
                mode_sum += mapped[i]
                mode_n += 1
    cdef double mode_time = mode_sum / mode_n
    cdef double delta, acc = 0.0
    with nogil:
        for i in range(n):
            delta = mapped[i] - mode_time
            delta = delta - _round_half_away(delta / cycle) * cycle
            acc += delta * delta
    return sqrt(acc / n) / cycle
