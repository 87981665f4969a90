# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled special-function kernels.

Same recurrence-plus-asymptotic-series algorithm as ``_kernels_np`` (see
that module for the numerical analysis); the scalar loops make this the
fast path for the batched evaluations that dominate training and
selection.  Inputs are 1-D float64 arrays of strictly positive finite
values, validated by callers.
"""

import numpy as np

from libc.math cimport log

cdef double THRESHOLD = 10.0
cdef double HALF_LOG_TWO_PI = 0.9189385332046727

cdef double LG1 = 1.0 / 12.0
cdef double LG2 = -1.0 / 360.0
cdef double LG3 = 1.0 / 1260.0
cdef double LG4 = -1.0 / 1680.0
cdef double LG5 = 1.0 / 1188.0
cdef double LG6 = -691.0 / 360360.0
cdef double LG7 = 1.0 / 156.0

cdef double DG1 = 1.0 / 12.0
cdef double DG2 = -1.0 / 120.0
cdef double DG3 = 1.0 / 252.0
cdef double DG4 = -1.0 / 240.0
cdef double DG5 = 1.0 / 132.0
cdef double DG6 = -691.0 / 32760.0
cdef double DG7 = 1.0 / 12.0

cdef double TG1 = 1.0 / 6.0
cdef double TG2 = -1.0 / 30.0
cdef double TG3 = 1.0 / 42.0
cdef double TG4 = -1.0 / 30.0
cdef double TG5 = 5.0 / 66.0
cdef double TG6 = -691.0 / 2730.0
cdef double TG7 = 7.0 / 6.0


cdef inline double _log_gamma(double x) nogil:
    cdef double acc = 0.0
    cdef double r, series
    while x < THRESHOLD:
        acc -= log(x)
        x += 1.0
    r = 1.0 / (x * x)
    series = LG1 + r * (LG2 + r * (LG3 + r * (LG4 + r * (LG5 + r * (LG6 + r * LG7)))))
    return acc + (x - 0.5) * log(x) - x + HALF_LOG_TWO_PI + series / x


cdef inline double _digamma(double x) nogil:
    cdef double acc = 0.0
    cdef double r, series
    while x < THRESHOLD:
        acc -= 1.0 / x
        x += 1.0
    r = 1.0 / (x * x)
    series = r * (DG1 + r * (DG2 + r * (DG3 + r * (DG4 + r * (DG5 + r * (DG6 + r * DG7))))))
    return acc + log(x) - 0.5 / x - series


cdef inline double _trigamma(double x) nogil:
    cdef double acc = 0.0
    cdef double r, series
    while x < THRESHOLD:
        acc += 1.0 / (x * x)
        x += 1.0
    r = 1.0 / (x * x)
    series = TG1 + r * (TG2 + r * (TG3 + r * (TG4 + r * (TG5 + r * (TG6 + r * TG7)))))
    return acc + 1.0 / x + 0.5 * r + series * r / x


def log_gamma_arr(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = _log_gamma(x[i])
    return out_arr


def digamma_arr(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = _digamma(x[i])
    return out_arr


def trigamma_arr(const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = _trigamma(x[i])
    return out_arr
