# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled misranking counter.

Mirrors ``utileval._kernel_py.count_misrankings`` exactly: every metric is
computed with the same sequence of IEEE double operations as the vectorized
forms in ``utileval.metrics``, so both backends return identical counts.
"""
import numpy as np

from libc.math cimport sqrt, NAN
from libc.stdint cimport int64_t

cdef enum:
    N_METRIC_CODES = 8


cdef inline double _ratio(double num, double den) noexcept nogil:
    if den > 0:
        return num / den
    return 0.0


cdef inline double _rate(double num, double den) noexcept nogil:
    if den > 0:
        return num / den
    return NAN


cdef inline double _metric(int code, double c00, double c01, double c10,
                           double c11) noexcept nogil:
    cdef double f0, f1
    if code == 0:
        return c00 + c11
    elif code == 1:
        f0 = c00 + c10
        f1 = c01 + c11
        return _rate(c00, 2.0 * f0) + _rate(c11, 2.0 * f1)
    elif code == 2:
        return _ratio(c00, c00 + c01)
    elif code == 3:
        f0 = c00 + c10
        return _rate(c00, f0)
    elif code == 4:
        f1 = c01 + c11
        return _rate(c11, f1)
    elif code == 5:
        return _ratio((1.0 + 1.0) * c00, (1.0 + 1.0) * c00 + 1.0 * c10 + c01)
    elif code == 6:
        f0 = c00 + c10
        f1 = c01 + c11
        return _ratio(c00 * c11 - c01 * c10, sqrt(f0 * f1 * (c00 + c01) * (c10 + c11)))
    elif code == 7:
        f0 = c00 + c10
        return _ratio(c00, sqrt(f0 * (c00 + c01)))
    return NAN


cdef inline int _misranked(double d_true, double d_eval) noexcept nogil:
    return (d_true > 0 and d_eval < 0) or (d_true < 0 and d_eval > 0)


cdef inline int _tied(double d_true, double d_eval) noexcept nogil:
    return d_true == 0 or d_eval == 0


def count_misrankings(const double[:, ::1] true_u,
                      const double[:, :, ::1] noisy_u,
                      const double[::1] f0,
                      const double[:, ::1] rates,
                      const int64_t[::1] metric_codes):
    """Count misranked and tied pairs for each evaluator.

    Parameters
    ----------
    true_u : (n, 4) flat true utility matrices
    noisy_u : (k, n, 4) flat perturbed utility matrices, one slab per sigma
    f0 : (n,) class-0 share shared by both matrices of a pair
    rates : (n, 4) ``(tpr_a, tnr_a, tpr_b, tnr_b)``
    metric_codes : (m,) registry kernel codes

    Returns
    -------
    misranked, ties : int64 arrays of length m + k
    """
    cdef Py_ssize_t n = true_u.shape[0]
    cdef Py_ssize_t k = noisy_u.shape[0]
    cdef Py_ssize_t m = metric_codes.shape[0]
    cdef Py_ssize_t i, j
    if f0.shape[0] != n or rates.shape[0] != n or rates.shape[1] != 4 or true_u.shape[1] != 4:
        raise ValueError("inconsistent input shapes")
    if k and (noisy_u.shape[1] != n or noisy_u.shape[2] != 4):
        raise ValueError("inconsistent noisy utility shape")
    for j in range(m):
        if metric_codes[j] < 0 or metric_codes[j] >= N_METRIC_CODES:
            raise ValueError(f"unknown metric code {metric_codes[j]}")

    mis_arr = np.zeros(m + k, dtype=np.int64)
    tie_arr = np.zeros(m + k, dtype=np.int64)
    cdef int64_t[::1] mis = mis_arr
    cdef int64_t[::1] tie = tie_arr
    cdef double f, g
    cdef double a00, a01, a10, a11, b00, b01, b10, b11
    cdef double ya, yb, d_true, d_eval

    with nogil:
        for i in range(n):
            f = f0[i]
            g = 1.0 - f
            a00 = f * rates[i, 0]
            a01 = g * (1.0 - rates[i, 1])
            a10 = f * (1.0 - rates[i, 0])
            a11 = g * rates[i, 1]
            b00 = f * rates[i, 2]
            b01 = g * (1.0 - rates[i, 3])
            b10 = f * (1.0 - rates[i, 2])
            b11 = g * rates[i, 3]

            ya = true_u[i, 0] * a00 + true_u[i, 1] * a01 + true_u[i, 2] * a10 + true_u[i, 3] * a11
            yb = true_u[i, 0] * b00 + true_u[i, 1] * b01 + true_u[i, 2] * b10 + true_u[i, 3] * b11
            d_true = yb - ya

            for j in range(m):
                d_eval = (_metric(<int>metric_codes[j], b00, b01, b10, b11)
                          - _metric(<int>metric_codes[j], a00, a01, a10, a11))
                mis[j] += _misranked(d_true, d_eval)
                tie[j] += _tied(d_true, d_eval)

            for j in range(k):
                ya = (noisy_u[j, i, 0] * a00 + noisy_u[j, i, 1] * a01
                      + noisy_u[j, i, 2] * a10 + noisy_u[j, i, 3] * a11)
                yb = (noisy_u[j, i, 0] * b00 + noisy_u[j, i, 1] * b01
                      + noisy_u[j, i, 2] * b10 + noisy_u[j, i, 3] * b11)
                d_eval = yb - ya
                mis[m + j] += _misranked(d_true, d_eval)
                tie[m + j] += _tied(d_true, d_eval)

    return mis_arr, tie_arr
