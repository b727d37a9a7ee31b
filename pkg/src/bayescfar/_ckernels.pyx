# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels.

Row-for-row the same arithmetic as ``bayescfar._pykernels`` (same
summation order for the window sums), so the two backends agree to
rounding in the final log-sum-exp.  Callers validate inputs.
"""
import numpy as np

from libc.math cimport INFINITY, exp, log, log1p
from libc.stdlib cimport free, malloc


cdef inline double _window_sum(const double[:, ::1] crp, Py_ssize_t r,
                               Py_ssize_t n, Py_ssize_t exclude) noexcept nogil:
    cdef double pre = 0.0, suf = 0.0
    cdef Py_ssize_t i
    if exclude < 0:
        for i in range(n):
            pre += crp[r, i]
        return pre
    for i in range(exclude):
        pre += crp[r, i]
    for i in range(n - 1, exclude, -1):
        suf += crp[r, i]
    return pre + suf


def threshold_exceedances(const double[::1] z0, const double[:, ::1] crp,
                          Py_ssize_t exclude, double mult):
    cdef Py_ssize_t m = crp.shape[0], n = crp.shape[1], r
    cdef long long count = 0
    with nogil:
        for r in range(m):
            if z0[r] > mult * _window_sum(crp, r, n, exclude):
                count += 1
    return count


cdef inline double _lse(const double *x, Py_ssize_t k) noexcept nogil:
    cdef double m = -INFINITY, acc = 0.0
    cdef Py_ssize_t i
    for i in range(k):
        if x[i] > m:
            m = x[i]
    for i in range(k):
        acc += exp(x[i] - m)
    return m + log(acc)


def mixture_pfa(const double[::1] tau, const double[:, ::1] crp,
                const double[::1] log_pi, double log_pi0):
    cdef Py_ssize_t m = crp.shape[0], n = crp.shape[1], r, j, k
    cdef double acc, total, d, shift, w0, ln_nm1 = log(<double>(n - 1))
    cdef double lp
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double *sj = <double *> malloc(n * sizeof(double))
    cdef double *den = <double *> malloc((n + 1) * sizeof(double))
    cdef double *num = <double *> malloc((n + 1) * sizeof(double))
    if sj == NULL or den == NULL or num == NULL:
        free(sj); free(den); free(num)
        raise MemoryError()
    try:
        with nogil:
            for r in range(m):
                acc = 0.0
                for j in range(n):
                    sj[j] = acc
                    acc += crp[r, j]
                total = acc
                acc = 0.0
                for j in range(n - 1, -1, -1):
                    sj[j] = sj[j] + acc
                    acc += crp[r, j]
                k = 0
                shift = -INFINITY
                for j in range(n):
                    if log_pi[j] == -INFINITY:
                        continue
                    d = log_pi[j] - log(crp[r, j]) - (n - 1) * log(sj[j])
                    den[k] = d
                    num[k] = (n - 1) * log1p(tau[r] / sj[j])
                    if d > shift:
                        shift = d
                    k += 1
                if log_pi0 != -INFINITY:
                    w0 = log_pi0 + ln_nm1 - n * log(total)
                    den[k] = w0
                    num[k] = n * log1p(tau[r] / total)
                    if w0 > shift:
                        shift = w0
                    k += 1
                # num holds the tau decay until the weights are shifted
                for j in range(k):
                    den[j] = den[j] - shift
                    num[j] = den[j] - num[j]
                lp = _lse(num, k) - _lse(den, k)
                o[r] = min(1.0, exp(lp))
    finally:
        free(sj); free(den); free(num)
    return out
