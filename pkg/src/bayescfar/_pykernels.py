"""Pure numpy Monte Carlo kernels; the fallback when the extension is absent.

``crp`` is a C-contiguous ``(trials, N)`` array of strictly positive
cells, ``z0``/``tau`` a length-``trials`` vector.  Callers validate.
"""
import numpy as np

from .stats import log_sum_exp


def _exclusive_sums(crp):
    """Per-row exclusive prefix and suffix running sums, plus the row total."""
    csum = np.cumsum(crp, axis=1)
    rsum = np.cumsum(crp[:, ::-1], axis=1)[:, ::-1]
    zeros = np.zeros((crp.shape[0], 1))
    pre = np.hstack((zeros, csum[:, :-1]))
    suf = np.hstack((rsum[:, 1:], zeros))
    return pre, suf, csum[:, -1]


def threshold_exceedances(z0, crp, exclude, mult):
    """Count rows with ``z0 > mult * S``, where ``S`` sums every cell but
    ``exclude`` (0-based; negative keeps all cells)."""
    if exclude < 0:
        s = np.cumsum(crp, axis=1)[:, -1]
    else:
        n = crp.shape[1]
        pre = np.cumsum(crp[:, :exclude], axis=1)[:, -1] if exclude > 0 else 0.0
        suf = (
            np.cumsum(crp[:, exclude + 1:][:, ::-1], axis=1)[:, -1]
            if exclude < n - 1
            else 0.0
        )
        s = pre + suf
    return int(np.count_nonzero(z0 > mult * s))


def mixture_pfa(tau, crp, log_pi, log_pi0):
    """Row-wise Pfa of the interferer mixture detector at ``tau``.

    ``log_pi`` holds ``ln pi_j`` (``-inf`` drops the cell) and
    ``log_pi0`` the log absence weight (``-inf`` for the Case-2 form).
    """
    n = crp.shape[1]
    pre, suf, total = _exclusive_sums(crp)
    keep = np.isfinite(log_pi)
    sj = (pre + suf)[:, keep]
    den = log_pi[keep] - np.log(crp[:, keep]) - (n - 1) * np.log(sj)
    decay = (n - 1) * np.log1p(tau[:, None] / sj)
    if np.isfinite(log_pi0):
        den = np.column_stack((den, log_pi0 + np.log(n - 1.0) - n * np.log(total)))
        decay = np.column_stack((decay, n * np.log1p(tau / total)))
    den = den - den.max(axis=1, keepdims=True)
    lp = log_sum_exp(den - decay, axis=1) - log_sum_exp(den, axis=1)
    return np.minimum(1.0, np.exp(lp))
