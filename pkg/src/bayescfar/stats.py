"""Sampling, reproducible RNG streams and log-domain helpers.

Random streams are numpy ``Philox`` generators (a counter-based 4x64 bit
generator).  A stream is identified by ``(master_seed, stream_id)``; the
key is derived by :class:`numpy.random.SeedSequence`, which hashes the
master seed together with the stream id used as its spawn key.  Two
streams with different ids therefore get unrelated Philox keys, and a
stream's sequence never depends on how many other streams exist or on
which worker consumes it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .errors import ParameterError

__all__ = [
    "RngStream",
    "derive_stream",
    "uniform_open_closed",
    "exponential_from_uniform",
    "sample_exponential",
    "sample_exponentials",
    "log_sum_exp",
    "wilson_interval",
]

_U64 = (1 << 64) - 1


@dataclass
class RngStream:
    """A reproducible random stream owned by one worker at a time."""

    master_seed: int
    stream_id: int
    generator: np.random.Generator = field(repr=False, compare=False)


def derive_stream(master_seed: int, stream_id: int) -> RngStream:
    """Return the stream ``stream_id`` of ``master_seed``.

    Both values are reduced modulo 2**64.
    """
    master_seed = int(master_seed) & _U64
    stream_id = int(stream_id) & _U64
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id,))
    gen = np.random.Generator(np.random.Philox(seq))
    return RngStream(master_seed, stream_id, gen)


def uniform_open_closed(rng: RngStream, size=None):
    """Uniform variates on (0, 1]; never exactly zero."""
    return 1.0 - rng.generator.random(size)


def _check_rate(rate):
    rate_arr = np.asarray(rate, dtype=float)
    if not np.all(np.isfinite(rate_arr)) or np.any(rate_arr <= 0):
        raise ParameterError(f"exponential rate must be finite and > 0, got {rate!r}")


def exponential_from_uniform(u, rate):
    """Inverse CDF of Exponential(rate): ``-ln(u) / rate``."""
    _check_rate(rate)
    return -np.log(u) / rate


def sample_exponential(rate: float, rng: RngStream) -> float:
    """Draw one Exponential(rate) variate (mean ``1/rate``)."""
    _check_rate(rate)
    return float(-math.log(uniform_open_closed(rng)) / rate)


def sample_exponentials(rate, rng: RngStream, size) -> np.ndarray:
    """Vectorised :func:`sample_exponential`.

    ``rate`` broadcasts against ``size`` so per-column rates can be given
    as a 1-D array for a ``(rows, cols)`` draw.
    """
    _check_rate(rate)
    return -np.log(uniform_open_closed(rng, size)) / np.asarray(rate, dtype=float)


def log_sum_exp(terms, axis=None):
    """Stable ``ln(sum(exp(terms)))``.

    Entries may be ``-inf`` (an absent term).  NaN or ``+inf`` entries
    are rejected: every mixture term in this package is a strictly
    positive finite number, so either one signals a bug upstream.
    With ``axis=None`` a Python float is returned.
    """
    x = np.asarray(terms, dtype=float)
    if x.size == 0 or (axis is not None and x.shape[axis] == 0):
        raise ParameterError("log_sum_exp needs at least one term")
    if np.isnan(x).any() or np.isposinf(x).any():
        raise ParameterError("log_sum_exp terms must be finite or -inf")
    m = np.max(x, axis=axis, keepdims=True)
    # all -inf along the reduction: result is -inf, avoid inf - inf
    m_safe = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(divide="ignore"):
        out = m_safe + np.log(np.sum(np.exp(x - m_safe), axis=axis, keepdims=True))
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def wilson_interval(successes: int, trials: int, confidence: float = 0.99):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ParameterError("successes must lie in [0, trials]")
    ci = _sps.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence, method="wilson"
    )
    return float(ci.low), float(ci.high)
