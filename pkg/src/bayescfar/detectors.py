"""Closed-form false-alarm probabilities, thresholds and decision rules.

Four sliding-window detectors for exponential clutter are provided:

``CA``
    Cell averaging over all ``N`` reference cells.
``CASE1``
    Interferer at a known cell, which is excluded from the average.
``CASE2``
    One interferer at an unknown cell, with prior ``pi_1..pi_N`` over
    its position.
``CASE3``
    As ``CASE2`` but with mass ``pi_0`` on "no interferer at all".

Every Pfa is a function of the threshold ``tau`` and the clutter range
profile (CRP) ``z_1..z_N`` that is invariant under joint scaling of both,
which is what gives the detectors the CFAR property.  The Bayesian
variants are mixtures of power laws; they are evaluated as log-sum-exp
over the per-cell terms so that large windows do not underflow.

Cell indices in the public API are 1-based, matching the usual
``z_1..z_N`` numbering of the CRP.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericalError, ParameterError
from .stats import log_sum_exp

__all__ = [
    "Variant",
    "ClutterRangeProfile",
    "InterferencePrior",
    "DetectorSpec",
    "Decision",
    "as_crp",
    "excluded_sums",
    "ca_cfar_pfa",
    "ca_cfar_threshold",
    "case1_pfa",
    "case1_threshold",
    "case2_pfa",
    "case3_pfa",
    "bayes_threshold",
    "variant_pfa",
    "threshold",
    "decide",
]

PRIOR_SUM_TOL = 1e-9
# above this window size the total is summed with math.fsum
_COMPENSATED_SUM_MIN = 1000


class Variant(str, enum.Enum):
    CA = "ca"
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"

    @classmethod
    def parse(cls, text) -> "Variant":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "ca": cls.CA,
            "cacfar": cls.CA,
            "case1": cls.CASE1,
            "case2": cls.CASE2,
            "case3": cls.CASE3,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown detector variant {text!r}") from None

    @property
    def is_bayesian(self) -> bool:
        return self in (Variant.CASE2, Variant.CASE3)


@dataclass(frozen=True)
class ClutterRangeProfile:
    """The ``N`` reference-cell intensities surrounding the cell under test."""

    cells: np.ndarray

    def __post_init__(self):
        z = np.array(self.cells, dtype=float).reshape(-1)
        if z.size < 2:
            raise ParameterError(f"a CRP needs at least 2 cells, got {z.size}")
        if not np.all(np.isfinite(z)):
            raise DomainError("CRP cells must be finite")
        if np.any(z <= 0):
            raise DomainError("CRP cells must be strictly positive")
        z.setflags(write=False)
        object.__setattr__(self, "cells", z)

    def __len__(self):
        return self.cells.size

    @property
    def n(self) -> int:
        return self.cells.size

    def scaled(self, factor: float) -> "ClutterRangeProfile":
        return ClutterRangeProfile(self.cells * factor)


def as_crp(crp) -> ClutterRangeProfile:
    if isinstance(crp, ClutterRangeProfile):
        return crp
    return ClutterRangeProfile(crp)


@dataclass(frozen=True)
class InterferencePrior:
    """Prior over where the single interferer sits.

    ``weights`` holds ``pi_1..pi_N`` when ``with_absence`` is false, and
    ``pi_0, pi_1..pi_N`` when it is true (``pi_0`` = no interferer).
    Weights must be nonnegative and sum to one within ``1e-9``; they are
    never renormalised.
    """

    weights: np.ndarray
    with_absence: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < (3 if self.with_absence else 2):
            raise ParameterError("prior is too short for a window of N >= 2 cells")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("prior weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            raise ParameterError(f"prior weights sum to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_cells(self) -> int:
        return self.weights.size - (1 if self.with_absence else 0)

    @property
    def absence(self) -> float:
        """``pi_0``; zero for a prior without an absence hypothesis."""
        return float(self.weights[0]) if self.with_absence else 0.0

    @property
    def cell_weights(self) -> np.ndarray:
        return self.weights[1:] if self.with_absence else self.weights

    @classmethod
    def uniform(cls, n: int, absence: Optional[float] = None) -> "InterferencePrior":
        """Uniform over the cells; with ``absence`` given, a Case-3 prior."""
        if absence is None:
            return cls(np.full(n, 1.0 / n))
        if not 0.0 <= absence <= 1.0:
            raise ParameterError("absence probability must lie in [0, 1]")
        return cls(np.concatenate(([absence], np.full(n, (1.0 - absence) / n))), True)

    @classmethod
    def point_mass(cls, n: int, index: int, absence: Optional[float] = None) -> "InterferencePrior":
        _check_index(index, n)
        w = np.zeros(n)
        w[index - 1] = 1.0
        if absence is None:
            return cls(w)
        return cls(np.concatenate(([absence], w * (1.0 - absence))), True)

    @classmethod
    def geometric(cls, n: int, ratio: float, absence: Optional[float] = None) -> "InterferencePrior":
        """Weights decaying by ``ratio`` per cell away from the cell under test.

        The CRP is taken as a leading half (cells ``1..n//2``, the last of
        which is nearest the CUT) and a lagging half (the first of which
        is nearest the CUT).  The result is normalised to sum to one.
        """
        if not 0.0 < ratio <= 1.0:
            raise ParameterError("decay ratio must lie in (0, 1]")
        lead = n // 2
        dist = np.concatenate((np.arange(lead)[::-1], np.arange(n - lead)))
        w = ratio ** dist.astype(float)
        w /= w.sum()
        if absence is None:
            return cls(w)
        return cls(np.concatenate(([absence], w * (1.0 - absence))), True)

    @classmethod
    def parse(cls, text: str, n: int) -> "InterferencePrior":
        """Parse ``"uniform"``, ``"0.1,0.2,..."``, ``"absent:<p0>,uniform"``
        or ``"absent:<p0>,<pi_1>,...,<pi_N>"``."""
        text = text.strip()
        absence = None
        if text.lower().startswith("absent:"):
            head, _, text = text[len("absent:"):].partition(",")
            absence = _parse_float(head, "absence probability")
        if text.strip().lower() == "uniform":
            return cls.uniform(n, absence)
        parts = [p for p in text.split(",") if p.strip()]
        w = [_parse_float(p, "prior weight") for p in parts]
        if absence is not None:
            w = [absence] + w
        prior = cls(np.array(w), absence is not None)
        if prior.n_cells != n:
            raise ParameterError(f"prior has {prior.n_cells} cell weights for N={n}")
        return prior


def _parse_float(text, what):
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"cannot parse {what} from {text!r}") from None


@dataclass(frozen=True)
class DetectorSpec:
    """Detector variant, design Pfa and the variant's structural parameters."""

    variant: Variant
    design_pfa: float
    interferer_index: Optional[int] = None
    prior: Optional[InterferencePrior] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        _check_alpha(self.design_pfa)
        v = self.variant
        if v is Variant.CASE1 and self.interferer_index is None:
            raise ParameterError("Case 1 needs interferer_index")
        if v.is_bayesian:
            if self.prior is None:
                raise ParameterError(f"{v.value} needs a prior")
            if self.prior.with_absence != (v is Variant.CASE3):
                kind = "with" if v is Variant.CASE3 else "without"
                raise ParameterError(f"{v.value} needs a prior {kind} an absence weight")

    def check_window(self, n: int) -> None:
        """Raise if the spec cannot be applied to a window of ``n`` cells."""
        if self.variant is Variant.CASE1:
            _check_index(self.interferer_index, n)
        if self.prior is not None and self.prior.n_cells != n:
            raise ParameterError(f"prior covers {self.prior.n_cells} cells, CRP has {n}")


@dataclass(frozen=True)
class Decision:
    target_declared: bool
    pfa_at_cut: float
    threshold: Optional[float] = None


def _check_tau(tau) -> float:
    tau = float(tau)
    if not math.isfinite(tau) or tau < 0:
        raise ParameterError(f"tau must be finite and >= 0, got {tau!r}")
    return tau


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"design Pfa must lie in (0, 1), got {alpha!r}")
    return alpha


def _check_index(index, n) -> int:
    if index is None or int(index) != index or not 1 <= index <= n:
        raise ParameterError(f"cell index must be an integer in 1..{n}, got {index!r}")
    return int(index)


def excluded_sums(cells: np.ndarray) -> np.ndarray:
    """``S_j = sum_{i != j} z_i`` for every ``j``.

    Built from exclusive prefix and suffix running sums, so no
    subtraction is involved and a dominant cell cannot wipe out the
    precision of the others.
    """
    z = np.asarray(cells, dtype=float)
    pre = np.concatenate(([0.0], np.cumsum(z)[:-1]))
    suf = np.concatenate((np.cumsum(z[::-1])[::-1][1:], [0.0]))
    return pre + suf


def _total(cells: np.ndarray) -> float:
    if cells.size > _COMPENSATED_SUM_MIN:
        return math.fsum(cells)
    return float(np.cumsum(cells)[-1])


def ca_cfar_pfa(tau, crp) -> float:
    """``[S / (tau + S)]^N`` with ``S`` the sum of all cells."""
    tau = _check_tau(tau)
    crp = as_crp(crp)
    s = _total(crp.cells)
    return float(np.exp(-crp.n * np.log1p(tau / s)))


def ca_cfar_threshold(alpha, crp) -> float:
    alpha = _check_alpha(alpha)
    crp = as_crp(crp)
    return _total(crp.cells) * (alpha ** (-1.0 / crp.n) - 1.0)


def case1_pfa(tau, crp, interferer_index: int) -> float:
    """``[S' / (tau + S')]^(N-1)``, ``S'`` excluding the interferer cell."""
    tau = _check_tau(tau)
    crp = as_crp(crp)
    j = _check_index(interferer_index, crp.n)
    s = excluded_sums(crp.cells)[j - 1]
    return float(np.exp(-(crp.n - 1) * np.log1p(tau / s)))


def case1_threshold(alpha, crp, interferer_index: int) -> float:
    """Exact inverse of :func:`case1_pfa` in ``tau``."""
    alpha = _check_alpha(alpha)
    crp = as_crp(crp)
    j = _check_index(interferer_index, crp.n)
    s = excluded_sums(crp.cells)[j - 1]
    return s * (alpha ** (-1.0 / (crp.n - 1)) - 1.0)


def _mixture_pfa(tau: float, crp: ClutterRangeProfile, prior: InterferencePrior) -> float:
    z = crp.cells
    n = crp.n
    if prior.n_cells != n:
        raise ParameterError(f"prior covers {prior.n_cells} cells, CRP has {n}")
    pi = prior.cell_weights
    keep = pi > 0
    sj = excluded_sums(z)[keep]
    # log of pi_j / z_j * S_j^-(N-1); the tau dependence is the log1p factor
    den = np.log(pi[keep]) - np.log(z[keep]) - (n - 1) * np.log(sj)
    decay = (n - 1) * np.log1p(tau / sj)
    p0 = prior.absence
    if p0 > 0:
        s = _total(z)
        den = np.append(den, math.log(p0) + math.log(n - 1) - n * math.log(s))
        decay = np.append(decay, n * np.log1p(tau / s))
    den = den - den.max()
    log_pfa = log_sum_exp(den - decay) - log_sum_exp(den)
    return min(1.0, float(np.exp(log_pfa)))


def case2_pfa(tau, crp, prior: InterferencePrior) -> float:
    """Pfa of the unknown-location detector at threshold ``tau``."""
    tau = _check_tau(tau)
    crp = as_crp(crp)
    if prior.with_absence:
        raise ParameterError("case2_pfa takes a prior without an absence weight")
    return _mixture_pfa(tau, crp, prior)


def case3_pfa(tau, crp, prior: InterferencePrior) -> float:
    """Pfa of the detector that also allows for no interferer (``pi_0``)."""
    tau = _check_tau(tau)
    crp = as_crp(crp)
    if not prior.with_absence:
        raise ParameterError("case3_pfa takes a prior with an absence weight")
    return _mixture_pfa(tau, crp, prior)


def bayes_threshold(
    alpha,
    pfa_fn: Callable[[float], float],
    scale: float = 1.0,
    rtol: float = 1e-10,
) -> float:
    """Numerically invert a strictly decreasing Pfa curve.

    The upper end of the bracket starts at ``scale`` and doubles until
    ``pfa_fn`` falls below ``alpha``; bisection then runs until
    ``|pfa_fn(tau) - alpha| <= rtol * alpha``.  Passing the CRP sum as
    ``scale`` saves most of the expansion steps.
    """
    alpha = _check_alpha(alpha)
    if not scale > 0 or not math.isfinite(scale):
        raise ParameterError("scale must be finite and > 0")
    limit = scale * 2.0**64
    lo, hi = 0.0, float(scale)
    p_hi = pfa_fn(hi)
    while p_hi >= alpha:
        lo = hi
        hi *= 2.0
        if hi > limit:
            raise NumericalError(f"no tau up to {limit:g} brings the Pfa below {alpha:g}")
        p_hi = pfa_fn(hi)
    if abs(p_hi - alpha) <= rtol * alpha:
        return hi
    p_lo = pfa_fn(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        p = pfa_fn(mid)
        if abs(p - alpha) <= rtol * alpha:
            return mid
        if p >= alpha:
            lo, p_lo = mid, p
        else:
            hi, p_hi = mid, p
    best, p_best = (lo, p_lo) if abs(p_lo - alpha) < abs(p_hi - alpha) else (hi, p_hi)
    if abs(p_best - alpha) > rtol * alpha:
        raise NumericalError("bisection ran out of floating-point resolution")
    return best


def variant_pfa(tau, spec: DetectorSpec, crp) -> float:
    """Pfa at ``tau`` for whichever variant ``spec`` names."""
    v = spec.variant
    if v is Variant.CA:
        return ca_cfar_pfa(tau, crp)
    if v is Variant.CASE1:
        return case1_pfa(tau, crp, spec.interferer_index)
    if v is Variant.CASE2:
        return case2_pfa(tau, crp, spec.prior)
    return case3_pfa(tau, crp, spec.prior)


def threshold(alpha, spec: DetectorSpec, crp, rtol: float = 1e-10) -> float:
    """Threshold achieving Pfa ``alpha``: closed form for CA and Case 1,
    bisection for the Bayesian mixtures."""
    crp = as_crp(crp)
    spec.check_window(crp.n)
    v = spec.variant
    if v is Variant.CA:
        return ca_cfar_threshold(alpha, crp)
    if v is Variant.CASE1:
        return case1_threshold(alpha, crp, spec.interferer_index)
    return bayes_threshold(
        alpha, lambda t: variant_pfa(t, spec, crp), scale=_total(crp.cells), rtol=rtol
    )


def decide(z0, spec: DetectorSpec, crp) -> Decision:
    """Test the cell-under-test value ``z0`` against the reference window.

    Bayesian variants declare a target iff ``Pfa(z0) < design_pfa``
    (a tie is no detection).  CA and Case 1 compare ``z0`` with the
    closed-form threshold instead and report it.
    """
    z0 = _check_tau(z0)
    crp = as_crp(crp)
    spec.check_window(crp.n)
    pfa = variant_pfa(z0, spec, crp)
    if spec.variant.is_bayesian:
        return Decision(pfa < spec.design_pfa, pfa)
    tau = threshold(spec.design_pfa, spec, crp)
    return Decision(z0 > tau, pfa, tau)
