"""Scenario synthesis and Monte Carlo experiments.

A trial draws the cell under test ``z0`` and an ``N``-cell CRP from
exponential intensities.  Clutter cells have rate ``lambda``; a target
or interferer cell keeps the exponential form with its mean scaled by
``1 + ratio`` (ratio in linear units, given in dB).

Trials are cut into fixed-size chunks.  Chunk ``k`` of the run owning
stream ``(seed, sid)`` draws from ``derive_stream(seed, sid * 2**24 + k)``
and the per-chunk detection counts are summed.  A report therefore
depends only on ``(spec, scenario, trials, seed, sid)``, never on the
number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .detectors import ClutterRangeProfile, DetectorSpec, Variant
from .errors import DomainError, ParameterError
from .stats import RngStream, derive_stream, sample_exponentials, wilson_interval

__all__ = [
    "Interferer",
    "Scenario",
    "MonteCarloReport",
    "CHUNK_SIZE",
    "db_to_linear",
    "generate_trial",
    "generate_trials",
    "count_declared",
    "run_trials",
    "mc_pfa",
    "run_pfa_sweep",
    "run_pd_curve",
    "pooled_standard_error",
    "agree_within",
]

CHUNK_SIZE = 1 << 16
_CHUNK_BITS = 24
_MAX_STREAM_ID = 1 << (64 - _CHUNK_BITS)
CONFIDENCE = 0.99


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Interferer:
    cell: int
    icr_db: float


@dataclass(frozen=True)
class Scenario:
    n_cells: int
    clutter_rate: float = 1.0
    target_present: bool = False
    scr_db: float = 0.0
    interferer: Optional[Interferer] = None

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ParameterError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")
        if not (math.isfinite(self.clutter_rate) and self.clutter_rate > 0):
            raise ParameterError(f"clutter_rate must be finite and > 0, got {self.clutter_rate!r}")
        if not math.isfinite(self.scr_db):
            raise ParameterError("scr_db must be finite")
        if self.interferer is not None:
            if not 1 <= self.interferer.cell <= self.n_cells:
                raise ParameterError(f"interferer cell must lie in 1..{self.n_cells}")
            if not math.isfinite(self.interferer.icr_db):
                raise ParameterError("icr_db must be finite")

    def rates(self) -> np.ndarray:
        """Exponential rates of ``[z0, z_1, ..., z_N]``."""
        lam = self.clutter_rate
        r = np.full(self.n_cells + 1, lam)
        if self.target_present:
            r[0] = lam / (1.0 + db_to_linear(self.scr_db))
        if self.interferer is not None:
            r[self.interferer.cell] = lam / (1.0 + db_to_linear(self.interferer.icr_db))
        return r


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    declared: int
    estimate: float
    ci_low: float
    ci_high: float
    master_seed: int
    stream_id: int
    scenario: Scenario
    spec: DetectorSpec

    @property
    def standard_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)


def generate_trials(scenario: Scenario, rng: RngStream, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` trials: a ``(size,)`` CUT vector and a C-contiguous
    ``(size, N)`` CRP array."""
    z = sample_exponentials(scenario.rates(), rng, (size, scenario.n_cells + 1))
    return z[:, 0].copy(), np.ascontiguousarray(z[:, 1:])


def generate_trial(scenario: Scenario, rng: RngStream) -> Tuple[float, ClutterRangeProfile]:
    z0, crp = generate_trials(scenario, rng, 1)
    return float(z0[0]), ClutterRangeProfile(crp[0])


def count_declared(spec: DetectorSpec, z0: np.ndarray, crp: np.ndarray, backend=None) -> int:
    """Number of rows in which ``spec`` declares a target.

    Uses the same decision as :func:`bayescfar.detectors.decide`: a
    threshold comparison for CA and Case 1, ``Pfa(z0) < alpha`` for the
    Bayesian variants.
    """
    k = backend or kernels
    n = crp.shape[1]
    spec.check_window(n)
    if crp.size and not crp.min() > 0:
        raise DomainError("CRP cells must be strictly positive")
    alpha = spec.design_pfa
    v = spec.variant
    if v is Variant.CA:
        return int(k.threshold_exceedances(z0, crp, -1, alpha ** (-1.0 / n) - 1.0))
    if v is Variant.CASE1:
        return int(k.threshold_exceedances(
            z0, crp, spec.interferer_index - 1, alpha ** (-1.0 / (n - 1)) - 1.0))
    pi = spec.prior.cell_weights
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)
    p0 = spec.prior.absence
    log_pi0 = math.log(p0) if p0 > 0 else -math.inf
    pfa = k.mixture_pfa(z0, crp, np.ascontiguousarray(log_pi), log_pi0)
    return int(np.count_nonzero(pfa < alpha))


def _chunk_count(spec, scenario, master_seed, stream_id, rows, backend):
    z0, crp = generate_trials(scenario, derive_stream(master_seed, stream_id), rows)
    return count_declared(spec, z0, crp, backend)


def run_trials(
    spec: DetectorSpec,
    scenario: Scenario,
    trials: int,
    rng: RngStream,
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
    backend=None,
) -> MonteCarloReport:
    """Run ``trials`` independent trials and report the detection rate."""
    if int(trials) != trials or trials < 1:
        raise ParameterError(f"trials must be a positive integer, got {trials!r}")
    if rng.stream_id >= _MAX_STREAM_ID:
        raise ParameterError(f"stream_id must be < 2**{64 - _CHUNK_BITS}")
    spec.check_window(scenario.n_cells)
    trials = int(trials)
    n_chunks = -(-trials // chunk_size)
    if n_chunks > 1 << _CHUNK_BITS:
        raise ParameterError("too many trials for the chunk numbering")
    base = rng.stream_id << _CHUNK_BITS
    jobs = [
        (base + k, min(chunk_size, trials - k * chunk_size)) for k in range(n_chunks)
    ]

    def work(job):
        return _chunk_count(spec, scenario, rng.master_seed, job[0], job[1], backend)

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            declared = sum(pool.map(work, jobs))
    else:
        declared = sum(map(work, jobs))
    lo, hi = wilson_interval(declared, trials, CONFIDENCE)
    return MonteCarloReport(
        trials, declared, declared / trials, lo, hi, rng.master_seed, rng.stream_id, scenario, spec
    )


def mc_pfa(
    spec: DetectorSpec, scenario: Scenario, trials: int, rng: RngStream, workers: int = 1, **kw
) -> MonteCarloReport:
    """Empirical false-alarm rate; ``scenario`` must have no target."""
    if scenario.target_present:
        raise ParameterError("a false-alarm run needs target_present=False")
    return run_trials(spec, scenario, trials, rng, workers, **kw)


def run_pfa_sweep(
    spec: DetectorSpec,
    scenario_grid: Sequence[Scenario],
    trials: int,
    master_seed: int,
    workers: int = 1,
    first_stream: int = 0,
    **kw,
) -> List[MonteCarloReport]:
    """One false-alarm report per scenario; grid point ``i`` uses stream
    ``first_stream + i``."""
    return [
        mc_pfa(spec, sc, trials, derive_stream(master_seed, first_stream + i), workers, **kw)
        for i, sc in enumerate(scenario_grid)
    ]


def run_pd_curve(
    spec: DetectorSpec,
    base_scenario: Scenario,
    scr_grid_db: Sequence[float],
    trials: int,
    master_seed: int,
    workers: int = 1,
    first_stream: int = 0,
    **kw,
) -> List[MonteCarloReport]:
    """Detection probability at each SCR of the grid (streams as in
    :func:`run_pfa_sweep`)."""
    if len(scr_grid_db) == 0:
        raise ParameterError("the SCR grid is empty")
    return [
        run_trials(
            spec,
            replace(base_scenario, target_present=True, scr_db=float(scr)),
            trials,
            derive_stream(master_seed, first_stream + i),
            workers,
            **kw,
        )
        for i, scr in enumerate(scr_grid_db)
    ]


def pooled_standard_error(a: MonteCarloReport, b: MonteCarloReport) -> float:
    """Standard error of ``a.estimate - b.estimate`` under a common rate."""
    p = (a.declared + b.declared) / (a.trials + b.trials)
    return math.sqrt(p * (1.0 - p) * (1.0 / a.trials + 1.0 / b.trials))


def agree_within(a: MonteCarloReport, b: MonteCarloReport, k: float = 4.0) -> bool:
    """True when the two estimates differ by at most ``k`` pooled SEs."""
    return abs(a.estimate - b.estimate) <= k * pooled_standard_error(a, b)
