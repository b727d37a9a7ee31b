"""Independent checks of the closed-form Pfa expressions.

The predictive density of the cell under test is, for every detector
here, a finite mixture of shifted power laws

    f(z0) = sum_k c_k * (z0 + s_k) ** (-p_k).

:class:`PowerLawMixture` carries that representation, built directly
from the density formulas (not from the Pfa code in
:mod:`bayescfar.detectors`).  :func:`quadrature_pfa` integrates it
numerically over ``[tau, T]`` and closes the integral with the analytic
bound ``c * T**(1-p) / (p-1)`` on the remaining tail.

The module also has naive linear-domain Pfa formulas, a finite
difference helper and :func:`run_validation`, which bundles every
cross-check into a pass/fail table.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy import integrate

from . import detectors as det
from .detectors import ClutterRangeProfile, DetectorSpec, InterferencePrior, Variant, as_crp
from .errors import ConvergenceError, ParameterError
from .stats import derive_stream, log_sum_exp

__all__ = [
    "QuadratureSettings",
    "PowerLawMixture",
    "density_for",
    "predictive_density_ca",
    "predictive_density_case1",
    "predictive_density_case2",
    "predictive_density_case3",
    "quadrature_pfa",
    "finite_difference_density",
    "linear_pfa",
    "CheckResult",
    "run_validation",
    "mc_pfa",
]


# QUADPACK refuses relative tolerances below 50 machine epsilons
_MIN_EPSREL = 50 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-10
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ParameterError("rel_tol must be > 0")
        if int(self.max_subdivisions) < 1:
            raise ParameterError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class PowerLawMixture:
    """``sum_k exp(log_coefs[k]) * (z0 + offsets[k]) ** -powers[k]``."""

    log_coefs: np.ndarray
    offsets: np.ndarray
    powers: np.ndarray

    def __call__(self, z0):
        z = np.asarray(z0, dtype=float)
        terms = self.log_coefs - self.powers * np.log(np.add.outer(z, self.offsets))
        out = np.exp(log_sum_exp(terms, axis=-1))
        return float(out) if out.ndim == 0 else out

    @property
    def min_offset(self) -> float:
        return float(self.offsets.min())

    def tail_bound(self, t: float) -> float:
        """Upper bound on the integral of the density over ``[t, inf)``."""
        p = self.powers
        return math.exp(log_sum_exp(self.log_coefs + (1.0 - p) * math.log(t) - np.log(p - 1.0)))


def _excluded_sums_direct(z: np.ndarray) -> np.ndarray:
    # O(N^2) on purpose: keeps the oracle off the detectors' summation path
    return np.array([math.fsum(np.delete(z, j)) for j in range(z.size)])


def _mixture(log_coefs, offsets, powers) -> PowerLawMixture:
    return PowerLawMixture(
        np.asarray(log_coefs, dtype=float),
        np.asarray(offsets, dtype=float),
        np.asarray(powers, dtype=float),
    )


def ca_density(crp) -> PowerLawMixture:
    """``N S^N / (z0 + S)^(N+1)``."""
    z = as_crp(crp).cells
    n = z.size
    s = math.fsum(z)
    return _mixture([math.log(n) + n * math.log(s)], [s], [n + 1])


def case1_density(crp, interferer_index: int) -> PowerLawMixture:
    """``(N-1) S'^(N-1) / (z0 + S')^N`` with the interferer cell left out."""
    z = as_crp(crp).cells
    n = z.size
    det._check_index(interferer_index, n)
    s = math.fsum(np.delete(z, interferer_index - 1))
    return _mixture([math.log(n - 1) + (n - 1) * math.log(s)], [s], [n])


def _bayes_density(z: np.ndarray, prior: InterferencePrior) -> PowerLawMixture:
    n = z.size
    if prior.n_cells != n:
        raise ParameterError(f"prior covers {prior.n_cells} cells, CRP has {n}")
    pi = prior.cell_weights
    keep = pi > 0
    sj = _excluded_sums_direct(z)[keep]
    lw = np.log(pi[keep]) - np.log(z[keep])
    # numerator weights carry (N-1)!, the normaliser (N-2)!
    num_c = lw + math.lgamma(n)
    den_terms = lw + math.lgamma(n - 1) - (n - 1) * np.log(sj)
    offsets, powers = sj, np.full(sj.size, float(n))
    p0 = prior.absence
    if p0 > 0:
        s = math.fsum(z)
        num_c = np.append(num_c, math.log(p0) + math.log(n) + math.log(n - 1) + math.lgamma(n - 1))
        den_terms = np.append(den_terms, math.log(p0) + math.log(n - 1) + math.lgamma(n - 1) - n * math.log(s))
        offsets = np.append(offsets, s)
        powers = np.append(powers, n + 1.0)
    return _mixture(num_c - log_sum_exp(den_terms), offsets, powers)


def case2_density(crp, prior: InterferencePrior) -> PowerLawMixture:
    if prior.with_absence:
        raise ParameterError("Case 2 takes a prior without an absence weight")
    return _bayes_density(as_crp(crp).cells, prior)


def case3_density(crp, prior: InterferencePrior) -> PowerLawMixture:
    """Negated tau-derivative of the Case-3 Pfa, as a power-law mixture."""
    if not prior.with_absence:
        raise ParameterError("Case 3 takes a prior with an absence weight")
    return _bayes_density(as_crp(crp).cells, prior)


def density_for(spec: DetectorSpec, crp) -> PowerLawMixture:
    v = spec.variant
    if v is Variant.CA:
        return ca_density(crp)
    if v is Variant.CASE1:
        return case1_density(crp, spec.interferer_index)
    if v is Variant.CASE2:
        return case2_density(crp, spec.prior)
    return case3_density(crp, spec.prior)


def predictive_density_ca(z0, crp) -> float:
    return ca_density(crp)(z0)


def predictive_density_case1(z0, crp, interferer_index: int) -> float:
    return case1_density(crp, interferer_index)(z0)


def predictive_density_case2(z0, crp, prior: InterferencePrior) -> float:
    return case2_density(crp, prior)(z0)


def predictive_density_case3(z0, crp, prior: InterferencePrior) -> float:
    return case3_density(crp, prior)(z0)


def _quad(f, a, b, epsabs, settings):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(
                f, a, b, epsabs=epsabs, epsrel=max(0.1 * settings.rel_tol, _MIN_EPSREL),
                limit=int(settings.max_subdivisions),
            )
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature on [{a:g}, {b:g}] did not converge: {exc}") from None
    return val


def quadrature_pfa(density: Callable, tau: float, settings: Optional[QuadratureSettings] = None) -> float:
    """``integral_tau^inf density(z) dz`` by adaptive quadrature.

    For a :class:`PowerLawMixture` the range is cut into segments whose
    widths grow by 4x, integrated until the analytic tail bound falls
    below ``0.1 * rel_tol`` of the running total, and the bound is added
    on.  Any other callable goes to QUADPACK's infinite-range rule.
    """
    settings = settings or QuadratureSettings()
    tau = det._check_tau(tau)
    if not isinstance(density, PowerLawMixture):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(density, tau, np.inf, epsabs=0.0,
                                        epsrel=max(settings.rel_tol, _MIN_EPSREL), limit=int(settings.max_subdivisions))
            except integrate.IntegrationWarning as exc:
                raise ConvergenceError(str(exc)) from None
        return val
    a = tau
    width = 0.5 * (tau + density.min_offset)
    total = 0.0
    for _ in range(256):
        b = a + width
        total += _quad(density, a, b, 0.01 * settings.rel_tol * total, settings)
        tail = density.tail_bound(b)
        if tail <= 0.1 * settings.rel_tol * total:
            return total + tail
        a, width = b, 4.0 * width
    raise ConvergenceError("tail bound never dropped below tolerance")


def finite_difference_density(pfa_fn: Callable[[float], float], tau: float, length_scale: float) -> float:
    """``-dPfa/dtau`` by central differences with step ``1e-5 * (tau + length_scale)``."""
    h = 1e-5 * (tau + length_scale)
    if tau - h < 0:
        raise ParameterError("tau too close to zero for a central difference")
    return -(pfa_fn(tau + h) - pfa_fn(tau - h)) / (2.0 * h)


def linear_pfa(tau, spec: DetectorSpec, crp) -> float:
    """Direct linear-domain transcription of the Pfa formulas.

    Underflows for large windows; meant for small, well-scaled checks.
    """
    z = [float(x) for x in as_crp(crp).cells]
    n = len(z)
    s = sum(z)
    v = spec.variant
    if v is Variant.CA:
        return (s / (tau + s)) ** n
    if v is Variant.CASE1:
        sp = s - z[spec.interferer_index - 1]
        return (sp / (tau + sp)) ** (n - 1)
    pi = list(spec.prior.cell_weights)
    num = sum(pi[j] / z[j] * (tau + s - z[j]) ** (-(n - 1)) for j in range(n))
    den = sum(pi[j] / z[j] * (s - z[j]) ** (-(n - 1)) for j in range(n))
    if v is Variant.CASE3:
        p0 = spec.prior.absence
        num += p0 * (n - 1) * (tau + s) ** (-n)
        den += p0 * (n - 1) * s ** (-n)
    return num / den


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


def _random_instance(gen: np.random.Generator, variant: Variant, n: int, scale: float = 1.0):
    z = _positive_exponential(gen, scale, n)
    if variant is Variant.CA:
        spec = DetectorSpec(variant, 0.01)
    elif variant is Variant.CASE1:
        spec = DetectorSpec(variant, 0.01, interferer_index=int(gen.integers(1, n + 1)))
    elif variant is Variant.CASE2:
        spec = DetectorSpec(variant, 0.01, prior=InterferencePrior(_dirichlet(gen, n)))
    else:
        spec = DetectorSpec(variant, 0.01, prior=InterferencePrior(_dirichlet(gen, n + 1), True))
    tau = float(z.sum() * 10.0 ** gen.uniform(-3.0, 0.0))
    return spec, ClutterRangeProfile(z), tau


def _positive_exponential(gen, scale, n):
    z = gen.exponential(scale, n)
    return np.where(z > 0, z, scale)


def _dirichlet(gen, k):
    w = gen.dirichlet(np.ones(k))
    # exact unit sum so validation never trips on the 1e-9 check
    w[-1] = 1.0 - math.fsum(w[:-1])
    return np.clip(w, 0.0, None)


def _rel(a, b):
    return abs(a - b) / abs(b)


def run_validation(
    instances: int = 100,
    seed: int = 0,
    settings: Optional[QuadratureSettings] = None,
    perturb: float = 0.0,
) -> List[CheckResult]:
    """Run the randomized oracle suite and return one result per check.

    ``perturb`` scales every closed-form Pfa by ``1 + perturb`` before
    comparison; a nonzero value is a negative control that must fail.
    """
    settings = settings or QuadratureSettings()
    gen = derive_stream(seed, 0).generator
    sizes = (4, 8, 16, 32)
    results = []

    def closed(tau, spec, crp):
        return det.variant_pfa(tau, spec, crp) * (1.0 + perturb)

    for v in Variant:
        err = 0.0
        for i in range(instances):
            spec, crp, tau = _random_instance(gen, v, sizes[i % len(sizes)])
            q = quadrature_pfa(density_for(spec, crp), tau, settings)
            err = max(err, _rel(closed(tau, spec, crp), q))
        results.append(CheckResult(f"quadrature vs closed form [{v.value}]", instances, err, 1e-6))

    reductions = {"case3(pi0=0) == case2": 0.0, "case2(point mass) == case1": 0.0,
                  "case3(pi0=1) == ca": 0.0}
    triples = 10 * instances
    for i in range(triples):
        n = int(gen.integers(2, 65))
        crp = ClutterRangeProfile(_positive_exponential(gen, 10.0 ** gen.uniform(-3, 3), n))
        tau = float(crp.cells.sum() * 10.0 ** gen.uniform(-4, 1))
        w = _dirichlet(gen, n)
        c2 = det.case2_pfa(tau, crp, InterferencePrior(w))
        c3 = det.case3_pfa(tau, crp, InterferencePrior(np.concatenate(([0.0], w)), True))
        reductions["case3(pi0=0) == case2"] = max(reductions["case3(pi0=0) == case2"], _rel(c3 * (1 + perturb), c2))
        j = int(gen.integers(1, n + 1))
        pm = det.case2_pfa(tau, crp, InterferencePrior.point_mass(n, j))
        c1 = det.case1_pfa(tau, crp, j)
        reductions["case2(point mass) == case1"] = max(reductions["case2(point mass) == case1"], _rel(pm * (1 + perturb), c1))
        ca = det.ca_cfar_pfa(tau, crp)
        c3one = det.case3_pfa(tau, crp, InterferencePrior.uniform(n, absence=1.0))
        reductions["case3(pi0=1) == ca"] = max(reductions["case3(pi0=1) == ca"], _rel(c3one * (1 + perturb), ca))
    for name, err in reductions.items():
        results.append(CheckResult(name, triples, err, 1e-12))

    for v in Variant:
        err = 0.0
        for i in range(instances):
            spec, crp, tau = _random_instance(gen, v, int(gen.integers(2, 9)))
            err = max(err, _rel(closed(tau, spec, crp), linear_pfa(tau, spec, crp)))
        results.append(CheckResult(f"log vs linear domain [{v.value}]", instances, err, 1e-10))

    for v in Variant:
        err = 0.0
        for i in range(20):
            spec, crp, tau = _random_instance(gen, v, sizes[i % len(sizes)])
            s = float(crp.cells.sum())
            fd = finite_difference_density(lambda t: closed(t, spec, crp), tau, s)
            err = max(err, _rel(fd, density_for(spec, crp)(tau)))
        results.append(CheckResult(f"density == -dPfa/dtau [{v.value}]", 20, err, 1e-6))

    for v in Variant:
        err = 0.0
        for i in range(20):
            spec, crp, _ = _random_instance(gen, v, sizes[i % len(sizes)])
            err = max(err, abs(quadrature_pfa(density_for(spec, crp), 0.0, settings) * (1 + perturb) - 1.0))
        results.append(CheckResult(f"density integrates to 1 [{v.value}]", 20, err, 1e-8))
    return results


def mc_pfa(spec, scenario, trials, rng, workers: int = 1):
    """Monte Carlo Pfa estimate; see :func:`bayescfar.simulate.mc_pfa`."""
    from .simulate import mc_pfa as _mc_pfa

    return _mc_pfa(spec, scenario, trials, rng, workers=workers)
