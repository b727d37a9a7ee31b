from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bayescfar import detectors as det
from bayescfar.detectors import (
    ClutterRangeProfile,
    DetectorSpec,
    InterferencePrior,
    Variant,
    bayes_threshold,
    ca_cfar_pfa,
    case1_pfa,
    case1_threshold,
    case2_pfa,
    case3_pfa,
    decide,
)
from bayescfar.errors import DomainError, NumericalError, ParameterError
from bayescfar.oracle import linear_pfa


def case2_uniform_123_at_1():
    # S_j = 5, 4, 3; N - 1 = 2; uniform weights cancel
    num = Fraction(1, 1) / 6**2 + Fraction(1, 2) / 5**2 + Fraction(1, 3) / 4**2
    den = Fraction(1, 1) / 5**2 + Fraction(1, 2) / 4**2 + Fraction(1, 3) / 3**2
    return float(num / den)


CASE2_EXAMPLE = case2_uniform_123_at_1()


def test_case2_example_value_is_the_quoted_one():
    assert CASE2_EXAMPLE == pytest.approx(0.63361, abs=1e-5)


# --- construction and validation -------------------------------------------

def test_crp_validation():
    with pytest.raises(ParameterError):
        ClutterRangeProfile([1.0])
    with pytest.raises(DomainError):
        ClutterRangeProfile([1.0, 0.0, 2.0])
    with pytest.raises(DomainError):
        ClutterRangeProfile([1.0, np.inf])
    crp = ClutterRangeProfile([1, 2, 3])
    assert crp.n == 3 and not crp.cells.flags.writeable


def test_prior_validation():
    with pytest.raises(ParameterError):
        InterferencePrior([0.3, 0.3, 0.3])
    with pytest.raises(ParameterError):
        InterferencePrior([1.2, -0.2])
    InterferencePrior([0.5, 0.5 + 5e-10])


def test_prior_helpers():
    p = InterferencePrior.uniform(4, absence=0.2)
    assert p.with_absence and p.absence == 0.2 and p.n_cells == 4
    np.testing.assert_allclose(p.cell_weights, 0.2)
    pm = InterferencePrior.point_mass(5, 2)
    assert list(pm.weights) == [0, 1, 0, 0, 0]
    g = InterferencePrior.geometric(6, 0.5)
    # cells 3 and 4 border the cell under test
    assert g.weights[2] == g.weights[3] == g.weights.max()
    assert g.weights[0] == pytest.approx(g.weights[2] / 4)
    assert g.weights.sum() == pytest.approx(1.0)


@pytest.mark.parametrize(
    "text,n,expect_absence,expect",
    [
        ("uniform", 4, False, [0.25] * 4),
        ("0.1,0.2,0.7", 3, False, [0.1, 0.2, 0.7]),
        ("absent:0.5,uniform", 2, True, [0.5, 0.25, 0.25]),
        ("absent:0.2,0.4,0.4", 2, True, [0.2, 0.4, 0.4]),
    ],
)
def test_prior_parse(text, n, expect_absence, expect):
    p = InterferencePrior.parse(text, n)
    assert p.with_absence is expect_absence
    np.testing.assert_allclose(p.weights, expect)


@pytest.mark.parametrize("text", ["0.3,0.3,0.3", "0.5,0.5", "absent:x,uniform", "a,b,c"])
def test_prior_parse_rejects(text):
    with pytest.raises(ParameterError):
        InterferencePrior.parse(text, 3)


def test_spec_validation():
    with pytest.raises(ParameterError):
        DetectorSpec("case1", 0.01)
    with pytest.raises(ParameterError):
        DetectorSpec("case2", 0.01)
    with pytest.raises(ParameterError):
        DetectorSpec("case3", 0.01, prior=InterferencePrior.uniform(3))
    with pytest.raises(ParameterError):
        DetectorSpec("ca", 1.0)
    with pytest.raises(ParameterError):
        DetectorSpec("os-cfar", 0.01)
    assert DetectorSpec("CA-CFAR", 0.1).variant is Variant.CA


# --- CA-CFAR ----------------------------------------------------------------

def test_ca_examples():
    assert ca_cfar_pfa(6, [1, 2, 3]) == pytest.approx(0.125, rel=1e-14)
    assert ca_cfar_pfa(0, [5, 1, 9, 2]) == 1.0
    assert ca_cfar_pfa(6, [2, 4, 6]) == pytest.approx(ca_cfar_pfa(3, [1, 2, 3]), rel=1e-15)


@pytest.mark.parametrize("tau", [-1.0, np.inf, np.nan])
def test_bad_tau(tau):
    with pytest.raises(ParameterError):
        ca_cfar_pfa(tau, [1, 2])


# --- Case 1 ------------------------------------------------------------------

@pytest.mark.parametrize("z3", [1e-6, 1.0, 3.0, 1e6])
def test_case1_example_ignores_interferer(z3):
    assert case1_pfa(3, [1, 2, z3], 3) == pytest.approx(0.25, rel=1e-14)


def test_case1_tau_zero_and_index_errors():
    assert case1_pfa(0, [1, 2, 3], 2) == 1.0
    for bad in (0, 4, 1.5):
        with pytest.raises(ParameterError):
            case1_pfa(1, [1, 2, 3], bad)


def test_case1_threshold_examples():
    assert case1_threshold(0.25, [1, 2, 123.0], 3) == 3.0
    assert case1_threshold(1 - 1e-12, [1, 2, 3], 3) < 1e-10
    with pytest.raises(ParameterError):
        case1_threshold(1.0, [1, 2, 3], 3)


def test_case1_threshold_is_exact_inverse_not_the_shortcut():
    # tau = alpha^(-1/(N-1)) * S' would give Pfa = (1/(1+alpha^(-1/2)))^2 != alpha
    tau = case1_threshold(0.25, [1, 2, 9], 3)
    assert tau != pytest.approx(0.25 ** -0.5 * 3)
    assert case1_pfa(tau, [1, 2, 9], 3) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("alpha", [1e-2, 1e-4, 1e-6])
def test_case1_round_trip(alpha, gen):
    for _ in range(50):
        crp = gen.exponential(1.0, int(gen.integers(2, 40)))
        j = int(gen.integers(1, crp.size + 1))
        tau = case1_threshold(alpha, crp, j)
        assert case1_pfa(tau, crp, j) == pytest.approx(alpha, rel=1e-12)


# --- Case 2 / Case 3 ---------------------------------------------------------

def test_case2_example():
    p = case2_pfa(1, [1, 2, 3], InterferencePrior.uniform(3))
    assert p == pytest.approx(CASE2_EXAMPLE, rel=1e-14)
    assert case2_pfa(0, [1, 2, 3], InterferencePrior.uniform(3)) == 1.0


def test_case2_point_mass_reduces_to_case1():
    crp = [0.7, 1.3, 2.2, 9.0]
    for j in range(1, 5):
        pm = InterferencePrior.point_mass(4, j)
        for tau in (0.1, 1.0, 10.0):
            assert case2_pfa(tau, crp, pm) == pytest.approx(case1_pfa(tau, crp, j), rel=1e-12)


def test_case3_examples():
    crp = [1, 2, 3]
    assert case3_pfa(6, crp, InterferencePrior.uniform(3, absence=1.0)) == pytest.approx(0.125, rel=1e-14)
    assert case3_pfa(1, crp, InterferencePrior.uniform(3, absence=0.0)) == pytest.approx(CASE2_EXAMPLE, rel=1e-14)
    assert case3_pfa(0, crp, InterferencePrior.uniform(3, absence=0.3)) == 1.0


def test_case3_hand_value():
    # pi_0 = 1/2, remaining mass uniform over 3 cells, tau = 1
    num = Fraction(1, 2) * 2 / Fraction(7) ** 3 + Fraction(1, 6) * (
        Fraction(1, 1) / 6**2 + Fraction(1, 2) / 5**2 + Fraction(1, 3) / 4**2)
    den = Fraction(1, 2) * 2 / Fraction(6) ** 3 + Fraction(1, 6) * (
        Fraction(1, 1) / 5**2 + Fraction(1, 2) / 4**2 + Fraction(1, 3) / 3**2)
    got = case3_pfa(1, [1, 2, 3], InterferencePrior.uniform(3, absence=0.5))
    assert got == pytest.approx(float(num / den), rel=1e-14)


def test_mixture_errors():
    with pytest.raises(DomainError):
        case2_pfa(1, [1, 0, 2], InterferencePrior.uniform(3))
    with pytest.raises(ParameterError):
        case2_pfa(1, [1, 2, 3], InterferencePrior.uniform(4))
    with pytest.raises(ParameterError):
        case2_pfa(1, [1, 2, 3], InterferencePrior.uniform(3, 0.5))
    with pytest.raises(ParameterError):
        case3_pfa(1, [1, 2, 3], InterferencePrior.uniform(3))


def test_large_window_does_not_underflow():
    crp = np.full(2000, 1e3)
    p = case2_pfa(1e3, crp, InterferencePrior.uniform(2000))
    assert 0 < p < 1
    # linear-domain terms are (2e6)^-1999, far below the smallest double
    assert p == pytest.approx(case1_pfa(1e3, crp, 1), rel=1e-12)


def test_dominant_interferer_keeps_excluded_sums_accurate():
    crp = np.array([1.0, 2.0, 1e17])
    s = det.excluded_sums(crp)
    assert s[2] == 3.0


# --- numerical threshold -----------------------------------------------------

def test_bayes_threshold_example():
    prior = InterferencePrior.uniform(3)
    tau = bayes_threshold(CASE2_EXAMPLE, lambda t: case2_pfa(t, [1, 2, 3], prior))
    assert tau == pytest.approx(1.0, rel=1e-8)


def test_bayes_threshold_near_one():
    tau = bayes_threshold(1 - 1e-9, lambda t: case2_pfa(t, [1, 2, 3], InterferencePrior.uniform(3)))
    assert 0 < tau < 1e-8


@pytest.mark.parametrize("alpha", [1e-2, 1e-4])
def test_bayes_threshold_round_trip(alpha, gen):
    for _ in range(30):
        n = int(gen.integers(2, 33))
        crp = gen.exponential(1.0, n)
        prior = InterferencePrior(gen.dirichlet(np.ones(n)))
        fn = lambda t: case2_pfa(t, crp, prior)  # noqa: E731
        tau = bayes_threshold(alpha, fn, scale=crp.sum())
        assert fn(tau) == pytest.approx(alpha, rel=1e-9)


def test_bayes_threshold_errors():
    with pytest.raises(ParameterError):
        bayes_threshold(0.0, lambda t: 1.0)
    with pytest.raises(NumericalError):
        bayes_threshold(0.5, lambda t: 1.0)


# --- decisions ----------------------------------------------------------------

def test_decide_case1_examples():
    spec = DetectorSpec("case1", 0.25, interferer_index=3)
    d = decide(4, spec, [1, 2, 50])
    assert d.target_declared and d.threshold == 3.0
    assert not decide(3, spec, [1, 2, 50]).target_declared


def test_decide_case2_example():
    spec = DetectorSpec("case2", 0.5, prior=InterferencePrior.uniform(3))
    d = decide(1, spec, [1, 2, 3])
    assert d.pfa_at_cut == pytest.approx(CASE2_EXAMPLE)
    assert not d.target_declared and d.threshold is None


def test_decide_tie_is_no_detection():
    prior = InterferencePrior.uniform(3)
    alpha = case2_pfa(2.0, [1, 2, 3], prior)
    assert not decide(2.0, DetectorSpec("case2", alpha, prior=prior), [1, 2, 3]).target_declared


def test_decide_checks_window():
    with pytest.raises(ParameterError):
        decide(1, DetectorSpec("case1", 0.1, interferer_index=5), [1, 2, 3])


# --- properties ----------------------------------------------------------------

cells = st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=24)


@st.composite
def instances(draw, variant=None):
    z = np.array(draw(cells))
    n = z.size
    v = variant or draw(st.sampled_from(list(Variant)))
    tau = draw(st.floats(0.0, 5.0)) * z.sum()
    if v is Variant.CA:
        spec = DetectorSpec(v, 0.01)
    elif v is Variant.CASE1:
        spec = DetectorSpec(v, 0.01, interferer_index=draw(st.integers(1, n)))
    else:
        k = n + (v is Variant.CASE3)
        raw = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)))
        assume(raw.sum() > 1e-3)
        w = raw / raw.sum()
        w[-1] = max(0.0, 1.0 - w[:-1].sum())
        assume(abs(w.sum() - 1) < 1e-12)
        spec = DetectorSpec(v, 0.01, prior=InterferencePrior(w, v is Variant.CASE3))
    return spec, ClutterRangeProfile(z), tau


@settings(max_examples=300, deadline=None)
@given(inst=instances(), c=st.sampled_from([1e-3, 0.37, 1.0, 1e3]))
def test_joint_scale_invariance(inst, c):
    spec, crp, tau = inst
    a = det.variant_pfa(tau, spec, crp)
    b = det.variant_pfa(c * tau, spec, crp.scaled(c))
    assert b == pytest.approx(a, rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(inst=instances(), frac=st.floats(0.01, 0.99))
def test_strictly_decreasing(inst, frac):
    spec, crp, tau = inst
    assume(tau > 0)
    s = crp.cells.sum()
    lo, hi = frac * tau, tau
    assume(hi - lo > 1e-6 * s)
    assert det.variant_pfa(lo, spec, crp) > det.variant_pfa(hi, spec, crp)
    assert det.variant_pfa(0.0, spec, crp) == 1.0
    assert det.variant_pfa(1e12 * s, spec, crp) < 1e-11


@settings(max_examples=300, deadline=None)
@given(inst=instances(Variant.CASE2), j=st.integers(1, 24), p0=st.floats(0.0, 1.0))
def test_reduction_chain(inst, j, p0):
    spec, crp, tau = inst
    n = crp.n
    w = spec.prior.weights
    assert case3_pfa(tau, crp, InterferencePrior(np.concatenate(([0.0], w)), True)) == pytest.approx(
        case2_pfa(tau, crp, spec.prior), rel=1e-12)
    j = min(j, n)
    assert case2_pfa(tau, crp, InterferencePrior.point_mass(n, j)) == pytest.approx(
        case1_pfa(tau, crp, j), rel=1e-12)
    assert case3_pfa(tau, crp, InterferencePrior.uniform(n, 1.0)) == pytest.approx(
        ca_cfar_pfa(tau, crp), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(inst=instances(), alpha=st.sampled_from([1e-1, 1e-2, 1e-3]), ratio=st.floats(0.0, 3.0))
def test_decision_threshold_equivalence(inst, alpha, ratio):
    spec, crp, _ = inst
    spec = DetectorSpec(spec.variant, alpha, spec.interferer_index, spec.prior)
    tau = det.threshold(alpha, spec, crp)
    z0 = ratio * tau
    assume(abs(z0 - tau) > 1e-8 * tau)
    assert decide(z0, spec, crp).target_declared == (z0 > tau)


@settings(max_examples=300, deadline=None)
@given(inst=instances())
def test_log_domain_matches_linear_domain(inst):
    spec, crp, tau = inst
    assume(crp.n <= 8)
    assert det.variant_pfa(tau, spec, crp) == pytest.approx(linear_pfa(tau, spec, crp), rel=1e-10)
