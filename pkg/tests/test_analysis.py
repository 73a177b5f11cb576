import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hankel_spectra import kernel as K
from hankel_spectra.analysis import (
    InsufficientDataError, fit_power, fit_widom, hs_continuous, hs_crosscheck,
    interp_bound_check, lgamma, m_alpha, spectrum_functionals, v_alpha, widom_target,
)
from hankel_spectra.hankel_op import build_section
from hankel_spectra.spectra import SingularSpectrum, dense_svd

# 40-digit values from mpmath, frozen here so the suite does not depend on it
LGAMMA_ORACLE = {
    0.001: "6.907178885383853682512344668077",
    0.125: "2.0194183575537963453202905211671",
    0.5: "0.57236494292470008707171367567653",
    2.5: "0.2846828704729191596324946696827",
    7.0: "6.5792512120101009950601782929039",
    30.0: "71.257038967168009010074407042571",
}
V_ORACLE = {
    0.1: "2.2835463955876160899318632442221",
    0.25: "1.6015928509842094668814875280702",
    0.5: "1.0",
    1.0: "0.5",
    1.5: "0.30906069273401469141257543179472",
    2.0: "0.22173529214452885135288134033863",
    3.0: "0.15798634679788315431504583643284",
    4.0: "0.15537982072771002744925188623401",
}


def _spectrum(s, converged=None):
    s = np.asarray(s, dtype=float)
    conv = np.ones(s.size, dtype=bool) if converged is None else np.asarray(converged)
    return SingularSpectrum(s, s.size, np.zeros(s.size), conv)


# functionals ---------------------------------------------------------------

def test_functionals_small_example():
    f = spectrum_functionals(_spectrum([1.0, 1.0, 0.0]), 1.0, converged_only=False)
    assert f.schatten_sum == 2.0
    assert f.weak_norm == 2.0 and f.argmax == 2


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_functionals_rank_one(p):
    sp = dense_svd(build_section(K.geometric(), 64))
    f = spectrum_functionals(sp, p)
    assert f.schatten_sum == pytest.approx((4 / 3) ** p, rel=1e-12)
    assert f.weak_norm == pytest.approx(4 / 3, rel=1e-12)
    assert f.argmax == 1


def test_functionals_use_converged_prefix():
    sp = _spectrum([3.0, 2.0, 1.0, 0.9], converged=[True, True, False, True])
    f = spectrum_functionals(sp, 1.0)
    assert f.count == 2
    assert f.at_edge
    with pytest.raises(InsufficientDataError):
        spectrum_functionals(_spectrum([1.0], converged=[False]), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1e3), min_size=1, max_size=60), st.floats(0.3, 4.0))
def test_weak_chain(values, p):
    s = np.sort(np.array(values))[::-1]
    f = spectrum_functionals(_spectrum(s), p)
    n = np.arange(1, s.size + 1)
    assert np.all(s <= f.weak_norm * n ** (-1.0 / p) * (1 + 1e-12))


# Hilbert-Schmidt -----------------------------------------------------------

@pytest.mark.parametrize("kern", [K.hilbert(), K.log_model(1.0), K.widom(2.0), K.lacunary(0.8),
                                  K.random_decaying(1), K.geometric(),
                                  K.modulate([(np.exp(0.3j), K.log_model(0.5))])],
                         ids=lambda k: k.name)
@pytest.mark.parametrize("N", [16, 64, 256, 1024])
def test_hs_identity(kern, N):
    hs = hs_crosscheck(kern, N)
    assert hs.rel_gap <= 1e-13
    assert hs.limit_proxy >= hs.weighted_sum


def test_hs_geometric_limit():
    assert hs_crosscheck(K.geometric(), 64).weighted_sum == pytest.approx(16 / 9, rel=1e-14)


def test_hs_continuous_exponential():
    assert abs(hs_continuous(K.exponential()) - 0.25) <= 1e-8


# constants -----------------------------------------------------------------

@pytest.mark.parametrize("x", sorted(LGAMMA_ORACLE))
def test_lgamma_oracle(x):
    assert lgamma(x) == pytest.approx(float(LGAMMA_ORACLE[x]), rel=1e-13)


def test_lgamma_matches_stdlib():
    for x in np.linspace(0.01, 50, 200):
        assert lgamma(float(x)) == pytest.approx(math.lgamma(float(x)), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("alpha", sorted(V_ORACLE))
def test_v_alpha_oracle(alpha):
    assert v_alpha(alpha) == pytest.approx(float(V_ORACLE[alpha]), rel=1e-12)


def test_v_alpha_examples():
    assert v_alpha(0.5) == pytest.approx(1.0, rel=1e-14)
    assert v_alpha(1.0) == pytest.approx(0.5, rel=1e-14)
    assert v_alpha(2.0) == pytest.approx(0.2217, abs=1e-4)


def test_v_alpha_positive_and_continuous():
    a = np.linspace(0.1, 4.0, 400)
    v = np.array([v_alpha(float(x)) for x in a])
    assert np.all(np.isfinite(v)) and np.all(v > 0)
    assert np.max(np.abs(np.diff(v)) / v[1:]) < 0.03


def test_m_alpha():
    assert m_alpha(0.49) == 0
    assert m_alpha(0.5) == 1
    assert m_alpha(1.0) == 2
    assert m_alpha(2.0) == 3
    with pytest.raises(ValueError):
        m_alpha(0.0)
    with pytest.raises(ValueError):
        v_alpha(-1.0)


# fits ----------------------------------------------------------------------

def test_fit_power_exact():
    n = np.arange(1, 200)
    fit = fit_power(_spectrum(0.5 / n), alpha=1.0)
    assert fit.alpha_hat == pytest.approx(1.0, abs=1e-10)
    assert fit.v_hat == pytest.approx(0.5, abs=1e-10)
    assert fit.median_scaled == pytest.approx(0.5, rel=1e-12)
    assert fit.count == 91


def test_fit_power_noise():
    rng = np.random.default_rng(11)
    n = np.arange(1, 200)
    errs = []
    for _ in range(200):
        s = 0.5 * n ** -1.0 * (1 + 0.01 * rng.standard_normal(n.size))
        errs.append(abs(fit_power(_spectrum(np.sort(s)[::-1])).alpha_hat - 1.0))
    assert max(errs) <= 0.02


@settings(max_examples=30, deadline=None)
@given(c=st.floats(1e-3, 1e3), alpha=st.floats(0.3, 3.0))
def test_fit_power_scale_equivariant(c, alpha):
    n = np.arange(1, 150)
    s = 0.7 * n ** -alpha * (1 + 0.1 * np.sin(n))
    a = fit_power(_spectrum(s), window=(10, 140))
    b = fit_power(_spectrum(c * s), window=(10, 140))
    assert b.alpha_hat == pytest.approx(a.alpha_hat, abs=1e-12)
    assert b.v_hat == pytest.approx(c * a.v_hat, rel=1e-12)


def test_fit_power_insufficient():
    with pytest.raises(InsufficientDataError):
        fit_power(_spectrum(1.0 / np.arange(1, 36)))
    conv = np.zeros(200, dtype=bool)
    with pytest.raises(InsufficientDataError):
        fit_power(_spectrum(1.0 / np.arange(1, 201), conv))


def test_widom_targets():
    assert widom_target(2.0) == pytest.approx(-2 * math.pi, rel=1e-15)
    assert widom_target(1.5) == pytest.approx(-5.441, abs=1e-3)


def test_fit_widom_synthetic():
    n = np.arange(1, 40)
    fit = fit_widom(_spectrum(np.exp(-2 * math.pi * np.sqrt(n)) * 10), 2.0, min_value=0.0)
    assert fit.status == "ok"
    assert fit.slope == pytest.approx(-2 * math.pi, abs=1e-10)
    assert fit.rel_deviation <= 1e-10


def test_fit_widom_inconclusive():
    n = np.arange(1, 40)
    fit = fit_widom(_spectrum(np.exp(-4 * math.pi * np.sqrt(n))), 2.0)
    # only n = 1 lies above 1e-7
    assert fit.status == "inconclusive"
    assert fit.slope is None
    with pytest.raises(ValueError):
        fit_widom(_spectrum([1.0]), 1.0)


# interpolation inequality --------------------------------------------------

def test_interp_p2_is_hs():
    chk = interp_bound_check(K.log_model(1.0), 256, 2.0)
    hs = hs_crosscheck(K.log_model(1.0), 256)
    assert chk.lhs == pytest.approx(hs.weighted_sum, rel=1e-12)
    assert chk.rhs == pytest.approx(hs.limit_proxy, rel=1e-14)
    assert chk.slack >= 0


def test_interp_log_model_p3():
    assert interp_bound_check(K.log_model(1.0), 1024, 3.0).slack >= 0


def test_interp_random_p4():
    for seed in range(20):
        assert interp_bound_check(K.random_decaying(seed), 512, 4.0).slack >= 0


@pytest.mark.parametrize("kern", [K.hilbert(), K.log_model(0.5), K.widom(2.0), K.lacunary(0.8),
                                  K.geometric(), K.delta(3), K.modulate([(-1, K.hilbert())])],
                         ids=lambda k: k.name)
@pytest.mark.parametrize("p", [2.0, 2.5, 6.0])
def test_interp_catalog(kern, p):
    assert interp_bound_check(kern, 256, p).holds


def test_interp_guards():
    with pytest.raises(ValueError):
        interp_bound_check(K.hilbert(), 64, 1.5)
    with pytest.raises(ValueError):
        interp_bound_check(K.hilbert(), 8192, 2.0)
