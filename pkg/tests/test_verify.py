import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffopt import zoo
from diffopt.diffusion import DiffusionSpec
from diffopt.errors import NoDecay, NotDissipative, NotUniform, ParamOutOfRange
from diffopt.objective import ObjectiveSpec, sample_pairs
from diffopt.verify import (
    DistantProfile,
    RateModel,
    VerifyConfig,
    distant_profile,
    fit_dissipativity,
    fit_growth,
    friendly_distant,
    radial_samples,
    rate_from_distant,
    simulate_coupling,
    uniform_dissipativity_rate,
    uniform_lhs,
    uniform_lhs_reduced,
)

CFG = VerifyConfig(n_samples=5000, n_pairs=20_000, seed=1)


def expanding(d=2):
    return DiffusionSpec(d, lambda x: np.asarray(x, float).copy(), lambda x: np.sqrt(2.0) * np.eye(d))


def test_radial_samples_span_range():
    X = radial_samples(3, CFG)
    r = np.linalg.norm(X, axis=1)
    assert X.shape == (CFG.n_samples, 3)
    assert r.max() <= CFG.r_max * (1 + 1e-12)
    assert r.max() > CFG.r_max / 10


def test_ou_growth_constants():
    g = fit_growth(zoo.ou_baseline(2).diffusion, CFG)
    assert g.r == 1
    assert g.lambda_b == pytest.approx(4.0, rel=0.01)
    assert g.lambda_sigma == pytest.approx(8.0, rel=1e-9)
    assert g.lambda_a == pytest.approx(8.0, rel=1e-9)


def test_sublinear_growth_is_quadratic_covariance():
    g = fit_growth(zoo.sublinear_example().diffusion, CFG)
    assert g.r == 2
    assert g.lambda_a == pytest.approx(4.0, rel=0.05)


def test_ou_dissipativity():
    dc = fit_dissipativity(zoo.ou_baseline(2).diffusion, CFG)
    assert dc.alpha == pytest.approx(2.0, rel=0.05)
    assert dc.beta == pytest.approx(4.0, rel=0.05)


def test_sublinear_dissipativity_beta():
    dc = fit_dissipativity(zoo.sublinear_example().diffusion, CFG)
    assert dc.beta == pytest.approx(2.0, rel=0.05)
    assert dc.alpha > 0


def test_langevin_on_sublinear_not_dissipative():
    with pytest.raises(NotDissipative):
        fit_dissipativity(zoo.langevin_sublinear().diffusion, CFG)


def test_ou_uniform_rate():
    rate = uniform_dissipativity_rate(zoo.ou_baseline(2).diffusion, 2, CFG)
    assert rate.k == pytest.approx(2.0, rel=1e-9)
    assert rate.amplitude == 1.0


def test_expanding_drift_not_uniform():
    with pytest.raises(NotUniform):
        uniform_dissipativity_rate(expanding(), 2, CFG)


def test_uniform_rate_rejects_bad_p():
    with pytest.raises(ParamOutOfRange):
        uniform_dissipativity_rate(zoo.ou_baseline(2).diffusion, 3, CFG)


def test_constant_sigma_reduced_lhs_agrees():
    spec = zoo.sublinear_example().diffusion
    const = DiffusionSpec(2, spec.b, lambda x: np.sqrt(2.0) * np.eye(2))
    X, Y = sample_pairs(CFG.pairs(), 2)
    X, Y = X[:2000], Y[:2000]
    np.testing.assert_allclose(uniform_lhs(const, X, Y, 2), uniform_lhs_reduced(const, X, Y), rtol=1e-12, atol=1e-12)


def test_lhs_p1_below_p2():
    spec = zoo.sublinear_example().diffusion
    X, Y = sample_pairs(CFG.pairs(), 2)
    X, Y = X[:2000], Y[:2000]
    assert np.all(uniform_lhs(spec, X, Y, 1) <= uniform_lhs(spec, X, Y, 2) + 1e-12)


def test_rate_from_distant_no_radius():
    rate = rate_from_distant(DistantProfile(K=1.0, L=0.0, R=0.0, s=1.0))
    assert rate.k == pytest.approx(0.25, rel=1e-14)
    assert rate.amplitude == pytest.approx(2.0, rel=1e-14)


def test_rate_from_distant_first_case_when_l_zero():
    R, K, s = 3.0, 2.0, 0.5
    rate = rate_from_distant(DistantProfile(K=K, L=0.0, R=R, s=s))
    ratio = (np.e - 1) / 2 * R**2 + np.e * np.sqrt(8 / K) * R + 4 / K
    assert rate.k == pytest.approx(s**2 / ratio, rel=1e-14)
    assert rate.amplitude == 2.0


def test_rate_from_distant_second_case():
    # L R^2 = 9 with L = 1, R = 3, K = 2, s = 1, transcribed independently
    R, L, K = 3.0, 1.0, 2.0
    e98 = np.exp(9.0 / 8.0)
    ratio = 8 * np.sqrt(2 * np.pi) * e98 * (1 / L + 1 / K) / (R * np.sqrt(L)) + 32 / (R**2 * K**2)
    rate = rate_from_distant(DistantProfile(K=K, L=L, R=R, s=1.0))
    assert rate.k == pytest.approx(1 / ratio, rel=1e-14)
    assert rate.k == pytest.approx(0.03147353738552326, rel=1e-13)
    assert rate.amplitude == pytest.approx(2 * e98, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.0, 5), st.floats(0.0, 5), st.floats(0.1, 3))
def test_rate_from_distant_monotone(K, L, R, s):
    base = rate_from_distant(DistantProfile(K, L, R, s)).k
    assert rate_from_distant(DistantProfile(2 * K, L, R, s)).k >= base * (1 - 1e-12)
    if L * (R + 0.5) ** 2 <= 8:
        # within the small-radius case the rate degrades with R
        assert rate_from_distant(DistantProfile(K, L, R + 0.5, s)).k <= base * (1 + 1e-12)
    assert rate_from_distant(DistantProfile(K, L, R, 2 * s)).k == pytest.approx(4 * base, rel=1e-12)


def test_rate_from_distant_needs_positive_k():
    with pytest.raises(ParamOutOfRange):
        rate_from_distant(DistantProfile(0.0, 0.0, 0.0, 1.0))


def test_ou_distant_profile():
    prof = distant_profile(zoo.ou_baseline(2).diffusion, 1.0, CFG)
    # the pairwise quantity is identically -2; K is half of that level
    assert prof.K == pytest.approx(1.0, rel=1e-9)
    assert prof.L == 0.0
    assert prof.R == 0.0


def test_double_well_distant_profile():
    spec = DiffusionSpec(1, lambda x: -4 * x * (x**2 - 1), lambda x: np.sqrt(2.0) * np.eye(1))
    prof = distant_profile(spec, 1.0, VerifyConfig(n_pairs=20_000, pair_radius=3.0, seed=2))
    assert prof.R > 0 and prof.K > 0 and prof.L > 0
    assert prof.L == pytest.approx(8.0, rel=0.01)


def test_expanding_drift_no_decay():
    with pytest.raises(NoDecay):
        distant_profile(expanding(), 1.0, CFG)


def test_distant_profile_rejects_large_s():
    with pytest.raises(ParamOutOfRange):
        distant_profile(zoo.ou_baseline(2).diffusion, 2.0, CFG)


def strongly_convex(mu=3.0, d=2):
    return ObjectiveSpec(d, lambda x: 0.5 * mu * float(x @ x), grad=lambda x: mu * np.asarray(x, float))


def test_friendly_distant_strongly_convex():
    cfg = VerifyConfig(n_pairs=4000, seed=0)
    sig = lambda x: np.eye(2)
    prof, gmin = friendly_distant(strongly_convex(), sig, None, 0.5, cfg, gamma=2.0, div_m=lambda x: np.zeros(2))
    assert gmin == 0.0
    assert prof.R == 0.0
    # K_m is half the level -mu, and K = gamma K_m / s0^2
    assert prof.K == pytest.approx(2.0 * 1.5 / 0.25, rel=1e-9)
    assert prof.s == pytest.approx(0.5 / np.sqrt(2.0))


def test_friendly_distant_boundary_rejected():
    cfg = VerifyConfig(n_pairs=4000, seed=0)
    with pytest.raises(ParamOutOfRange):
        friendly_distant(strongly_convex(), lambda x: np.eye(2), None, 0.5, cfg, gamma=0.0,
                         div_m=lambda x: np.zeros(2))


def test_ou_coupling_is_deterministic_contraction():
    spec = zoo.ou_baseline(2).diffusion
    eta = 0.01
    res = simulate_coupling(spec, [1.0, 2.0], [-1.0, 0.5], 1.0, reps=3, eta=eta, seed=4)
    m = np.arange(res.times.size)
    expected = (1 - eta) ** m * np.linalg.norm([2.0, 1.5])
    np.testing.assert_allclose(res.mean_distance, expected, rtol=1e-12)
    assert res.k_hat == pytest.approx(-2 * np.log(1 - eta) / eta, rel=1e-9)
    assert res.n_diverged == 0


def test_coupling_from_equal_points_stays_zero():
    spec = zoo.sublinear_example().diffusion
    res = simulate_coupling(spec, [1.0, 1.0], [1.0, 1.0], 0.5, reps=2, eta=0.01)
    assert np.all(res.mean_distance == 0.0)


def test_identical_rates_have_zero_relative_rates():
    rate = RateModel(p=1, amplitude=2.0, k=3.0)
    t = np.linspace(0.1, 5, 7)
    assert rate.identical_rates()
    np.testing.assert_allclose(rate.rel1(t), 0.0, atol=1e-14)
    # rho_1(t) / [rho_1(0) rho_1(t)] = 1/A, divided by log(rho_1(t)/A) = -k t / 2
    np.testing.assert_allclose(rate.rel2(t), np.log(0.5) / (-1.5 * t), rtol=1e-12)


def test_distinct_rates():
    rate = RateModel(p=2, amplitude=1.0, k=2.0, amplitude2=3.0, k2=1.0)
    assert not rate.identical_rates()
    t = 2.0
    assert rate.rel1(t) == pytest.approx(np.log(3.0) + 1.0)
    assert rate.rho(t) == pytest.approx(3 * np.exp(-1.0))
