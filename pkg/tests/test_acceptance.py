"""End-to-end acceptance criteria; each test records one PASS/FAIL line."""

import time

import numpy as np

import draws
import oracles as o
from diffopt import bounds, zoo
from diffopt.bounds import (
    c_constants,
    integration_error_bound,
    kappa_r,
    quadratic_exact,
    quadratic_gibbs_sampler,
    stein_factors,
    step_threshold,
    suboptimality_quadratic,
)
from diffopt.diffusion import check_stationarity_fd, drift_from_invariant, gibbs_target
from diffopt.sampler import ChainConfig, empirical_moment, run_gd, run_replicas
from diffopt.verify import VerifyConfig, fit_dissipativity, simulate_coupling, uniform_dissipativity_rate

X0_FIG1 = (90.0, 110.0)


def test_criterion_01_figure_one(record_criterion):
    t0 = time.perf_counter()
    cfg = ChainConfig(eta=0.1, steps=10_000, x0=X0_FIG1, seed=0)
    lang = zoo.langevin_sublinear(10.0, 2, 1.0)
    designed = zoo.sublinear_example(10.0, 2, 1.0)
    lt = run_replicas(lang.diffusion, lang.objective, cfg, 20)
    dt = run_replicas(designed.diffusion, designed.objective, ChainConfig(0.1, 200, X0_FIG1, seed=0), 20)
    gd = run_gd(designed.objective, 0.1, 10_000, X0_FIG1)
    elapsed = time.perf_counter() - t0
    n_div = sum(t.diverged for t in lt)
    hits = [t.first_passage(1.0) for t in dt]
    n_hit = sum(h is not None and h <= 50 for h in hits)
    gd_fp = gd.first_passage(1.0)
    a = n_div == 20
    b = n_hit >= 18
    c = gd_fp is None or gd_fp > 1000
    ok = a and b and c and elapsed < 10
    record_criterion(1, ok, f"(a) langevin diverged {n_div}/20 [{'ok' if a else 'no'}]; "
                            f"(b) diffusion hit <=50 in {n_hit}/20, median {int(np.median([h or 10**9 for h in hits]))} "
                            f"[{'ok' if b else 'no'}]; (c) gd first passage {gd_fp} [{'ok' if c else 'no'}]; "
                            f"{elapsed:.1f}s")
    assert ok


def test_criterion_02_sublinear_constants(record_criterion):
    t0 = time.perf_counter()
    cfg = VerifyConfig(n_pairs=100_000, seed=0)
    spec = zoo.sublinear_example(10.0, 2, 1.0).diffusion
    dc = fit_dissipativity(spec, cfg)
    k = uniform_dissipativity_rate(spec, 2, cfg).k
    elapsed = time.perf_counter() - t0
    a_ok = 7.125 <= dc.alpha <= 7.875
    b_ok = 1.9 <= dc.beta <= 2.1
    k_ok = abs(k - 7.5) <= 0.1 * 7.5
    ok = a_ok and b_ok and k_ok and elapsed < 30
    record_criterion(2, ok, f"alpha={dc.alpha:.4f} [{'ok' if a_ok else 'outside [7.125, 7.875]'}], "
                            f"beta={dc.beta:.4f} [{'ok' if b_ok else 'no'}], k={k:.4f} "
                            f"[{'ok' if k_ok else 'no'}], {elapsed:.1f}s")
    assert ok


def _ou_bound(eta, M):
    e = zoo.ou_baseline(2, 1.0)
    C = e.analytic_constants
    g, dc = C["growth"], C["dissipativity"]
    s = stein_factors(C["rate"], g, dc, C["smoothness"], C["coefficients"], n=1)
    c = c_constants(s, g, 1, 6)
    kap = kappa_r(6, dc.alpha, dc.beta, g.lambda_a, g.r)
    return integration_error_bound(*c, eta, M, 1, kap, 0.0)


def test_criterion_03_ou_integration_error(record_criterion):
    t0 = time.perf_counter()
    e = zoo.ou_baseline(2, 1.0)
    M, R = 10**6, 20
    parts, ok = [], True
    for i, eta in enumerate((0.1, 0.05, 0.025)):
        traces = run_replicas(e.diffusion, e.objective, ChainConfig(eta, M, (0.0, 0.0), seed=100 + i, keep_f=False),
                              R)
        means = np.array([t.mean_f for t in traces])
        se = means.std(ddof=1) / np.sqrt(R)
        err = means.mean() - 1.0
        bias = eta / (2.0 - eta)
        bound = _ou_bound(eta, M)
        good = abs(err - bias) <= 3 * se and abs(err) <= bound
        ok &= good
        parts.append(f"eta={eta}: err={err:.5f} bias={bias:.5f} se={se:.5f} bound={bound:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    record_criterion(3, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_04_coupling(record_criterion):
    eta = 1e-3
    ou = zoo.ou_baseline(2).diffusion
    x, y = np.array([1.0, 2.0]), np.array([-0.5, 0.0])
    res = simulate_coupling(ou, x, y, 1.0, reps=5, eta=eta, seed=1)
    m = np.arange(res.times.size)
    dev = np.max(np.abs(res.mean_distance / ((1 - eta) ** m * np.linalg.norm(x - y)) - 1))
    sub = zoo.sublinear_example(10.0, 2, 1.0)
    alpha = sub.analytic_constants["dissipativity"].alpha
    cres = simulate_coupling(sub.diffusion, [1.0, 0.0], [0.0, 0.0], 2.0 / alpha, reps=200, eta=eta, seed=2)
    ok = dev <= 1e-12 and cres.k_hat >= 0.9 * alpha
    record_criterion(4, ok, f"OU max rel deviation {dev:.2e}; sublinear k_hat={cres.k_hat:.3f} vs 0.9 alpha="
                            f"{0.9 * alpha:.3f}")
    assert ok


def test_criterion_05_quadratic_suboptimality(record_criterion):
    worst, ok = 0.0, True
    for k in (1, 2, 3):
        for d in (2, 10):
            for gamma in (1.0, 10.0):
                mean, se = quadratic_gibbs_sampler(gamma, 1.0 / k, d, A=np.eye(d), b=np.zeros(d),
                                                   seed=10 * k + d, nsamples=10**6)
                exact = quadratic_exact(gamma, k, d)
                z = abs(mean - exact) / se
                worst = max(worst, z)
                ok &= z <= 3 and mean <= suboptimality_quadratic(gamma, k, d) + 3 * se
    ident = max(abs(suboptimality_quadratic(g, 1, d) - d / (2 * g)) / (d / (2 * g))
                for g in (0.5, 1.0, 10.0) for d in (1, 2, 10))
    ok &= ident <= 1e-12
    record_criterion(5, ok, f"max |MC - exact| / SE = {worst:.2f}; k=1 identity rel err {ident:.1e}")
    assert ok


def test_criterion_06_transcription_oracle(record_criterion):
    n = 1000
    g = np.random.default_rng(2024)
    worst = {}

    def track(name, ours, ref):
        worst[name] = max(worst.get(name, 0.0), float(o.rel_err(ours, ref)))

    for _ in range(n):
        p = draws.growth_diss(g)
        r, nn, al, be, la, lb, ls = (p[k] for k in ("r", "n", "alpha", "beta", "lam_a", "lam_b", "lam_s"))
        ne = 2 * int(g.integers(2, 5))
        track("beta_rn", bounds.beta_rn(al, be, la, r, nn), o.beta_rn(al, be, la, r, nn))
        track("kappa_r", kappa_r(ne, al, be, la, r), o.kappa(ne, al, be, la, r))
        track("step_threshold", step_threshold(al, lb, ls, ne), o.threshold(al, lb, ls, ne))
        z = g.uniform(0.01, 10, 4)
        for ours, ref in zip(c_constants(z, (lb, ls), nn, 2 * nn + 4), o.c123(z, lb, ls, nn, 2 * nn + 4)):
            track("c_1..c_3", ours, ref)

        c = draws.coefficients(g)
        tab = bounds.semigroup_constants(c["mu_b"], c["mu_s"], c["phi_s"], nn)
        cc = (c["mu_b"], c["mu_s"], c["phi_s"])
        for key in bounds.REQUIRED_GAMMA:
            track("gamma/theta", tab.g(*key), o.gam(cc, *key))
        for key in bounds.REQUIRED_THETA:
            track("gamma/theta", tab.t(*key), o.the(cc, *key))

        d = int(g.integers(1, 20))
        theta = float(g.uniform(0.1, 1.0))
        gamma = float(g.uniform(d, 100 * d))
        a2, b2 = g.uniform(0.5, 5, 2)
        mu2 = float(g.uniform(1, 10)) * a2 / b2
        track("suboptimality", bounds.suboptimality_generalized_gibbs(gamma, theta, d, a2, b2, mu2),
              o.subopt_gibbs(gamma, theta, d, a2, b2, mu2))
        C = float(g.uniform(0.1, 100))
        track("suboptimality", bounds.suboptimality_entropy_form(C, theta, d, a2, b2),
              o.subopt_entropy(C, theta, d, a2, b2))

        sp = draws.stein_draw(g)
        s = draws.package_stein(sp)
        ref, _ = o.zetas(sp["A"], sp["k"], sp["alpha"], sp["beta"], sp["lam_a"], sp["n"], sp["r"], sp["mu_t"],
                         sp["pi_f"], sp["mu_b"], sp["mu_s"], sp["phi_s"], sp["pi_s"], sp["pi_si"])
        for i in (1, 2, 3, 4):
            track("zeta_1..zeta_4", s.zeta[i], ref[i - 1])
        t = float(g.uniform(0, 5))
        track("omega_r", bounds.omega_r(t, s.inputs["rate"], sp["lam_a"], sp["beta"], sp["n"], sp["r"],
                                        s.alpha_tilde),
              o.omega(t, sp["A"], sp["k"], sp["lam_a"], sp["beta"], sp["n"], sp["r"], s.alpha_tilde))
    ok = max(worst.values()) < 1e-10
    record_criterion(6, ok, f"{n} draws; worst rel err " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


def _sublinear_stein(gamma):
    C = zoo.sublinear_example(10.0, 2, gamma).analytic_constants
    return stein_factors(C["rate"], C["growth"], C["dissipativity"], C["smoothness"], C["coefficients_envelope"],
                         n=1)


def test_criterion_07_stein_scaling(record_criterion):
    S = {g: _sublinear_stein(g) for g in (1.0, 4.0, 16.0)}
    ok, parts = True, []
    for g in (4.0, 16.0):
        for i in (2, 3, 4):
            ratio = S[g].zeta[i] / S[g / 4].zeta[i]
            target = 2.0 ** (i - 1)
            good = target / 2 <= ratio <= 2 * target
            ok &= good
            parts.append(f"zeta_{i}({g:g})/zeta_{i}({g / 4:g})={ratio:.3g} vs {target:g}")
    record_criterion(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_moment_bounds(record_criterion):
    parts, ok = [], True
    for name, entry in (("ou", zoo.ou_baseline(2)), ("sublinear", zoo.sublinear_example(10.0, 2, 1.0))):
        C = entry.analytic_constants
        g, dc = C["growth"], C["dissipativity"]
        for ne in (4, 6):
            thr = step_threshold(dc.alpha, g.lambda_b, g.lambda_sigma, ne)
            x0 = (1.0, 1.0)
            traces = run_replicas(entry.diffusion, entry.objective,
                                  ChainConfig(0.5 * thr, 10**5, x0, seed=ne, keep_f=False, moment_orders=(ne,)), 20)
            limit = kappa_r(ne, dc.alpha, dc.beta, g.lambda_a, g.r) + np.linalg.norm(x0) ** ne
            emp = max(empirical_moment(t, ne) for t in traces)
            viol = sum(empirical_moment(t, ne) > limit for t in traces)
            ok &= viol == 0
            parts.append(f"{name} n_e={ne}: max {emp:.3g} <= {limit:.3g} ({viol} violations)")
    record_criterion(8, ok, "; ".join(parts))
    assert ok


def test_criterion_09_drift_constructor(record_criterion):
    rng = np.random.default_rng(9)
    entries = {
        "ou": zoo.ou_baseline(2),
        "sublinear": zoo.sublinear_example(10.0, 2, 1.0),
        "pseudo_huber": zoo.regularized_loss_example("student_t", zoo.make_dataset(50, 2, 0), "pseudo_huber", 1.0),
    }
    worst = {}
    for name, e in entries.items():
        spec = e.diffusion
        pts = rng.normal(0.0, 2.0, (100, 2))
        worst[name] = max(check_stationarity_fd(spec, e.target, x, 1e-4) for x in pts)
    obj = entries["sublinear"].objective
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    red = 0.0
    for gamma in (0.5, 1.0, 4.0):
        b = drift_from_invariant(gibbs_target(obj, gamma), lambda y: A / gamma, div_m=lambda y: np.zeros(2))
        for x in rng.normal(0.0, 3.0, (100, 2)):
            ref = -0.5 * A @ obj.gradient(x)
            red = max(red, float(np.max(np.abs(b(x) - ref)) / max(1.0, float(np.max(np.abs(ref))))))
    ok = max(worst.values()) < 1e-6 and red <= 1e-12
    record_criterion(9, ok, ", ".join(f"{k} residual {v:.1e}" for k, v in worst.items())
                     + f"; constant-covariance reduction error {red:.1e}")
    assert ok


def _schedule_total(eps):
    gamma = 1.0 / eps
    C = zoo.sublinear_example(10.0, 2, gamma).analytic_constants
    g, dc = C["growth"], C["dissipativity"]
    s = stein_factors(C["rate"], g, dc, C["smoothness"], C["coefficients_envelope"], n=1)
    c = c_constants(s, g, 1, 6)
    kap = kappa_r(6, dc.alpha, dc.beta, g.lambda_a, g.r)
    x0m = float(np.linalg.norm(X0_FIG1)) ** 6
    sub = bounds.suboptimality_generalized_gibbs(gamma, 1.0, 2, dc.alpha, dc.beta, C["smoothness"].mu[2])
    return bounds.assemble_corollary(c, eps**1.5, int(round(eps**-2.5)), kap, x0m, sub).total


def test_criterion_10_schedule(record_criterion):
    T = {eps: _schedule_total(eps) for eps in (0.1, 0.05, 0.025)}
    ratios = [T[e / 2] / T[e] for e in (0.1, 0.05)]
    ok = all(0.3 <= r <= 0.7 for r in ratios)
    record_criterion(10, ok, "total(eps/2)/total(eps) = " + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok
