"""Empirical certification of growth, dissipativity and Wasserstein decay.

All verifiers are maxima over finite samples.  They certify the sampled
inequalities only; the constants they return are estimates, not proofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .diffusion import DiffusionSpec, fd_divergence, generator_sq_norm
from .errors import GrowthExceeded, NoDecay, NotDissipative, NotUniform, ParamOutOfRange
from .objective import DEGENERATE_PAIR, ObjectiveSpec, SampleConfig, fd_jacobian, sample_pairs

__all__ = [
    "VerifyConfig",
    "GrowthConstants",
    "DissipativityConstants",
    "DistantProfile",
    "RateModel",
    "CouplingResult",
    "radial_samples",
    "fit_growth",
    "fit_dissipativity",
    "uniform_lhs",
    "uniform_lhs_reduced",
    "uniform_dissipativity_rate",
    "tilde_sigma",
    "distant_lhs",
    "distant_profile",
    "rate_from_distant",
    "friendly_distant",
    "simulate_coupling",
]


@dataclass(frozen=True)
class VerifyConfig:
    """Sample sizes and ranges shared by the verifiers.

    ``n_samples`` single points are placed on log-spaced radii in
    ``[0, r_max]`` with random directions.  Pair-based verifiers draw
    ``n_pairs`` pairs inside the ball of radius ``pair_radius``.
    """

    n_samples: int = 20_000
    r_max: float = 1e3
    n_pairs: int = 100_000
    pair_radius: float = 10.0
    seed: int = 0
    threads: int = 1
    n_bins: int = 64
    n_alpha: int = 64

    def pairs(self) -> SampleConfig:
        return SampleConfig(n_pairs=self.n_pairs, radius=self.pair_radius, seed=self.seed, threads=self.threads)


@dataclass(frozen=True)
class GrowthConstants:
    lambda_b: float
    lambda_sigma: float
    lambda_a: float
    r: int
    source: str = "fitted"


@dataclass(frozen=True)
class DissipativityConstants:
    alpha: float
    beta: float
    frontier_alpha: tuple = ()
    frontier_beta: tuple = ()
    source: str = "fitted"


@dataclass(frozen=True)
class DistantProfile:
    K: float
    L: float
    R: float
    s: float
    bin_edges: tuple = ()
    bin_max: tuple = ()


@dataclass(frozen=True)
class RateModel:
    """Exponential Wasserstein rates ``rho_p(t) = A exp(-k t / 2)``.

    ``amplitude``/``k`` describe the ``L_1`` rate; ``amplitude2``/``k2`` the
    ``L_2`` rate, which defaults to the same curve.
    """

    p: int
    amplitude: float
    k: float
    amplitude2: Optional[float] = None
    k2: Optional[float] = None
    source: str = "fitted"

    def rho1(self, t):
        return self.amplitude * np.exp(-self.k * np.asarray(t, dtype=float) / 2.0)

    def rho2(self, t):
        A = self.amplitude if self.amplitude2 is None else self.amplitude2
        k = self.k if self.k2 is None else self.k2
        return A * np.exp(-k * np.asarray(t, dtype=float) / 2.0)

    def rho(self, t):
        return self.rho1(t) if self.p == 1 else self.rho2(t)

    def rel1(self, t):
        """``log(rho_2(t) / rho_1(t))``."""
        return np.log(self.rho2(t) / self.rho1(t))

    def rel2(self, t):
        """``log(rho_1(t) / [rho_1(0) rho_2(t)]) / log(rho_1(t) / rho_1(0))``, zero where both logs vanish."""
        t = np.asarray(t, dtype=float)
        num = np.log(self.rho1(t) / (self.rho1(0.0) * self.rho2(t)))
        den = np.log(self.rho1(t) / self.rho1(0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(np.abs(den) > 0, num / np.where(den == 0, 1.0, den), 0.0)
        return out if out.ndim else float(out)

    def rel(self, t, r: int):
        return self.rel1(t) if r == 1 else self.rel2(t)

    def identical_rates(self) -> bool:
        return (self.amplitude2 in (None, self.amplitude)) and (self.k2 in (None, self.k))


def radial_samples(d: int, cfg: VerifyConfig) -> np.ndarray:
    """Points on log-spaced radii covering ``[0, r_max]`` in random directions."""
    n = max(int(cfg.n_samples), 2)
    radii = np.concatenate([[0.0], np.logspace(-3, np.log10(cfg.r_max), n - 1)])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(cfg.seed), 7])))
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return radii[:, None] * z


def _b_sigma(spec: DiffusionSpec, X: np.ndarray):
    B = np.array([spec.b(x) for x in X])
    S = np.array([spec.sig(x) for x in X])
    return B, S


def _decades(norms: np.ndarray, r_max: float):
    top = (norms >= r_max / 10) & (norms <= r_max)
    prev = (norms >= r_max / 100) & (norms < r_max / 10)
    return top, prev


def fit_growth(spec: DiffusionSpec, cfg: VerifyConfig = VerifyConfig()) -> GrowthConstants:
    """Sampled growth constants ``lambda_b, lambda_sigma, lambda_a`` and exponent ``r``.

    ``r`` is the smallest of 1, 2 for which ``||a(x)||_op / (1 + ||x||^r)``
    stops growing over the largest radius decade (its maximum there is at
    most twice the maximum over the decade below).
    """
    X = radial_samples(spec.dim, cfg)
    norms = np.linalg.norm(X, axis=1)
    B, S = _b_sigma(spec, X)
    lam_b = 4.0 * np.max(np.linalg.norm(B, axis=1) / (1.0 + norms))
    lam_s = 4.0 * np.max(np.sqrt(np.sum(S**2, axis=(1, 2))) / (1.0 + norms))
    a_op = np.array([np.max(np.abs(np.linalg.eigvalsh(spec.a(x)))) for x in X])
    top, prev = _decades(norms, cfg.r_max)
    for r in (1, 2):
        ratio = a_op / (1.0 + norms**r)
        if ratio[top].max() <= 2.0 * max(ratio[prev].max(), 1e-300):
            return GrowthConstants(float(lam_b), float(lam_s), float(4.0 * ratio.max()), r)
    raise GrowthExceeded("covariance grows faster than quadratically on the probed range")


def fit_dissipativity(spec: DiffusionSpec, cfg: VerifyConfig = VerifyConfig()) -> DissipativityConstants:
    """Largest sampled ``alpha`` with finite-sample-stable ``beta``.

    With ``g(x) = 2 <b(x), x> + ||sigma(x)||_F^2`` the asymptotic level
    ``k_hat = min -g(x)/||x||^2`` over the largest radius decade bounds the
    admissible ``alpha``.  ``alpha`` sweeps a log grid on ``(0, k_hat]`` and
    ``beta(alpha) = max g(x) + alpha ||x||^2``; a grid value is stable when
    dropping the largest radius decade leaves ``beta`` unchanged.  The whole
    frontier is returned alongside the chosen point.
    """
    X = radial_samples(spec.dim, cfg)
    norms = np.linalg.norm(X, axis=1)
    g = np.array([generator_sq_norm(spec, x) for x in X])
    top, prev = _decades(norms, cfg.r_max)
    lvl = -g / np.where(norms > 0, norms**2, 1.0)
    k_top, k_prev = lvl[top].min(), lvl[prev].min()
    if not (k_top > 0 and k_top >= 0.5 * k_prev):
        raise NotDissipative("generator of ||x||^2 is not eventually below -alpha ||x||^2")
    grid = k_top * np.logspace(-3, 0, int(cfg.n_alpha))
    inner = ~top
    betas, stable = [], []
    for a in grid:
        res = g + a * norms**2
        b_all, b_in = res.max(), res[inner].max()
        betas.append(float(b_all))
        stable.append(b_all <= b_in + 1e-9 * (1.0 + abs(b_in)))
    stable = np.array(stable)
    if not stable.any():
        raise NotDissipative("no stable (alpha, beta) pair on the grid")
    j = int(np.flatnonzero(stable)[-1])
    beta = max(betas[j], np.finfo(float).tiny)
    return DissipativityConstants(float(grid[j]), float(beta), tuple(map(float, grid)), tuple(betas))


def uniform_lhs(spec: DiffusionSpec, X: np.ndarray, Y: np.ndarray, p: int) -> np.ndarray:
    """Pairwise ``[2<db, dx> + ||d sigma||_F^2 + (p - 2) ||d sigma||_op^2] / ||dx||^2``."""
    Bx, Sx = _b_sigma(spec, X)
    By, Sy = _b_sigma(spec, Y)
    dx = X - Y
    n2 = np.sum(dx**2, axis=1)
    dS = Sx - Sy
    fro = np.sum(dS**2, axis=(1, 2))
    op = np.linalg.norm(dS, ord=2, axis=(1, 2)) ** 2
    return (2.0 * np.sum((Bx - By) * dx, axis=1) + fro + (p - 2) * op) / n2


def uniform_lhs_reduced(spec: DiffusionSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Drift-only form ``2<db, dx> / ||dx||^2``, exact for constant ``sigma``."""
    Bx = np.array([spec.b(x) for x in X])
    By = np.array([spec.b(y) for y in Y])
    dx = X - Y
    return 2.0 * np.sum((Bx - By) * dx, axis=1) / np.sum(dx**2, axis=1)


def _nondegenerate(X, Y):
    keep = np.linalg.norm(X - Y, axis=1) >= DEGENERATE_PAIR
    return X[keep], Y[keep]


def uniform_dissipativity_rate(spec: DiffusionSpec, p: int = 2, cfg: VerifyConfig = VerifyConfig()) -> RateModel:
    """Contraction rate ``k`` of uniform dissipativity, ``rho_p(t) = exp(-k t / 2)``."""
    if p not in (1, 2):
        raise ParamOutOfRange("p must be 1 or 2")
    X, Y = _nondegenerate(*sample_pairs(cfg.pairs(), spec.dim))
    worst = float(np.max(uniform_lhs(spec, X, Y, p)))
    if not worst < 0:
        raise NotUniform("pairwise contraction quantity is not uniformly negative")
    return RateModel(p=p, amplitude=1.0, k=-worst)


def tilde_sigma(sig: np.ndarray, s: float) -> np.ndarray:
    """Symmetric square root of ``sigma sigma^T - s^2 I``."""
    a = sig @ sig.T - s**2 * np.eye(sig.shape[0])
    w, V = np.linalg.eigh(0.5 * (a + a.T))
    if w.min() < -1e-10:
        raise ParamOutOfRange("s is too large: sigma sigma^T - s^2 I is not positive semidefinite")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def distant_lhs(spec: DiffusionSpec, X: np.ndarray, Y: np.ndarray, s: float) -> np.ndarray:
    """Three-term distant-dissipativity quantity for each pair."""
    Bx, Sx = _b_sigma(spec, X)
    By, Sy = _b_sigma(spec, Y)
    Tx = np.array([tilde_sigma(S, s) for S in Sx])
    Ty = np.array([tilde_sigma(S, s) for S in Sy])
    dx = X - Y
    n2 = np.sum(dx**2, axis=1)
    dT = Tx - Ty
    t1 = np.sum((Bx - By) * dx, axis=1) / (s**2 * n2 / 2.0)
    t2 = np.sum(dT**2, axis=(1, 2)) / (s**2 * n2)
    proj = np.einsum("nij,ni->nj", dT, dx)
    t3 = -np.sum(proj**2, axis=1) / (s**2 * n2**2)
    return t1 + t2 + t3


def _distance_pairs(d: int, cfg: VerifyConfig, r_hi: float):
    """Pairs whose separations are log-uniform on ``[1e-3, r_hi]``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(cfg.seed), 11])))
    n = int(cfg.n_pairs)
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    X = cfg.pair_radius * (rng.random(n) ** (1.0 / d))[:, None] * z
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    dist = np.exp(rng.uniform(np.log(1e-3), np.log(r_hi), n))
    return X, X + dist[:, None] * u


def _profile_from_values(dist: np.ndarray, vals: np.ndarray, r_hi: float, n_bins: int):
    edges = np.logspace(-3, np.log10(r_hi), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, dist, side="right") - 1, 0, n_bins - 1)
    bmax = np.full(n_bins, -np.inf)
    np.maximum.at(bmax, idx, vals)
    filled = np.flatnonzero(np.isfinite(bmax))
    tail = filled[edges[filled] >= 0.5 * r_hi]
    if tail.size == 0:
        tail = filled[-1:]
    level = float(np.max(bmax[tail]))
    if not level < 0:
        raise NoDecay("distant quantity is not eventually negative")
    K = -0.5 * level
    ok = bmax <= -K
    j = n_bins
    while j > 0 and (ok[j - 1] or not np.isfinite(bmax[j - 1])):
        j -= 1
    R = 0.0 if j == 0 else float(edges[j])
    inside = bmax[:j][np.isfinite(bmax[:j])]
    L = float(max(0.0, inside.max())) if inside.size else 0.0
    return K, L, R, edges, bmax


def distant_profile(spec: DiffusionSpec, s: float, cfg: VerifyConfig = VerifyConfig()) -> DistantProfile:
    """Fit ``(K, L, R)`` of distant dissipativity from binned pair maxima.

    Pairs are binned in 64 log bins of ``||x - y||`` over
    ``[1e-3, 2 * pair_radius]``.  ``K`` is half of the (negated) level over
    the populated bins beyond ``pair_radius``, ``R`` the smallest bin edge beyond
    which every bin is at most ``-K``, and ``L`` the largest bin maximum
    inside ``R`` (clamped at zero).
    """
    if not s > 0:
        raise ParamOutOfRange("s must be positive")
    r_hi = 2.0 * cfg.pair_radius
    X, Y = _distance_pairs(spec.dim, cfg, r_hi)
    vals = distant_lhs(spec, X, Y, s)
    K, L, R, edges, bmax = _profile_from_values(np.linalg.norm(X - Y, axis=1), vals, r_hi, cfg.n_bins)
    return DistantProfile(K, L, R, float(s), tuple(map(float, edges)), tuple(map(float, bmax)))


def rate_from_distant(profile: DistantProfile) -> RateModel:
    """``L_1`` rate ``2 exp(L R^2 / 8) exp(-k t / 2)`` with ``k`` at the bound on ``s^2 / k``."""
    K, L, R, s = profile.K, profile.L, profile.R, profile.s
    if not K > 0:
        raise ParamOutOfRange("K must be positive")
    LR2 = L * R**2
    if LR2 <= 8:
        ratio = (np.e - 1.0) / 2.0 * R**2 + np.e * np.sqrt(8.0 / K) * R + 4.0 / K
    else:
        ratio = (8.0 * np.sqrt(2.0 * np.pi) / R / np.sqrt(L) * (1.0 / L + 1.0 / K) * np.exp(LR2 / 8.0)
                 + 32.0 / (R**2 * K**2))
    return RateModel(p=1, amplitude=float(2.0 * np.exp(LR2 / 8.0)), k=float(s**2 / ratio))


def friendly_distant(obj: ObjectiveSpec, sigma: Callable, c: Optional[Callable], s0: float,
                     cfg: VerifyConfig = VerifyConfig(), gamma: Optional[float] = None,
                     div_m: Optional[Callable] = None, covariance: Optional[Callable] = None):
    """Distant profile of the Gibbs diffusion built from ``m = sigma sigma^T + c``.

    Estimates ``L* = phi_1(tilde sigma)^2 + sup lambda_max(grad div m)`` and
    the drift-only profile ``(K_m, L_m, R_m)`` of
    ``-<m(x) grad f(x) - m(y) grad f(y), x - y> / ||x - y||^2``.  Returns the
    profile at ``gamma`` (default: just above the threshold) together with
    the threshold ``L* / K_m``; ``gamma`` must exceed it strictly.
    """
    d = obj.dim

    def a(x):
        if covariance is not None:
            return np.asarray(covariance(x), dtype=float)
        S = np.asarray(sigma(x), dtype=float).reshape(d, -1)
        return S @ S.T

    def m(x):
        return a(x) if c is None else a(x) + np.asarray(c(x), dtype=float)

    def div(x):
        return np.asarray(div_m(x), dtype=float) if div_m is not None else fd_divergence(m, x)

    def tsig(x):
        w, V = np.linalg.eigh(a(x) - s0**2 * np.eye(d))
        if w.min() < -1e-10:
            raise ParamOutOfRange("s0 is too large")
        return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T

    r_hi = 2.0 * cfg.pair_radius
    X, Y = _distance_pairs(d, cfg, r_hi)
    dx = X - Y
    n2 = np.sum(dx**2, axis=1)
    Tx = np.array([tsig(x) for x in X])
    Ty = np.array([tsig(y) for y in Y])
    phi1 = float(np.max(np.sqrt(np.sum((Tx - Ty) ** 2, axis=(1, 2)) / n2)))
    lam = []
    for x in X[: min(len(X), 4096)]:
        J = fd_jacobian(div, x)
        lam.append(np.max(np.linalg.eigvalsh(0.5 * (J + J.T))))
    L_star = max(0.0, phi1**2 + float(np.max(lam)))
    mg_x = np.array([m(x) @ obj.gradient(x) for x in X])
    mg_y = np.array([m(y) @ obj.gradient(y) for y in Y])
    vals = -np.sum((mg_x - mg_y) * dx, axis=1) / n2
    K_m, L_m, R_m, _, _ = _profile_from_values(np.sqrt(n2), vals, r_hi, cfg.n_bins)
    gamma_min = L_star / K_m
    if gamma is None:
        gamma = max(gamma_min * (1.0 + 1e-9), np.nextafter(gamma_min, np.inf), np.finfo(float).tiny)
    if not gamma > gamma_min:
        raise ParamOutOfRange(f"gamma must exceed L*/K_m = {gamma_min:.6g}")
    prof = DistantProfile(
        K=(gamma * K_m - L_star) / s0**2,
        L=(gamma * L_m + L_star) / s0**2,
        R=R_m,
        s=s0 / np.sqrt(gamma),
    )
    return prof, float(gamma_min)


@dataclass
class CouplingResult:
    times: np.ndarray
    mean_distance: np.ndarray
    k_hat: float
    n_diverged: int
    distances: np.ndarray = field(repr=False, default=None)


def simulate_coupling(spec: DiffusionSpec, x, y, horizon: float, reps: int = 1, eta: float = 1e-3,
                      seed: int = 0, record_every: int = 1, threshold: float = 1e9) -> CouplingResult:
    """Synchronously coupled Euler chains from ``x`` and ``y``.

    Both chains share one Gaussian stream per replica.  Returns the mean
    distance at recorded times and the rate ``k_hat`` of the log-linear fit
    ``mean distance ~ exp(-k_hat t / 2)``.
    """
    if not horizon > 0:
        raise ParamOutOfRange("horizon must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    steps = int(np.ceil(horizon / eta - 1e-9))
    R = int(reps)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 3])))
    Z = np.vstack([np.tile(x, (R, 1)), np.tile(y, (R, 1))])
    rec_t, rec_d = [0.0], [np.linalg.norm(Z[:R] - Z[R:], axis=1)]
    alive = np.ones(R, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, steps + 1):
            W = rng.standard_normal((R, spec.l))
            Z = spec.step_batch(Z, np.vstack([W, W]), eta)
            nz = np.linalg.norm(Z, axis=1)
            alive &= np.isfinite(nz[:R]) & np.isfinite(nz[R:]) & (nz[:R] <= threshold) & (nz[R:] <= threshold)
            Z[np.concatenate([~alive, ~alive])] = 0.0
            if m % record_every == 0 or m == steps:
                rec_t.append(m * eta)
                rec_d.append(np.linalg.norm(Z[:R] - Z[R:], axis=1))
    D = np.array(rec_d)[:, alive]
    t = np.array(rec_t)
    mean = D.mean(axis=1) if D.shape[1] else np.full(t.size, np.nan)
    pos = mean > 1e-300
    if pos.sum() >= 2:
        slope = np.polyfit(t[pos], np.log(mean[pos]), 1)[0]
        k_hat = float(-2.0 * slope)
    else:
        k_hat = float("inf") if np.all(mean[1:] == 0) else float("nan")
    return CouplingResult(t, mean, k_hat, int(R - alive.sum()), D)
