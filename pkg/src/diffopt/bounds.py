"""Explicit constants and error bounds for discretised diffusions.

Functions here are direct evaluations of closed-form expressions.  Inputs
are growth constants ``lambda_b, lambda_sigma, lambda_a`` with exponent
``r``, dissipativity constants ``alpha, beta``, an exponential Wasserstein
rate model, Lipschitz-type coefficients of the diffusion and smoothness
constants of the objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import (
    BadN,
    DegenerateAlphaTilde,
    MissingCoefficient,
    NegativeLogArgument,
    ParamOutOfRange,
    QuadratureNonConvergent,
    StepTooLarge,
)
from .objective import SmoothnessEstimate
from .verify import DissipativityConstants, GrowthConstants, RateModel

__all__ = [
    "double_factorial",
    "alpha_tilde",
    "beta_rn",
    "kappa_r",
    "moment_bound",
    "rho_n",
    "step_threshold",
    "c_constants",
    "eta_exponent",
    "integration_error_bound",
    "corollary_integration_bound",
    "SemigroupConstantTable",
    "semigroup_constants",
    "CoefficientSet",
    "alpha_tilde_omega",
    "omega_r",
    "rate_integral",
    "weighted_omega",
    "SteinFactorSet",
    "stein_factors",
    "zeta_from_tau_xi",
    "suboptimality_generalized_gibbs",
    "suboptimality_entropy_form",
    "suboptimality_quadratic",
    "quadratic_exact",
    "quadratic_gibbs_sampler",
    "BoundReport",
    "assemble_corollary",
]


def double_factorial(n: int) -> int:
    """``n!!`` with ``0!! = (-1)!! = 1``."""
    n = int(n)
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def alpha_tilde(alpha: float, lambda_a: float, r: int, n: float) -> float:
    """``alpha`` for ``r = 1`` and ``[alpha - n lambda_a / 4]_+`` for ``r = 2``."""
    if r == 1:
        return float(alpha)
    if r == 2:
        return max(float(alpha) - n * lambda_a / 4.0, 0.0)
    raise ParamOutOfRange("r must be 1 or 2")


def _checked_alpha_tilde(alpha, lambda_a, r, n):
    at = alpha_tilde(alpha, lambda_a, r, n)
    if not at > 0:
        raise DegenerateAlphaTilde(f"alpha_tilde vanishes for r={r}, n={n}")
    return at


def beta_rn(alpha: float, beta: float, lambda_a: float, r: int, n: int) -> float:
    """Higher-moment dissipativity offset
    ``beta + n lambda_a / 8 + (at / 2) ((n lambda_a + 6 r beta) / (2 r at))^n``."""
    at = _checked_alpha_tilde(alpha, lambda_a, r, n)
    return beta + n * lambda_a / 8.0 + (at / 2.0) * ((n * lambda_a + 6.0 * r * beta) / (2.0 * r * at)) ** n


def kappa_r(n: int, alpha: float, beta: float, lambda_a: float, r: int) -> float:
    """``2 + 2 beta / alpha + n lambda_a / (4 alpha) + (at / alpha) ((n lambda_a + 6 r beta) / (2 r at))^n``."""
    at = _checked_alpha_tilde(alpha, lambda_a, r, n)
    return (2.0 + 2.0 * beta / alpha + n * lambda_a / (4.0 * alpha)
            + (at / alpha) * ((n * lambda_a + 6.0 * r * beta) / (2.0 * r * at)) ** n)


def moment_bound(x0_norm: float, n_e: int, alpha: float, beta: float, lambda_a: float, r: int) -> float:
    """Uniform bound ``||x0||^{n_e} + 1 + 2 beta_{r, n_e} / alpha`` on chain moments."""
    return x0_norm**n_e + 1.0 + 2.0 * beta_rn(alpha, beta, lambda_a, r, n_e) / alpha


def rho_n(n: int, lambda_b: float, lambda_sigma: float) -> float:
    """``0.5 (2n - 1)!! (1 + lambda_b / 2 + lambda_sigma / 2)^{2n}``."""
    return 0.5 * double_factorial(2 * n - 1) * (1.0 + lambda_b / 2.0 + lambda_sigma / 2.0) ** (2 * n)


def step_threshold(alpha: float, lambda_b: float, lambda_sigma: float, n_e: int) -> float:
    """Largest admissible step ``1 ^ alpha / (2 (n_e - 1)!! (1 + lambda_b/2 + lambda_sigma/2)^{n_e})``."""
    val = alpha / (2.0 * double_factorial(n_e - 1) * (1.0 + lambda_b / 2.0 + lambda_sigma / 2.0) ** n_e)
    return min(1.0, val)


def _zeta_tuple(zeta) -> tuple:
    if isinstance(zeta, SteinFactorSet):
        return tuple(zeta.zeta[i] for i in (1, 2, 3, 4))
    if isinstance(zeta, Mapping):
        return tuple(zeta[i] for i in (1, 2, 3, 4))
    z = tuple(zeta)
    if len(z) != 4:
        raise ParamOutOfRange("four Stein factors are required")
    return z


def c_constants(zeta, growth, n: int, n_e: int) -> tuple:
    """Coefficients ``(c_1, c_2, c_3)`` of the integration error bound.

    ``growth`` is a :class:`GrowthConstants` or a ``(lambda_b, lambda_sigma)`` pair.
    """
    z1, z2, z3, z4 = _zeta_tuple(zeta)
    if isinstance(growth, GrowthConstants):
        lb, ls = growth.lambda_b, growth.lambda_sigma
    else:
        lb, ls = growth[0], growth[1]
    if n < 1:
        raise BadN("the third coefficient requires n >= 1")
    if n_e < n + 4 or n_e % 2:
        raise BadN("n_e must be even and at least n + 4")
    c1 = 6.0 * z1
    c2 = (2.0 * z2 * lb**2 + z3 * lb * ls**2 + z4 * (1.0 + 3.0 ** (n - 1)) * ls**4) / 16.0
    c3 = (z3 * lb**3 + z4 * lb**4 * (1.0 + 3.0 ** (n - 1))
          + 4.0 * z4 * (1.5**n / n**4) * (lb**4 + n_e**2 * ls**4) * (lb**n + double_factorial(n) * ls**n)) / 48.0
    return c1, c2, c3


def eta_exponent(n: int) -> float:
    """``1 + |1 ^ n/2|``."""
    return 1.0 + abs(min(1.0, n / 2.0))


def integration_error_bound(c1: float, c2: float, c3: float, eta: float, M: int, n: int, kappa_ne: float,
                            x0_moment: float, threshold: Optional[float] = None) -> float:
    """``(c1 / (eta M) + c2 eta + c3 eta^{1 + |1 ^ n/2|}) (kappa + E||X_0||^{n_e})``.

    When ``threshold`` is given the step must lie strictly below it.
    """
    if threshold is not None and not eta < threshold:
        raise StepTooLarge(f"eta={eta:g} is not below the threshold {threshold:g}")
    if not eta > 0 or M < 1:
        raise ParamOutOfRange("eta must be positive and M at least 1")
    return (c1 / (eta * M) + c2 * eta + c3 * eta ** eta_exponent(n)) * (kappa_ne + x0_moment)


def corollary_integration_bound(c1: float, c2: float, c3: float, eta: float, M: int, kappa_ne: float,
                                x0_moment: float) -> float:
    """``(c1 / (eta M) + (c2 + c3) eta) (kappa + E||X_0||^{n_e})``."""
    return (c1 / (eta * M) + (c2 + c3) * eta) * (kappa_ne + x0_moment)


REQUIRED_GAMMA = ((2, 2), (2, 3), (2, 4), (2, 6), (3, 2), (3, 3), (4, 2))
REQUIRED_THETA = ((2, 2), (3, 4), (4, 2))


@dataclass(frozen=True)
class SemigroupConstantTable:
    """``V_{i,n} = mu_i(b) + n mu_i(sigma)^2 + phi_i(sigma)^2`` with the derived ``gamma``/``theta`` constants."""

    mu_b: Mapping[int, float]
    mu_sigma: Mapping[int, float]
    phi_sigma: Mapping[int, float]
    gamma_c: Mapping[tuple, float] = field(default_factory=dict)
    theta_c: Mapping[tuple, float] = field(default_factory=dict)

    def V(self, i: int, n: float) -> float:
        try:
            return self.mu_b[i] + n * self.mu_sigma[i] ** 2 + self.phi_sigma[i] ** 2
        except KeyError as exc:
            raise MissingCoefficient(f"coefficient of order {i} missing") from exc

    def gamma(self, i: int, n: int) -> float:
        V = self.V
        if i == 1:
            return 1.0
        if i == 2:
            return V(2, n - 2) / (n * V(1, 2 * n - 2))
        if i == 3:
            return (15.0 * V(2, n - 2) + 5.0 * V(3, n - 2)) / (4.0 * n * V(1, 4 * n - 2))
        if i == 4 and n == 2:
            return (V(4, 0) + 6.0 * V(3, 0) + 5.0 * V(2, 0)) / (16.0 * V(1, 6))
        raise ParamOutOfRange(f"gamma_({i},{n}) is not defined")

    def theta(self, i: int, n: int) -> float:
        V = self.V
        if i == 1:
            return n * V(1, n - 2)
        if i == 2:
            return 3.0 * n * V(1, 2 * n - 2) + n * V(2, n - 2)
        if i == 3:
            return 7.0 * n * V(1, 3 * n - 2) + 10.0 * n * V(2, n - 2) + 3.0 * n * V(3, n - 2)
        if i == 4 and n == 2:
            return 31.0 * V(1, 5) + 27.0 * V(2, 2) + 12.0 * V(3, 1) + V(4, 0)
        raise ParamOutOfRange(f"theta_({i},{n}) is not defined")

    def g(self, i: int, n: int) -> float:
        key = (i, n)
        return self.gamma_c[key] if key in self.gamma_c else self.gamma(i, n)

    def t(self, i: int, n: int) -> float:
        key = (i, n)
        return self.theta_c[key] if key in self.theta_c else self.theta(i, n)


def semigroup_constants(mu_b: Mapping[int, float], mu_sigma: Mapping[int, float],
                        phi_sigma: Mapping[int, float], n: Optional[int] = None) -> SemigroupConstantTable:
    """Populate the ``gamma``/``theta`` constants used by the Stein factors.

    Entries needed by the third and fourth factors are filled only when the
    corresponding higher-order coefficients are supplied; asking for a
    missing one later raises :class:`MissingCoefficient`.
    """
    for name, mp in (("mu_b", mu_b), ("mu_sigma", mu_sigma), ("phi_sigma", phi_sigma)):
        if 1 not in mp:
            raise MissingCoefficient(f"{name}[1] is required")
    base = SemigroupConstantTable(dict(mu_b), dict(mu_sigma), dict(phi_sigma))
    gam, the = {}, {}
    keys_g = list(REQUIRED_GAMMA)
    keys_t = list(REQUIRED_THETA) + [(1, 2)]
    if n is not None and n >= 1:
        keys_g += [(1, n), (2, n), (3, n)]
        keys_t += [(1, n), (2, n), (3, n)]
    for key in keys_g:
        try:
            gam[key] = base.gamma(*key)
        except MissingCoefficient:
            pass
    for key in keys_t:
        try:
            the[key] = base.theta(*key)
        except MissingCoefficient:
            pass
    return SemigroupConstantTable(dict(mu_b), dict(mu_sigma), dict(phi_sigma), gam, the)


@dataclass(frozen=True)
class CoefficientSet:
    """Lipschitz-type coefficients of the diffusion.

    ``mu_b[i]``, ``mu_sigma[i]`` and ``phi_sigma[i]`` for ``i = 1..4``;
    ``pi_sigma[i]`` is the degree-0 growth coefficient of the ``i``-th
    derivative of ``sigma`` (``i = 1..3``) and ``pi_sigma_inv[i]`` that of
    ``sigma^{-1}`` (``i = 0..2``).
    """

    mu_b: Mapping[int, float]
    mu_sigma: Mapping[int, float]
    phi_sigma: Mapping[int, float]
    pi_sigma: Mapping[int, float]
    pi_sigma_inv: Mapping[int, float]
    source: str = "analytic"

    def table(self, n: Optional[int] = None) -> SemigroupConstantTable:
        return semigroup_constants(self.mu_b, self.mu_sigma, self.phi_sigma, n)

    def pi_s(self, a: int, b: int) -> float:
        return max(self._get(self.pi_sigma, i, "pi_sigma") for i in range(a, b + 1))

    def pi_si(self, a: int, b: int) -> float:
        return max(self._get(self.pi_sigma_inv, i, "pi_sigma_inv") for i in range(a, b + 1))

    @staticmethod
    def _get(mp, i, name):
        try:
            return mp[i]
        except KeyError as exc:
            raise MissingCoefficient(f"{name}[{i}] missing") from exc


T_GRID = np.concatenate([[0.0], np.logspace(-8, 8, 2001)])


def alpha_tilde_omega(rate: RateModel, alpha: float, lambda_a: float, n: int, r: int) -> float:
    """``alpha`` for ``r = 1``; ``inf_t [alpha - n lambda_a (1 v rel_2(t))]_+`` for ``r = 2``."""
    if r == 1:
        return float(alpha)
    if rate.identical_rates():
        worst = 1.0
    else:
        worst = float(np.max(np.maximum(1.0, rate.rel2(T_GRID[1:]))))
    return max(float(alpha) - n * lambda_a * worst, 0.0)


def omega_r(t, rate: RateModel, lambda_a: float, beta: float, n: int, r: int, alpha_tilde_value: float,
            exponent: str = "main"):
    """``1 + 4 rho_1(t)^{e} rho_1(0)^{1/2} (1 + (2 / at^n) {[1 v rel_r(t)] 2 lambda_a n + 3 r beta}^n)``.

    ``exponent="main"`` uses ``e = 1/r - 1``; ``"appendix"`` uses ``e = 1 - 1/r``.
    """
    if not alpha_tilde_value > 0:
        raise DegenerateAlphaTilde("alpha_tilde must be positive")
    t = np.asarray(t, dtype=float)
    e = (1.0 / r - 1.0) if exponent == "main" else (1.0 - 1.0 / r)
    if rate.identical_rates():
        rel = np.zeros_like(t)
    else:
        rel = np.asarray(rate.rel(t, r), dtype=float)
    brace = np.maximum(1.0, rel) * 2.0 * lambda_a * n + 3.0 * r * beta
    out = 1.0 + 4.0 * rate.rho1(t) ** e * math.sqrt(rate.rho1(0.0)) * (1.0 + 2.0 / alpha_tilde_value**n * brace**n)
    return out if out.ndim else float(out)


def weighted_omega(t, shift: float, rate: RateModel, lambda_a: float, beta: float, n: int, r: int,
                   alpha_tilde_value: float, exponent: str = "main") -> float:
    """``rho_1(t) omega_r(t + shift)`` evaluated in log space to avoid ``0 * inf``."""
    e = (1.0 / r - 1.0) if exponent == "main" else (1.0 - 1.0 / r)
    u = t + shift
    rel = 0.0 if rate.identical_rates() else float(rate.rel(u, r))
    brace = max(1.0, rel) * 2.0 * lambda_a * n + 3.0 * r * beta
    lr_t = math.log(rate.amplitude) - rate.k * t / 2.0
    lr_u = math.log(rate.amplitude) - rate.k * u / 2.0
    bracket = 1.0 + 2.0 / alpha_tilde_value**n * brace**n
    return math.exp(lr_t) + 4.0 * math.sqrt(rate.amplitude) * bracket * math.exp(lr_t + e * lr_u)


def rate_integral(fun, k: float, rtol: float = 1e-12) -> float:
    """``int_0^inf fun(t) dt`` for integrands decaying at least like ``exp(-k t / 4)``.

    The range is split at ``T / 20`` and ``T = 800 / k``; each piece is
    integrated adaptively and the pieces are summed.
    """
    T = 800.0 / k
    total, err = 0.0, 0.0
    for a, b in ((0.0, T / 20.0), (T / 20.0, T), (T, np.inf)):
        val, e, *rest = integrate.quad(fun, a, b, epsabs=0.0, epsrel=rtol, limit=500, full_output=1)
        total += val
        err += e
    if not np.isfinite(total) or err > max(1e-8 * abs(total), 1e-300):
        raise QuadratureNonConvergent(f"quadrature error {err:g} for value {total:g}")
    return float(total)


@dataclass
class SteinFactorSet:
    zeta: dict
    xi: dict
    integrals: dict
    alpha_tilde: float
    b6: float
    omega0: float
    omega1: float
    n: int
    r: int
    inputs: dict = field(default_factory=dict)


def stein_factors(rate: RateModel, growth: GrowthConstants, diss: DissipativityConstants,
                  smooth: SmoothnessEstimate, coeffs: CoefficientSet, n: int, r: Optional[int] = None,
                  table: Optional[SemigroupConstantTable] = None, exponent: str = "main") -> SteinFactorSet:
    """Stein factors ``zeta_1..zeta_4``.

    ``zeta_1 = mu_tilde_{1,n}(f) int rho_1(t) omega_r(t - 1) dt``; the others
    use the explicit short-time terms and ``xi_2..xi_4`` built from the
    semigroup constant table, with ``int rho_1(t) omega_r(t + i - 2) dt``
    evaluated by adaptive quadrature.
    """
    r = growth.r if r is None else r
    if not rate.k > 0:
        raise ParamOutOfRange("rate must be decaying")
    alpha, beta, lam_a = diss.alpha, diss.beta, growth.lambda_a
    at = alpha_tilde_omega(rate, alpha, lam_a, n, r)
    if not at > 0:
        raise DegenerateAlphaTilde("alpha_tilde for the Stein factors vanishes")
    tab = coeffs.table(n) if table is None else table

    def om(t):
        return omega_r(t, rate, lam_a, beta, n, r, at, exponent)

    integrals = {
        i: rate_integral(lambda t, s=i - 2: weighted_omega(t, s, rate, lam_a, beta, n, r, at, exponent), rate.k)
        for i in (1, 2, 3, 4)
    }
    mu_t = smooth.mu_tilde_1n
    rho0 = float(rate.rho1(0.0))
    w0, w1 = om(0.0), om(1.0)
    b6 = 1.0 + (beta_rn(alpha, beta, lam_a, r, 6 * n) / alpha) ** (1.0 / 6.0)
    g = tab.g
    th = tab.t

    xi1 = mu_t
    zeta1 = xi1 * integrals[1]

    xi2 = (4.0 * mu_t * b6 * rho0 * w1 * coeffs.pi_si(0, 0)
           * (1.0 + g(2, 2) ** 0.5 + coeffs.mu_sigma[1]) * math.exp(th(2, 2) / 2.0))
    zeta2 = 2.0 * xi2 * rho0 * w0 + xi2 * integrals[2]

    zeta = {1: zeta1, 2: zeta2}
    xi = {1: xi1, 2: xi2}
    try:
        xi3 = (4.0 * mu_t * coeffs.pi_s(1, 1) * coeffs.pi_s(1, 2) * coeffs.pi_si(0, 0) * coeffs.pi_si(0, 1)
               * rho0 * w1 * math.exp(th(3, 4) / 2.0)
               * (7.0 + 7.0 * g(2, 2) ** 0.5 + g(2, 3) ** (1 / 3) + g(3, 2) ** 0.5) * b6**2)
        zeta[3] = (4.0 * smooth.pi_range(1, 3) * (1.0 + 3.0 * g(2, 3) ** (1 / 3) + g(3, 2) ** 0.5) * b6
                   + xi3 * integrals[3])
        xi[3] = xi3
        bracket = (42.0 + 32.0 * g(2, 2) ** 0.5 + 6.0 * g(2, 2) + 2.0 * g(2, 3) ** (1 / 3)
                   + 3.0 * g(2, 3) ** (2 / 3) + 24.0 * g(2, 4) ** 0.25 + 3.0 * g(2, 4) ** 0.5
                   + 12.0 * g(2, 6) ** (1 / 6) + 5.0 * g(3, 2) ** 0.5 + 5.0 * g(3, 3) ** (1 / 3)
                   + g(4, 2) ** 0.5 + 6.0 * g(2, 2) ** 0.5 * g(2, 6) ** (1 / 6))
        xi4 = (4.0 * mu_t * coeffs.pi_s(1, 1) ** 2 * coeffs.pi_s(1, 3) * coeffs.pi_si(0, 0) ** 2
               * coeffs.pi_si(0, 2) * math.exp(th(4, 2)) * rho0 * w1 * b6**3 * bracket)
        zeta[4] = (6.0 * smooth.pi_range(1, 4)
                   * (1.0 + 6.0 * g(2, 4) ** 0.25 + 4.0 * g(2, 3) + 3.0 * g(2, 3) ** (2 / 3)
                      + 4.0 * g(3, 3) ** (1 / 3) + g(4, 2) ** 0.5)
                   * math.exp(1.5 * th(4, 2)) * b6
                   + xi4 * integrals[4])
        xi[4] = xi4
    except KeyError as exc:
        raise MissingCoefficient(str(exc)) from exc
    return SteinFactorSet(
        zeta=zeta, xi=xi, integrals=integrals, alpha_tilde=at, b6=b6, omega0=w0, omega1=w1, n=n, r=r,
        inputs={"rate": rate, "growth": growth, "dissipativity": diss, "smoothness": smooth, "coefficients": coeffs},
    )


def zeta_from_tau_xi(tau: Sequence[float], xi: Sequence[float], integrals: Mapping[int, float]) -> dict:
    """Generic assembly ``zeta_i = tau_i + xi_i int rho_1(t) omega_r(t + i - 2) dt``."""
    return {i: tau[i - 1] + xi[i - 1] * integrals[i] for i in (1, 2, 3, 4)}


def suboptimality_generalized_gibbs(gamma: float, theta: float, d: int, alpha: float, beta: float,
                                    mu2f: float) -> float:
    """``[(d / 2 gamma) ((1/theta) log(2 gamma / d) + log(e beta mu_2(f) / (2 alpha)))]^{1/theta}``."""
    if not gamma > 0 or not 0 < theta <= 1:
        raise ParamOutOfRange("gamma must be positive and theta in (0, 1]")
    inner = (d / (2.0 * gamma)) * (math.log(2.0 * gamma / d) / theta
                                   + math.log(math.e * beta * mu2f / (2.0 * alpha)))
    if inner < 0:
        raise NegativeLogArgument(f"suboptimality base {inner:g} is negative")
    return inner ** (1.0 / theta)


def suboptimality_entropy_form(C: float, theta: float, d: int, alpha: float, beta: float) -> float:
    """``(d / 2 theta) log(2 C / d) + (d / 2) log(e beta / alpha)``."""
    return d / (2.0 * theta) * math.log(2.0 * C / d) + d / 2.0 * math.log(math.e * beta / alpha)


def suboptimality_quadratic(gamma: float, k: int, d: int) -> float:
    """``((k (1 + d/2) - 1) / gamma)^k``."""
    if int(k) != k or k < 1 or not gamma > 0:
        raise ParamOutOfRange("k must be a positive integer and gamma positive")
    return ((k * (1.0 + d / 2.0) - 1.0) / gamma) ** k


def quadratic_exact(gamma: float, k: int, d: int) -> float:
    """Exact expected suboptimality ``Gamma(dk/2 + k) / Gamma(dk/2) gamma^{-k}``."""
    return math.exp(gammaln(d * k / 2.0 + k) - gammaln(d * k / 2.0)) * gamma ** (-k)


def quadratic_gibbs_sampler(gamma: float, alpha_exp: float, d: int, A=None, b=None, seed: int = 0,
                            nsamples: int = 1_000_000) -> tuple:
    """Monte Carlo estimate of the expected suboptimality for a quadratic objective.

    For ``f(x) = <x - b, A (x - b)>`` and density ``exp(-gamma f^alpha)`` the
    substitution ``y = A^{1/2} (x - b)`` gives ``f - f* = ||y||^2`` with
    ``u = gamma ||y||^{2 alpha} ~ Gamma(d / (2 alpha), 1)``.  The estimate
    does not depend on ``A`` or ``b``; they are validated and otherwise
    unused.  Returns ``(mean, standard error)``.
    """
    if not alpha_exp > 0:
        raise ParamOutOfRange("alpha_exp must be positive")
    if A is not None:
        A = np.asarray(A, dtype=float)
        if A.shape != (d, d) or np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) <= 0:
            raise ParamOutOfRange("A must be a d x d positive definite matrix")
    if b is not None and np.asarray(b).shape != (d,):
        raise ParamOutOfRange("b must have length d")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 5])))
    u = rng.gamma(d / (2.0 * alpha_exp), 1.0, size=int(nsamples))
    r2 = (u / gamma) ** (1.0 / alpha_exp)
    return float(r2.mean()), float(r2.std(ddof=1) / math.sqrt(r2.size))


@dataclass
class BoundReport:
    growth: Optional[GrowthConstants]
    dissipativity: Optional[DissipativityConstants]
    rate: Optional[RateModel]
    stein: Optional[SteinFactorSet]
    kappa: float
    beta_rn: float
    threshold: float
    c1: float
    c2: float
    c3: float
    eta: float
    M: int
    integration_bound: float
    suboptimality: float
    total: float
    provenance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "kappa_r": self.kappa,
            "beta_rn": self.beta_rn,
            "step_threshold": self.threshold,
            "c_1": self.c1,
            "c_2": self.c2,
            "c_3": self.c3,
            "eta": self.eta,
            "M": int(self.M),
            "integration_bound": self.integration_bound,
            "suboptimality": self.suboptimality,
            "total": self.total,
            "provenance": dict(self.provenance),
            "warnings": list(self.warnings),
        }
        if self.growth is not None:
            out.update(lambda_b=self.growth.lambda_b, lambda_sigma=self.growth.lambda_sigma,
                       lambda_a=self.growth.lambda_a, r=self.growth.r)
        if self.dissipativity is not None:
            out.update(alpha=self.dissipativity.alpha, beta=self.dissipativity.beta)
        if self.rate is not None:
            out.update(rate_amplitude=self.rate.amplitude, rate_k=self.rate.k)
        if self.stein is not None:
            for i, z in self.stein.zeta.items():
                out[f"zeta_{i}"] = z
            out["omega_integrals"] = {str(i): v for i, v in self.stein.integrals.items()}
        return out


def assemble_corollary(c: Sequence[float], eta: float, M: int, kappa_ne: float, x0_moment: float,
                       suboptimality: float, threshold: Optional[float] = None, *, growth=None,
                       dissipativity=None, rate=None, stein=None, beta_rn_value: float = float("nan"),
                       provenance: Optional[dict] = None) -> BoundReport:
    """Total optimisation error: merged integration bound plus suboptimality."""
    c1, c2, c3 = c
    if threshold is not None and not eta < threshold:
        raise StepTooLarge(f"eta={eta:g} is not below the threshold {threshold:g}")
    integ = corollary_integration_bound(c1, c2, c3, eta, M, kappa_ne, x0_moment)
    prov = dict(provenance or {})
    warn = [f"{k} is fitted, not analytic" for k, v in prov.items() if v == "fitted"]
    return BoundReport(growth, dissipativity, rate, stein, kappa_ne, beta_rn_value,
                       float("nan") if threshold is None else threshold, c1, c2, c3, eta, M,
                       integ, suboptimality, integ + suboptimality, prov, warn)
