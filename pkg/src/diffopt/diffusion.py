"""Diffusion coefficients, invariant-measure drift construction and the generator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MissingDivergence, NonFinite, ParamOutOfRange
from .objective import ObjectiveSpec, fd_step

__all__ = [
    "DiffusionSpec",
    "TargetMeasure",
    "gibbs_target",
    "generalized_gibbs_target",
    "explicit_target",
    "fd_divergence",
    "drift_from_invariant",
    "gibbs_diffusion",
    "apply_generator",
    "generator_sq_norm",
    "check_stationarity_fd",
]

SKEW_TOL = 1e-10
PSD_TOL = 1e-10


def fd_divergence(m: Callable[[np.ndarray], np.ndarray], x, h: Optional[float] = None) -> np.ndarray:
    """Row divergence ``sum_k d m_jk / d x_k`` by central differences."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else float(h)
    out = np.zeros(x.size)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        out += (np.asarray(m(x + e))[:, k] - np.asarray(m(x - e))[:, k]) / (2.0 * h)
    return out


@dataclass(frozen=True)
class DiffusionSpec:
    """Coefficients of ``dZ = b(Z) dt + sigma(Z) dB``.

    Parameters
    ----------
    dim : int
        State dimension ``d``.
    drift : callable
        ``x -> b(x)``.
    sigma : callable
        ``x -> sigma(x)``, a ``d x l`` matrix.
    covariance : callable, optional
        ``x -> a(x)``; defaults to ``sigma sigma^T``.
    stream : callable, optional
        Skew-symmetric ``x -> c(x)``; defaults to zero.
    div_m : callable, optional
        Divergence of ``a + c``; finite differences are used when absent.
    label : str
        Name used in reports and for reproducibility keys.
    drift_batch, noise_batch : callable, optional
        Vectorised ``(R, d) -> (R, d)`` drift and ``((R, d), (R, l)) -> (R, d)``
        product ``sigma(x) w``, used to advance many replicas at once.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]
    covariance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    stream: Optional[Callable[[np.ndarray], np.ndarray]] = None
    div_m: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "diffusion"
    noise_dim: Optional[int] = None
    drift_batch: Optional[Callable] = field(default=None, compare=False)
    noise_batch: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ParamOutOfRange("dim must be at least 1")

    @property
    def l(self) -> int:
        return self.dim if self.noise_dim is None else int(self.noise_dim)

    def b(self, x) -> np.ndarray:
        return np.asarray(self.drift(np.asarray(x, dtype=float)), dtype=float)

    def sig(self, x) -> np.ndarray:
        return np.asarray(self.sigma(np.asarray(x, dtype=float)), dtype=float).reshape(self.dim, self.l)

    def a(self, x) -> np.ndarray:
        if self.covariance is not None:
            return np.asarray(self.covariance(np.asarray(x, dtype=float)), dtype=float)
        s = self.sig(x)
        return s @ s.T

    def c(self, x) -> np.ndarray:
        if self.stream is None:
            return np.zeros((self.dim, self.dim))
        return np.asarray(self.stream(np.asarray(x, dtype=float)), dtype=float)

    def m(self, x) -> np.ndarray:
        return self.a(x) + self.c(x)

    def divergence(self, x, h: Optional[float] = None) -> np.ndarray:
        """Divergence of ``m = a + c`` at ``x``."""
        if self.div_m is not None:
            return np.asarray(self.div_m(np.asarray(x, dtype=float)), dtype=float)
        return fd_divergence(self.m, x, h)

    def step_batch(self, X: np.ndarray, W: np.ndarray, eta: float) -> np.ndarray:
        """One Euler update for every row of ``X``."""
        if self.drift_batch is not None and self.noise_batch is not None:
            return X + eta * self.drift_batch(X) + np.sqrt(eta) * self.noise_batch(X, W)
        out = np.empty_like(X)
        for i in range(X.shape[0]):
            out[i] = X[i] + eta * self.b(X[i]) + np.sqrt(eta) * (self.sig(X[i]) @ W[i])
        return out

    def validate_at(self, x) -> None:
        """Check skew-symmetry of ``c`` and positive semidefiniteness of ``a`` at ``x``."""
        c = self.c(x)
        if np.linalg.norm(c + c.T) > SKEW_TOL:
            raise ParamOutOfRange("stream coefficient is not skew-symmetric")
        a = self.a(x)
        if np.linalg.norm(a - a.T) > PSD_TOL * (1 + np.linalg.norm(a)):
            raise ParamOutOfRange("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (a + a.T))) < -PSD_TOL:
            raise ParamOutOfRange("covariance is not positive semidefinite")


@dataclass(frozen=True)
class TargetMeasure:
    """Target invariant density known up to normalisation.

    ``kind`` is one of ``"gibbs"``, ``"generalized_gibbs"`` or ``"explicit"``.
    ``log_density`` and ``log_density_grad`` are the unnormalised log density
    and its gradient.
    """

    kind: str
    log_density: Callable[[np.ndarray], float]
    log_density_grad: Callable[[np.ndarray], np.ndarray]
    gamma: Optional[float] = None
    theta: float = 1.0
    f_star: Optional[float] = None


def gibbs_target(obj: ObjectiveSpec, gamma: float) -> TargetMeasure:
    """Density proportional to ``exp(-gamma f)``."""
    if not gamma > 0:
        raise ParamOutOfRange("gamma must be positive")
    return TargetMeasure(
        kind="gibbs",
        log_density=lambda x: -gamma * obj.value(x),
        log_density_grad=lambda x: -gamma * obj.gradient(x),
        gamma=float(gamma),
    )


def generalized_gibbs_target(obj: ObjectiveSpec, gamma: float, theta: float,
                             f_star: Optional[float] = None) -> TargetMeasure:
    """Density proportional to ``exp(-gamma (f - f_star)^theta)``, ``theta`` in (0, 1]."""
    if not gamma > 0:
        raise ParamOutOfRange("gamma must be positive")
    if not 0 < theta <= 1:
        raise ParamOutOfRange("theta must lie in (0, 1]")
    if f_star is None:
        if theta < 1:
            if obj.known_min is None:
                raise ParamOutOfRange("theta < 1 requires the optimal value f_star")
            f_star = float(obj.known_min[1])
        else:
            f_star = 0.0 if obj.known_min is None else float(obj.known_min[1])

    def logp(x):
        gap = max(obj.value(x) - f_star, 0.0)
        return -gamma * gap**theta

    def grad_logp(x):
        gap = max(obj.value(x) - f_star, 0.0)
        scale = 1.0 if theta == 1 else theta * gap ** (theta - 1.0)
        return -gamma * scale * obj.gradient(x)

    return TargetMeasure("generalized_gibbs", logp, grad_logp, float(gamma), float(theta), float(f_star))


def explicit_target(log_density, log_density_grad) -> TargetMeasure:
    """Arbitrary unnormalised log density with its gradient."""
    return TargetMeasure("explicit", log_density, log_density_grad)


def drift_from_invariant(target: TargetMeasure, a: Callable, c: Optional[Callable] = None,
                         div_m: Optional[Callable] = None, fd_fallback: bool = True) -> Callable:
    """Drift with invariant density ``target`` for covariance ``a`` and stream ``c``.

    Returns ``x -> 0.5 (a + c)(x) grad log p(x) + 0.5 div(a + c)(x)``, which
    equals ``div(p (a + c)) / (2 p)`` without evaluating ``p`` itself.
    """
    def m(x):
        out = np.asarray(a(x), dtype=float)
        return out if c is None else out + np.asarray(c(x), dtype=float)

    if div_m is None and not fd_fallback:
        raise MissingDivergence("divergence oracle required when the fallback is disabled")

    def drift(x):
        x = np.asarray(x, dtype=float)
        div = np.asarray(div_m(x), dtype=float) if div_m is not None else fd_divergence(m, x)
        return 0.5 * m(x) @ np.asarray(target.log_density_grad(x), dtype=float) + 0.5 * div

    return drift


def gibbs_diffusion(obj: ObjectiveSpec, sigma: Callable, gamma: float, stream: Optional[Callable] = None,
                    div_m: Optional[Callable] = None, covariance: Optional[Callable] = None,
                    label: str = "gibbs") -> DiffusionSpec:
    """Diffusion with stationary density proportional to ``exp(-gamma f)``.

    For ``m = sigma sigma^T + c`` the drift is
    ``b = -0.5 m grad f + div(m) / (2 gamma)`` and the diffusion coefficient
    is ``sigma / sqrt(gamma)``.  The returned spec stores ``a / gamma`` and
    ``c / gamma`` so that its own ``m`` is the scaled one.
    """
    if not gamma > 0:
        raise ParamOutOfRange("gamma must be positive")
    d = obj.dim

    def a_base(x):
        if covariance is not None:
            return np.asarray(covariance(x), dtype=float)
        s = np.asarray(sigma(x), dtype=float).reshape(d, -1)
        return s @ s.T

    def m_base(x):
        out = a_base(x)
        return out if stream is None else out + np.asarray(stream(x), dtype=float)

    def div_base(x):
        return np.asarray(div_m(x), dtype=float) if div_m is not None else fd_divergence(m_base, x)

    def drift(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * m_base(x) @ obj.gradient(x) + div_base(x) / (2.0 * gamma)

    rg = np.sqrt(gamma)
    return DiffusionSpec(
        dim=d,
        drift=drift,
        sigma=lambda x: np.asarray(sigma(x), dtype=float) / rg,
        covariance=lambda x: a_base(x) / gamma,
        stream=None if stream is None else (lambda x: np.asarray(stream(x), dtype=float) / gamma),
        div_m=lambda x: div_base(np.asarray(x, dtype=float)) / gamma,
        label=label,
    )


def apply_generator(spec: DiffusionSpec, g_grad: Callable, g_hess: Callable, x) -> float:
    """``<b, grad g> + 0.5 <sigma sigma^T, hess g>`` at ``x``."""
    x = np.asarray(x, dtype=float)
    s = spec.sig(x)
    val = float(spec.b(x) @ np.asarray(g_grad(x)) + 0.5 * np.sum((s @ s.T) * np.asarray(g_hess(x))))
    if not np.isfinite(val):
        raise NonFinite("generator value is not finite")
    return val


def generator_sq_norm(spec: DiffusionSpec, x) -> float:
    """Closed form of the generator on ``||x||^2``: ``2 <b, x> + ||sigma||_F^2``."""
    x = np.asarray(x, dtype=float)
    return float(2.0 * spec.b(x) @ x + np.sum(spec.sig(x) ** 2))


def check_stationarity_fd(spec: DiffusionSpec, target: TargetMeasure, x, h: float) -> float:
    """Finite-difference residual of the stationarity identity at ``x``.

    Returns ``||2 p b - div(p (a + c))|| / (1 + ||b|| p)`` where the divergence
    uses central differences of step ``h``.  The density is normalised so
    that ``p(x) = 1``, which keeps the residual scale-free and avoids
    underflow for sharply concentrated targets.
    """
    x = np.asarray(x, dtype=float)
    if not h > 0:
        raise ParamOutOfRange("h must be positive")
    lp0 = float(target.log_density(x))

    def pm(y):
        return np.exp(float(target.log_density(y)) - lp0) * spec.m(y)

    div = fd_divergence(pm, x, h)
    b = spec.b(x)
    return float(np.linalg.norm(2.0 * b - div) / (1.0 + np.linalg.norm(b)))
