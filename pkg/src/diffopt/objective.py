"""Objective functions, derivative fallbacks and sampled smoothness constants.

Every estimator in this module returns a supremum over a finite random
sample.  Such values are lower bounds on the true constants; callers that
know the analytic value should pass it instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MissingOracle, NonFinite, ParamOutOfRange

__all__ = [
    "ObjectiveSpec",
    "SampleConfig",
    "SmoothnessEstimate",
    "fd_step",
    "fd_gradient",
    "fd_hessian",
    "eval_with_fallback",
    "sample_points",
    "sample_pairs",
    "estimate_pseudo_lipschitz",
    "estimate_derivative_growth",
    "estimate_lipschitz",
    "estimate_smoothness",
]

EPS = np.finfo(float).eps
DEGENERATE_PAIR = 1e-12
CHUNK = 1024

Vector = np.ndarray


def fd_step(x) -> float:
    """Central-difference step cbrt(eps) * (1 + ||x||)."""
    return float(np.cbrt(EPS) * (1.0 + np.linalg.norm(x)))


def _check_finite(value, what="oracle"):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{what} returned a non-finite value")
    return value


def fd_gradient(fun: Callable[[Vector], float], x, h: Optional[float] = None) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else float(h)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def fd_jacobian(fun: Callable[[Vector], np.ndarray], x, h: Optional[float] = None) -> np.ndarray:
    """Central finite-difference Jacobian, ``J[i, j] = d fun_i / d x_j``."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else float(h)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(fun: Callable[[Vector], float], x, h: Optional[float] = None) -> np.ndarray:
    """Second-order central-difference Hessian from function values only.

    The default step is eps**(1/4) * (1 + ||x||), the balanced choice for a
    second difference quotient.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    h = float(EPS ** 0.25 * (1.0 + np.linalg.norm(x))) if h is None else float(h)
    H = np.empty((d, d))
    f0 = fun(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        H[i, i] = (fun(x + ei) - 2.0 * f0 + fun(x - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            v = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h**2)
            H[i, j] = H[j, i] = v
    return H


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective function with optional derivative oracles.

    Parameters
    ----------
    dim : int
        Dimension of the domain.
    eval : callable
        ``x -> f(x)``.
    grad, hess : callable, optional
        Analytic gradient and Hessian.  Finite differences are used when absent.
    third_op_norm, fourth_op_norm : callable, optional
        ``x -> ||D^3 f(x)||_op`` and ``x -> ||D^4 f(x)||_op``.
    known_min : tuple, optional
        ``(x_star, f_star)``; the gradient at ``x_star`` is checked to vanish.
    label : str
        Human-readable name.
    eval_batch : callable, optional
        Vectorised ``(N, d) -> (N,)`` version of ``eval`` used by the chain runner.
    """

    dim: int
    eval: Callable[[Vector], float]
    grad: Optional[Callable[[Vector], Vector]] = None
    hess: Optional[Callable[[Vector], np.ndarray]] = None
    third_op_norm: Optional[Callable[[Vector], float]] = None
    fourth_op_norm: Optional[Callable[[Vector], float]] = None
    known_min: Optional[tuple] = None
    label: str = "objective"
    eval_batch: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ParamOutOfRange("dim must be at least 1")
        if self.known_min is not None:
            x_star, _ = self.known_min
            x_star = np.asarray(x_star, dtype=float)
            g = self.gradient(x_star)
            tol = 1e-6 * (1.0 + np.linalg.norm(x_star)) if self.grad is None else 1e-8
            if np.linalg.norm(g) > tol * max(1.0, abs(self.value(x_star))):
                raise ParamOutOfRange("known_min is not a stationary point")

    def value(self, x) -> float:
        return float(_check_finite(self.eval(np.asarray(x, dtype=float)), "eval"))

    def values(self, X: np.ndarray) -> np.ndarray:
        """Evaluate ``f`` on the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        if self.eval_batch is not None:
            return np.asarray(self.eval_batch(X), dtype=float)
        return np.array([self.eval(x) for x in X], dtype=float)

    def gradient(self, x, h: Optional[float] = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(_check_finite(self.grad(x), "grad"), dtype=float)
        return _check_finite(fd_gradient(self.value, x, h), "FD gradient")

    def hessian(self, x, h: Optional[float] = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            H = np.asarray(_check_finite(self.hess(x), "hess"), dtype=float)
        elif self.grad is not None:
            H = fd_jacobian(self.gradient, x, h)
        else:
            H = fd_hessian(self.value, x, h)
        return _check_finite(0.5 * (H + H.T), "Hessian")


def eval_with_fallback(obj: ObjectiveSpec, x, order: int, h: Optional[float] = None):
    """Value, gradient, Hessian or higher-order operator norm of ``f`` at ``x``.

    Orders 0 to 2 fall back to central finite differences with step ``h``
    (default ``cbrt(eps) * (1 + ||x||)``).  Orders 3 and 4 require the
    corresponding operator-norm oracle.
    """
    x = np.asarray(x, dtype=float)
    _check_finite(x, "input")
    if order == 0:
        return obj.value(x)
    if order == 1:
        return obj.gradient(x, h)
    if order == 2:
        return obj.hessian(x, h)
    if order in (3, 4):
        oracle = obj.third_op_norm if order == 3 else obj.fourth_op_norm
        if oracle is None:
            raise MissingOracle(f"no operator-norm oracle for derivative order {order}")
        return float(_check_finite(oracle(x), f"order-{order} oracle"))
    raise ValueError("order must be in 0..4")


@dataclass(frozen=True)
class SampleConfig:
    """Sampling plan for supremum estimators.

    Points are drawn uniformly from the ball of radius ``radius``.  Pairs add a
    perturbation that is local (within ``local_scale * radius``) with
    probability ``local_frac`` and otherwise an independent ball point.
    Randomness is split per fixed-size chunk so the first ``N`` samples are
    identical for every total count and every thread count.
    """

    n_pairs: int = 10_000
    radius: float = 10.0
    seed: int = 0
    local_frac: float = 0.5
    local_scale: float = 0.1
    threads: int = 1


def _ball(rng: np.random.Generator, n: int, d: int, radius: float) -> np.ndarray:
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    u = rng.random(n) ** (1.0 / d)
    return radius * u[:, None] * z


def _chunk_rngs(seed: int, n: int, stream: int):
    nchunks = (n + CHUNK - 1) // CHUNK
    children = np.random.SeedSequence([int(seed), int(stream)]).spawn(nchunks)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def sample_points(cfg: SampleConfig, d: int, n: Optional[int] = None) -> np.ndarray:
    """``n`` points uniform in the ball of radius ``cfg.radius``."""
    n = cfg.n_pairs if n is None else int(n)
    out = [_ball(g, CHUNK, d, cfg.radius) for g in _chunk_rngs(cfg.seed, n, 0)]
    return np.concatenate(out, axis=0)[:n] if out else np.zeros((0, d))


def sample_pairs(cfg: SampleConfig, d: int, n: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(x, y)`` mixing local and global perturbations."""
    n = cfg.n_pairs if n is None else int(n)
    xs, ys = [], []
    for g in _chunk_rngs(cfg.seed, n, 1):
        x = _ball(g, CHUNK, d, cfg.radius)
        local = x + _ball(g, CHUNK, d, cfg.local_scale * cfg.radius)
        far = _ball(g, CHUNK, d, cfg.radius)
        pick = g.random(CHUNK) < cfg.local_frac
        xs.append(x)
        ys.append(np.where(pick[:, None], local, far))
    if not xs:
        return np.zeros((0, d)), np.zeros((0, d))
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def _map_max(fun, items, threads: int) -> float:
    """Max of ``fun`` over ``items``; the reduction order does not matter."""
    if threads <= 1 or len(items) < 2 * CHUNK:
        vals = [fun(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(fun, items))
    vals = [v for v in vals if np.isfinite(v)]
    return float(max(vals)) if vals else 0.0


def estimate_pseudo_lipschitz(obj: ObjectiveSpec, n: int, cfg: SampleConfig = SampleConfig()) -> float:
    """Sampled pseudo-Lipschitz constant of order ``n``.

    Returns the maximum of ``|f(x) - f(y)| / ((1 + ||x||^n + ||y||^n) ||x - y||)``
    over the sampled pairs; pairs closer than 1e-12 are skipped.
    """
    if n < 0:
        raise ParamOutOfRange("n must be nonnegative")
    X, Y = sample_pairs(cfg, obj.dim)

    def ratio(i):
        x, y = X[i], Y[i]
        dist = np.linalg.norm(x - y)
        if dist < DEGENERATE_PAIR:
            return -np.inf
        w = 1.0 + np.linalg.norm(x) ** n + np.linalg.norm(y) ** n
        return abs(obj.value(x) - obj.value(y)) / (w * dist)

    return max(0.0, _map_max(ratio, list(range(len(X))), cfg.threads))


def _derivative_norm(obj: ObjectiveSpec, x: np.ndarray, i: int) -> float:
    if i == 1:
        return float(np.linalg.norm(obj.gradient(x)))
    if i == 2:
        return float(np.max(np.abs(np.linalg.eigvalsh(obj.hessian(x)))))
    return float(eval_with_fallback(obj, x, i))


def estimate_derivative_growth(obj: ObjectiveSpec, i: int, n: int, cfg: SampleConfig = SampleConfig()) -> float:
    """Sampled ``sup ||D^i f(x)||_op / (1 + ||x||^n)``."""
    if i not in (1, 2, 3, 4):
        raise ParamOutOfRange("i must be in 1..4")
    if i == 3 and obj.third_op_norm is None or i == 4 and obj.fourth_op_norm is None:
        raise MissingOracle(f"no operator-norm oracle for derivative order {i}")
    X = sample_points(cfg, obj.dim)

    def ratio(k):
        x = X[k]
        return _derivative_norm(obj, x, i) / (1.0 + np.linalg.norm(x) ** n)

    return max(0.0, _map_max(ratio, list(range(len(X))), cfg.threads))


def estimate_lipschitz(fun: Callable[[Vector], np.ndarray], d: int, cfg: SampleConfig = SampleConfig(),
                       norm: str = "op") -> float:
    """Sampled Lipschitz constant of a vector or matrix valued map.

    ``norm`` selects the norm of the difference: ``"op"`` (spectral norm for
    matrices, Euclidean for vectors) or ``"fro"``.
    """
    X, Y = sample_pairs(cfg, d)

    def ratio(k):
        dist = np.linalg.norm(X[k] - Y[k])
        if dist < DEGENERATE_PAIR:
            return -np.inf
        diff = np.atleast_1d(np.asarray(fun(X[k])) - np.asarray(fun(Y[k])))
        if diff.ndim == 1 or norm == "fro":
            val = np.linalg.norm(diff)
        else:
            val = np.linalg.norm(diff, 2)
        return val / dist

    return max(0.0, _map_max(ratio, list(range(len(X))), cfg.threads))


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Sampled smoothness constants of an objective.

    ``mu_tilde_1n`` is the pseudo-Lipschitz constant of order ``order_n``,
    ``pi_tilde[i]`` the degree-``order_n`` growth coefficient of the ``i``-th
    derivative and ``mu[i]`` the ``i``-th order Lipschitz coefficient
    (``mu[0]`` is the supremum of ``|f|``).  All entries are sampled maxima,
    hence lower bounds on the true constants.
    """

    order_n: int
    mu_tilde_1n: float
    pi_tilde: dict
    mu: dict
    sample_size: int = 0
    sample_radius: float = 0.0
    source: str = "fitted"

    def pi_range(self, a: int, b: int) -> float:
        """``max_{a <= i <= b} pi_tilde[i]``."""
        return max(self.pi_tilde[i] for i in range(a, b + 1))


def estimate_smoothness(obj: ObjectiveSpec, n: int, cfg: SampleConfig = SampleConfig()) -> SmoothnessEstimate:
    """Collect every sampled constant available for ``obj``."""
    pi = {i: estimate_derivative_growth(obj, i, n, cfg) for i in (1, 2)}
    for i, oracle in ((3, obj.third_op_norm), (4, obj.fourth_op_norm)):
        if oracle is not None:
            pi[i] = estimate_derivative_growth(obj, i, n, cfg)
    X = sample_points(cfg, obj.dim)
    mu = {
        0: float(max(abs(obj.value(x)) for x in X)) if len(X) else 0.0,
        1: estimate_lipschitz(obj.value, obj.dim, cfg),
        2: estimate_lipschitz(obj.gradient, obj.dim, cfg),
    }
    return SmoothnessEstimate(
        order_n=n,
        mu_tilde_1n=estimate_pseudo_lipschitz(obj, n, cfg),
        pi_tilde=pi,
        mu=mu,
        sample_size=cfg.n_pairs,
        sample_radius=cfg.radius,
    )
