"""Built-in objectives and diffusions with analytic constants."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bounds import CoefficientSet
from .diffusion import (
    DiffusionSpec,
    TargetMeasure,
    drift_from_invariant,
    generalized_gibbs_target,
    gibbs_diffusion,
    gibbs_target,
)
from .errors import ConfigError, ParamOutOfRange
from .objective import ObjectiveSpec, SmoothnessEstimate
from .verify import DissipativityConstants, GrowthConstants, RateModel

__all__ = [
    "ZooEntry",
    "ou_baseline",
    "sublinear_example",
    "sublinear_coefficients",
    "langevin_diffusion",
    "regularized_loss_example",
    "pseudo_huber_delta_conditions",
    "make_dataset",
    "load_dataset_csv",
    "quadratic_example",
    "REGISTRY",
    "build",
    "list_entries",
]


@dataclass
class ZooEntry:
    """Objective, diffusion and whatever constants are known in closed form."""

    name: str
    objective: ObjectiveSpec
    diffusion_builder: Callable[..., DiffusionSpec]
    params: dict = field(default_factory=dict)
    target: Optional[TargetMeasure] = None
    analytic_constants: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def diffusion(self) -> DiffusionSpec:
        return self.diffusion_builder()


def _radial_sup(deriv: Callable[[np.ndarray], np.ndarray]) -> float:
    u = np.linspace(0.0, 50.0, 500_001)
    return float(np.max(np.abs(deriv(u))))


# one-dimensional profiles along lines: j(u) = sqrt(1+u^2), l(u) = 1/j(u), k(u) = log(1+u^2)
_J = {
    1: lambda u: u / np.sqrt(1 + u**2),
    2: lambda u: (1 + u**2) ** -1.5,
    3: lambda u: -3 * u * (1 + u**2) ** -2.5,
    4: lambda u: (12 * u**2 - 3) * (1 + u**2) ** -3.5,
}
_L = {
    0: lambda u: (1 + u**2) ** -0.5,
    1: lambda u: -u * (1 + u**2) ** -1.5,
    2: lambda u: (2 * u**2 - 1) * (1 + u**2) ** -2.5,
}
_K = {
    1: lambda u: 2 * u / (1 + u**2),
    2: lambda u: 2 * (1 - u**2) / (1 + u**2) ** 2,
    3: lambda u: 4 * u * (u**2 - 3) / (1 + u**2) ** 3,
    4: lambda u: -12 * (u**4 - 6 * u**2 + 1) / (1 + u**2) ** 4,
}
_SUP_J = {i: _radial_sup(f) for i, f in _J.items()}
_SUP_L = {i: _radial_sup(f) for i, f in _L.items()}
_SUP_K = {i: _radial_sup(f) for i, f in _K.items()}


def ou_baseline(d: int = 2, gamma: float = 1.0) -> ZooEntry:
    """``f = ||x||^2 / 2`` with the Gibbs Langevin diffusion ``b = -x``, ``sigma = sqrt(2/gamma) I``."""
    if d < 1 or not gamma > 0:
        raise ParamOutOfRange("d must be positive and gamma positive")
    s = np.sqrt(2.0 / gamma)
    obj = ObjectiveSpec(
        dim=d,
        eval=lambda x: 0.5 * float(x @ x),
        grad=lambda x: np.array(x, dtype=float),
        hess=lambda x: np.eye(d),
        third_op_norm=lambda x: 0.0,
        fourth_op_norm=lambda x: 0.0,
        known_min=(np.zeros(d), 0.0),
        label="ou",
        eval_batch=lambda X: 0.5 * np.sum(X**2, axis=1),
    )

    def builder():
        return DiffusionSpec(
            dim=d,
            drift=lambda x: -np.asarray(x, dtype=float),
            sigma=lambda x: s * np.eye(d),
            covariance=lambda x: s**2 * np.eye(d),
            div_m=lambda x: np.zeros(d),
            label=f"ou(d={d},gamma={gamma:g})",
            drift_batch=lambda X: -X,
            noise_batch=lambda X, W: s * W,
        )

    consts = {
        "growth": GrowthConstants(4.0, 4.0 * s * np.sqrt(d), 4.0 * s**2, 1, "analytic"),
        "dissipativity": DissipativityConstants(2.0, 2.0 * d / gamma, source="analytic"),
        "rate": RateModel(p=2, amplitude=1.0, k=2.0, source="analytic"),
        "smoothness": SmoothnessEstimate(1, 0.5, {1: 1.0, 2: 1.0, 3: 0.0, 4: 0.0}, {0: np.inf, 1: np.inf, 2: 1.0},
                                         source="analytic"),
        "coefficients": CoefficientSet(
            mu_b={1: 1.0, 2: 0.0, 3: 0.0, 4: 0.0},
            mu_sigma={i: 0.0 for i in range(1, 5)},
            phi_sigma={i: 0.0 for i in range(1, 5)},
            pi_sigma={i: 0.0 for i in range(1, 4)},
            pi_sigma_inv={0: 1.0 / (2.0 * s), 1: 0.0, 2: 0.0},
        ),
        "stationary_mean_f": d / (2.0 * gamma),
        "euler_variance": lambda eta: 2.0 / ((2.0 - eta) * gamma),
    }
    return ZooEntry("ou", obj, builder, {"d": d, "gamma": gamma}, gibbs_target(obj, gamma), consts,
                    "Ornstein-Uhlenbeck baseline; every constant is closed form.")


def _sublinear_objective(c: float, d: int) -> ObjectiveSpec:
    def f(x):
        return c * np.log1p(0.5 * float(x @ x))

    def grad(x):
        return c * np.asarray(x, dtype=float) / (1.0 + 0.5 * float(x @ x))

    def hess(x):
        q = 1.0 + 0.5 * float(x @ x)
        return c * (np.eye(d) / q - np.outer(x, x) / q**2)

    phi = np.linspace(0.0, np.pi, 1441)

    def op_norm(i):
        # symmetric tensor: the operator norm is the largest directional derivative
        def fun(x):
            r = float(np.linalg.norm(x))
            q = 1.0 + 0.5 * (r * np.sin(phi)) ** 2
            u = r * np.cos(phi) / np.sqrt(2.0 * q)
            return float(np.max(np.abs(c * (2.0 * q) ** (-i / 2.0) * _K[i](u))))
        return fun

    return ObjectiveSpec(
        dim=d, eval=f, grad=grad, hess=hess,
        third_op_norm=op_norm(3), fourth_op_norm=op_norm(4),
        known_min=(np.zeros(d), 0.0), label=f"sublinear(c={c:g})",
        eval_batch=lambda X: c * np.log1p(0.5 * np.sum(X**2, axis=1)),
    )


def sublinear_coefficients(c: float, d: int, gamma: float, envelope: bool = False) -> CoefficientSet:
    """Lipschitz coefficients of ``b_gamma`` and ``sigma_gamma`` for the sublinear example.

    With ``envelope=True`` the drift and ``sigma`` coefficients are replaced by
    their suprema over ``gamma >= 1`` while ``sigma^{-1}`` keeps its exact
    ``sqrt(gamma)`` scaling.
    """
    sg = 1.0 if envelope else 1.0 / np.sqrt(gamma)
    mu1b = c / 2.0 if envelope else c / 2.0 - 1.0 / (2.0 * gamma)
    mu_s = {1: sg * _SUP_J[1] / np.sqrt(2.0)}
    for i in (2, 3, 4):
        mu_s[i] = sg * 2.0 ** (-i / 2.0) * _SUP_J[i]
    inv = {i: np.sqrt(gamma) * 2.0 ** (-i / 2.0) * _SUP_L[i] / 2.0 for i in (0, 1, 2)}
    return CoefficientSet(
        mu_b={1: mu1b, 2: 0.0, 3: 0.0, 4: 0.0},
        mu_sigma=mu_s,
        phi_sigma={i: np.sqrt(d) * v for i, v in mu_s.items()},
        pi_sigma={i: mu_s[i] / 2.0 for i in (1, 2, 3)},
        pi_sigma_inv=inv,
        source="analytic-envelope" if envelope else "analytic",
    )


def sublinear_example(c: float = 10.0, d: int = 2, gamma: float = 1.0) -> ZooEntry:
    """``f = c log(1 + ||x||^2 / 2)`` with ``sigma = sqrt(1 + ||x||^2 / 2) I`` targeting ``exp(-gamma f)``."""
    if not c > (d + 3) / 2.0:
        raise ParamOutOfRange("c must exceed (d + 3) / 2")
    if not gamma >= 1:
        raise ParamOutOfRange("gamma must be at least 1")
    obj = _sublinear_objective(c, d)
    slope = -c / 2.0 + 1.0 / (2.0 * gamma)
    rg = np.sqrt(gamma)

    def sigma(x):
        return np.sqrt(1.0 + 0.5 * float(x @ x)) * np.eye(d)

    def builder():
        spec = gibbs_diffusion(
            obj, sigma, gamma,
            covariance=lambda x: (1.0 + 0.5 * float(x @ x)) * np.eye(d),
            div_m=lambda x: np.asarray(x, dtype=float),
            label=f"sublinear(c={c:g},d={d},gamma={gamma:g})",
        )
        return dataclasses.replace(
            spec,
            drift_batch=lambda X: slope * X,
            noise_batch=lambda X, W: np.sqrt(1.0 + 0.5 * np.sum(X**2, axis=1))[:, None] * W / rg,
        )

    alpha = c - (d + 3) / (2.0 * gamma)
    lam_b = 4.0 * (c / 2.0 - 1.0 / (2.0 * gamma))
    pi_f = {1: c * _SUP_K[1] / np.sqrt(2.0)}
    for i in (2, 3, 4):
        pi_f[i] = c * 2.0 ** (-i / 2.0) * _SUP_K[i]
    consts = {
        "growth": GrowthConstants(lam_b, 4.0 * np.sqrt(d / gamma), 4.0 / gamma, 2, "analytic"),
        "dissipativity": DissipativityConstants(alpha, d / gamma, source="analytic"),
        "rate": RateModel(p=2, amplitude=1.0, k=alpha, source="analytic"),
        "smoothness": SmoothnessEstimate(1, c / np.sqrt(2.0), pi_f, {0: np.inf, 1: c / np.sqrt(2.0), 2: c},
                                         source="analytic"),
        "coefficients": sublinear_coefficients(c, d, gamma),
        "coefficients_envelope": sublinear_coefficients(c, d, gamma, envelope=True),
        "sharp_alpha": c - (d + 2) / (2.0 * gamma),
        "sharp_uniform_k": c - 1.0 / gamma - d / (2.0 * gamma),
    }
    return ZooEntry("sublinear", obj, builder, {"c": c, "d": d, "gamma": gamma}, gibbs_target(obj, gamma), consts,
                    "Sublinear objective with a linearly growing diffusion coefficient.")


def langevin_diffusion(obj: ObjectiveSpec, gamma: float = 1.0,
                       grad_batch: Optional[Callable] = None) -> DiffusionSpec:
    """Gibbs Langevin diffusion ``b = -grad f``, ``sigma = sqrt(2 / gamma) I``."""
    d = obj.dim
    s = np.sqrt(2.0 / gamma)
    return DiffusionSpec(
        dim=d,
        drift=lambda x: -obj.gradient(x),
        sigma=lambda x: s * np.eye(d),
        covariance=lambda x: s**2 * np.eye(d),
        div_m=lambda x: np.zeros(d),
        label=f"langevin({obj.label},gamma={gamma:g})",
        drift_batch=None if grad_batch is None else (lambda X: -grad_batch(X)),
        noise_batch=None if grad_batch is None else (lambda X, W: s * W),
    )


def langevin_sublinear(c: float = 10.0, d: int = 2, gamma: float = 1.0) -> ZooEntry:
    """The sublinear objective paired with the plain Langevin diffusion."""
    obj = _sublinear_objective(c, d)

    def grad_batch(X):
        return c * X / (1.0 + 0.5 * np.sum(X**2, axis=1))[:, None]

    return ZooEntry("langevin_sublinear", obj, lambda: langevin_diffusion(obj, gamma, grad_batch),
                    {"c": c, "d": d, "gamma": gamma}, gibbs_target(obj, gamma), {},
                    "Langevin baseline on the sublinear objective (not dissipative).")


def _sech2(u):
    e = np.exp(-2.0 * np.abs(u))
    return 4.0 * e / (1.0 + e) ** 2


_LOSSES = {
    "sigmoid": (lambda r, y: np.tanh((r - y) ** 2),
                lambda r, y: 2.0 * (r - y) * _sech2((r - y) ** 2)),
    "sigmoid_margin": (lambda r, y: 1.0 - np.tanh(y * r),
                       lambda r, y: -y * _sech2(y * r)),
    "student_t": (lambda r, y: np.log1p((r - y) ** 2),
                  lambda r, y: 2.0 * (r - y) / (1.0 + (r - y) ** 2)),
}


def _blake_zisserman(eps):
    def psi(r, y):
        return -np.log(np.exp(-(r - y) ** 2) + eps)

    def dpsi(r, y):
        e = np.exp(-(r - y) ** 2)
        return 2.0 * (r - y) * e / (e + eps)

    return psi, dpsi


def _ph_h(z):
    """``g_1(z) / z`` for the pseudo-Huber regulariser, stable at ``z = 0``."""
    return 0.5 / (np.sqrt(1.0 + 0.5 * z) + 1.0)


def regularized_loss_example(loss_kind: str, data, reg_kind: str = "pseudo_huber", lam: float = 1.0,
                             gamma: float = 1.0, eps: float = 0.01) -> ZooEntry:
    """Average loss over data plus a ridge or pseudo-Huber regulariser.

    ``data`` is ``(V, y)`` with covariates ``V`` of shape ``(L, d)``.  For the
    pseudo-Huber regulariser ``lam (sqrt(1 + ||x||^2 / 2) - 1)`` the
    covariance is ``a(x) = I + x x^T g_1(||x||^2) / ||x||^2`` with
    ``g_1(z) = sqrt(1 + z/2) - 1``; for ridge ``(lam / 2) ||x||^2`` it is ``I``.
    """
    V, y = data
    V = np.atleast_2d(np.asarray(V, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if V.shape[0] == 0 or V.shape[0] != y.size:
        raise ParamOutOfRange("data must be a nonempty (V, y) pair of matching length")
    if not lam > 0 or not gamma > 0:
        raise ParamOutOfRange("lam and gamma must be positive")
    if loss_kind == "blake_zisserman":
        if not eps > 0:
            raise ParamOutOfRange("eps must be positive")
        psi, dpsi = _blake_zisserman(eps)
    elif loss_kind in _LOSSES:
        psi, dpsi = _LOSSES[loss_kind]
    else:
        raise ParamOutOfRange(f"unknown loss {loss_kind!r}")
    if reg_kind not in ("ridge", "pseudo_huber"):
        raise ParamOutOfRange(f"unknown regulariser {reg_kind!r}")
    L, d = V.shape

    if reg_kind == "ridge":
        def reg(x):
            return 0.5 * lam * float(x @ x)

        def reg_grad(x):
            return lam * x

        def cov(x):
            return np.eye(d)

        def sig(x):
            return np.eye(d)

        def div(x):
            return np.zeros(d)

        rho_p0 = lam
    else:
        def reg(x):
            return lam * (np.sqrt(1.0 + 0.5 * float(x @ x)) - 1.0)

        def reg_grad(x):
            return lam * x / (2.0 * np.sqrt(1.0 + 0.5 * float(x @ x)))

        def cov(x):
            return np.eye(d) + np.outer(x, x) * _ph_h(float(x @ x))

        def sig(x):
            z = float(x @ x)
            return np.eye(d) + np.outer(x, x) * (_ph_h(z) / ((1.0 + 0.5 * z) ** 0.25 + 1.0))

        def div(x):
            z = float(x @ x)
            return np.asarray(x, dtype=float) * ((d - 1) * _ph_h(z) + 0.5 / np.sqrt(1.0 + 0.5 * z))

        rho_p0 = lam / 2.0

    def f(x):
        x = np.asarray(x, dtype=float)
        return float(np.mean(psi(V @ x, y))) + reg(x)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return V.T @ dpsi(V @ x, y) / L + reg_grad(x)

    obj = ObjectiveSpec(dim=d, eval=f, grad=grad, label=f"{loss_kind}+{reg_kind}")

    def builder():
        return gibbs_diffusion(obj, sig, gamma, covariance=cov, div_m=div,
                               label=f"regularized({loss_kind},{reg_kind},lam={lam:g},gamma={gamma:g})")

    consts = {"K_a": rho_p0, "K_m": rho_p0 / 2.0, "rho_prime_0": rho_p0}
    return ZooEntry("regularized", obj, builder,
                    {"loss_kind": loss_kind, "reg_kind": reg_kind, "lam": lam, "gamma": gamma, "eps": eps},
                    gibbs_target(obj, gamma), consts,
                    "Regularised loss; K_m from the regulariser, L_m and R_m must be fitted.")


def pseudo_huber_delta_conditions(lam: float = 1.0, z=None) -> dict:
    """Smallest ``delta_1, delta_2, delta_3`` satisfying the regulariser conditions on a grid.

    Conditions: ``delta_3 rho'(z) >= sqrt(max(0, -rho'(0) z rho'''(z)))`` and
    ``4 g_1'(z)^2 / delta_2 <= g_1(z) / z <= delta_1``.
    """
    z = np.logspace(-6, 6, 4001) if z is None else np.asarray(z, dtype=float)
    rp = lam / (2.0 * np.sqrt(1.0 + z))
    rppp = 3.0 * lam / (8.0 * (1.0 + z) ** 2.5)
    g_over_z = _ph_h(z)
    g1p = 1.0 / (4.0 * np.sqrt(1.0 + z / 2.0))
    d3 = np.max(np.sqrt(np.maximum(0.0, -(lam / 2.0) * z * rppp)) / rp)
    d1 = np.max(g_over_z)
    d2 = np.max(4.0 * g1p**2 / g_over_z)
    return {"delta_1": float(d1), "delta_2": float(d2), "delta_3": float(d3)}


def make_dataset(L: int = 50, d: int = 2, seed: int = 0, loss_kind: str = "student_t", noise: float = 0.5):
    """Gaussian covariates with linear outcomes (or signs for the margin loss)."""
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((L, d))
    x_true = rng.standard_normal(d)
    y = V @ x_true + noise * rng.standard_normal(L)
    if loss_kind == "sigmoid_margin":
        y = np.where(y >= 0, 1.0, -1.0)
    return V, y


def load_dataset_csv(path):
    """Read rows ``v_1..v_d, y`` (header optional)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise ConfigError(f"non-numeric row in {path}")
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ConfigError(f"{path} must have at least two columns")
    return arr[:, :-1], arr[:, -1]


def quadratic_example(A=None, b=None, gamma: float = 1.0, theta: float = 1.0, d: Optional[int] = None) -> ZooEntry:
    """``f(x) = <x - b, A (x - b)>`` with target ``exp(-gamma f^theta)``."""
    if A is None:
        d = 2 if d is None else d
        A = np.eye(d)
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
    if A.shape != (d, d) or np.min(np.linalg.eigvalsh(0.5 * (A + A.T))) <= 0:
        raise ParamOutOfRange("A must be symmetric positive definite")
    obj = ObjectiveSpec(
        dim=d,
        eval=lambda x: float((x - b) @ A @ (x - b)),
        grad=lambda x: 2.0 * A @ (x - b),
        hess=lambda x: 2.0 * A,
        known_min=(b.copy(), 0.0),
        label="quadratic",
        eval_batch=lambda X: np.einsum("ni,ij,nj->n", X - b, A, X - b),
    )
    target = generalized_gibbs_target(obj, gamma, theta, f_star=0.0)

    def builder():
        a = lambda x: (2.0 / gamma) * np.eye(d)  # noqa: E731
        drift = drift_from_invariant(target, a, div_m=lambda x: np.zeros(d))
        s = np.sqrt(2.0 / gamma)
        return DiffusionSpec(dim=d, drift=drift, sigma=lambda x: s * np.eye(d), covariance=a,
                             div_m=lambda x: np.zeros(d), label=f"quadratic(gamma={gamma:g},theta={theta:g})")

    consts = {"exact_suboptimality": None, "alpha_exp": theta}
    return ZooEntry("quadratic", obj, builder, {"gamma": gamma, "theta": theta}, target, consts,
                    "Quadratic objective; the expected suboptimality has a closed form.")


def _regularized_from_params(loss_kind="student_t", reg_kind="pseudo_huber", lam=1.0, gamma=1.0, eps=0.01,
                             L=50, d=2, seed=0, data_csv=None):
    """Regularised robust regression on a synthetic or CSV dataset."""
    data = load_dataset_csv(data_csv) if data_csv else make_dataset(L, d, seed, loss_kind)
    return regularized_loss_example(loss_kind, data, reg_kind, lam, gamma, eps)


REGISTRY = {
    "ou": ou_baseline,
    "sublinear": sublinear_example,
    "langevin_sublinear": langevin_sublinear,
    "regularized": _regularized_from_params,
    "quadratic": quadratic_example,
}


def build(name: str, params: Optional[dict] = None) -> ZooEntry:
    """Construct a registry entry from a parameter map."""
    if name not in REGISTRY:
        raise ConfigError(f"unknown zoo entry {name!r}; choose from {sorted(REGISTRY)}")
    try:
        return REGISTRY[name](**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from exc


def list_entries() -> list:
    return [{"name": k, "doc": ((v.__doc__ or "").strip().splitlines() or [""])[0]} for k, v in REGISTRY.items()]
