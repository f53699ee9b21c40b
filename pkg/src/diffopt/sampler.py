"""Euler discretisation of diffusions, gradient descent and chain statistics."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diffusion import DiffusionSpec
from .errors import NonFinite, ParamOutOfRange, UntrackedOrder
from .objective import ObjectiveSpec

__all__ = [
    "ChainConfig",
    "ChainTrace",
    "euler_step",
    "replica_rng",
    "run_chain",
    "run_replicas",
    "run_gd",
    "empirical_moment",
    "write_trace_csv",
]

DIVERGENCE_THRESHOLD = 1e9


@dataclass(frozen=True)
class ChainConfig:
    """Settings of one Euler chain.

    Parameters
    ----------
    eta : float
        Step size.
    steps : int
        Number of iterations ``M``.
    x0 : sequence of float
        Deterministic starting point.
    seed : int
        Root seed of the Gaussian stream.
    record_every : int
        Keep every ``record_every``-th iterate in the trace.
    moment_orders : sequence of int
        Orders ``n`` whose running averages of ``||X_m||^n`` are accumulated.
    threshold : float
        The chain is declared divergent once ``||X_m||`` exceeds this value.
    keep_f : bool
        Store per-step objective values (memory ``O(M)``).
    block : int
        Number of steps whose Gaussian draws are generated at once.
    """

    eta: float
    steps: int
    x0: Sequence[float]
    seed: int = 0
    record_every: int = 1
    moment_orders: Sequence[int] = (2,)
    threshold: float = DIVERGENCE_THRESHOLD
    keep_f: bool = True
    block: int = 4096

    def __post_init__(self):
        if not self.eta > 0:
            raise ParamOutOfRange("eta must be positive")
        if int(self.steps) < 1:
            raise ParamOutOfRange("steps must be at least 1")
        if int(self.record_every) < 1:
            raise ParamOutOfRange("record_every must be at least 1")
        if any(int(n) < 0 for n in self.moment_orders):
            raise ParamOutOfRange("moment orders must be nonnegative")


@dataclass
class ChainTrace:
    """Recorded chain ``X_1, ..., X_M``.

    ``f_values[m - 1]`` is ``f(X_m)``; ``best_index`` is the step attaining
    the smallest value; ``moments[n]`` is the average of ``||X_m||^n`` over
    the completed steps.  A divergent chain stops at the first step whose
    norm exceeds the threshold; that step is not included in the statistics.
    """

    dim: int
    recorded_steps: np.ndarray
    iterates: np.ndarray
    f_values: Optional[np.ndarray]
    best_index: int
    best_x: np.ndarray
    best_f: float
    mean_f: float
    moments: dict
    steps_run: int
    diverged: bool = False
    diverged_at: Optional[int] = None
    cause: str = ""
    replica: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def best(self) -> tuple:
        return self.best_index, self.best_x, self.best_f

    @property
    def running_avg_f(self) -> np.ndarray:
        """Running mean of ``f(X_1), ..., f(X_m)`` for each ``m``."""
        if self.f_values is None:
            raise UntrackedOrder("per-step values were not kept")
        return np.cumsum(self.f_values) / np.arange(1, self.f_values.size + 1)

    @property
    def best_so_far(self) -> np.ndarray:
        if self.f_values is None:
            raise UntrackedOrder("per-step values were not kept")
        return np.minimum.accumulate(self.f_values)

    def first_passage(self, level: float) -> Optional[int]:
        """First step ``m >= 1`` with ``f(X_m) <= level``, or ``None``."""
        if self.f_values is None:
            raise UntrackedOrder("per-step values were not kept")
        hit = np.flatnonzero(self.f_values <= level)
        return int(hit[0]) + 1 if hit.size else None

    def summary(self) -> dict:
        out = {
            "replica": self.replica,
            "steps_run": self.steps_run,
            "best_index": self.best_index,
            "best_x": [float(v) for v in self.best_x],
            "best_f": float(self.best_f),
            "mean_f": float(self.mean_f),
            "moments": {str(k): float(v) for k, v in self.moments.items()},
            "diverged": bool(self.diverged),
            "diverged_at": self.diverged_at,
            "cause": self.cause,
        }
        out.update(self.extra)
        return out


def euler_step(spec: DiffusionSpec, x, eta: float, w) -> np.ndarray:
    """``x + eta b(x) + sqrt(eta) sigma(x) w``."""
    if not eta > 0:
        raise ParamOutOfRange("eta must be positive")
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.l,):
        raise ParamOutOfRange(f"w must have shape ({spec.l},)")
    out = x + eta * spec.b(x) + np.sqrt(eta) * (spec.sig(x) @ w)
    if not np.all(np.isfinite(out)):
        raise NonFinite("Euler step produced a non-finite value")
    return out


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, replica)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


def _run_batch(spec: DiffusionSpec, obj: ObjectiveSpec, cfg: ChainConfig, replicas: Sequence[int]) -> list:
    d, l = spec.dim, spec.l
    R = len(replicas)
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.shape != (d,) or obj.dim != d:
        raise ParamOutOfRange("dimensions of x0, objective and diffusion disagree")
    rngs = [replica_rng(cfg.seed, r) for r in replicas]
    X = np.tile(x0, (R, 1))
    M = int(cfg.steps)
    orders = sorted({int(n) for n in cfg.moment_orders})
    alive = np.ones(R, dtype=bool)
    div_at = [None] * R
    cause = [""] * R
    count = np.zeros(R, dtype=np.int64)
    f_sum = np.zeros(R)
    mom_sum = {n: np.zeros(R) for n in orders}
    best_f = np.full(R, np.inf)
    best_i = np.zeros(R, dtype=np.int64)
    best_x = np.tile(x0, (R, 1))
    f_parts = [[] for _ in range(R)]
    rec_steps = [[] for _ in range(R)]
    rec_x = [[] for _ in range(R)]

    m0 = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while m0 < M and alive.any():
            B = min(int(cfg.block), M - m0)
            W = np.stack([g.standard_normal((B, l)) for g in rngs], axis=1)
            buf = np.empty((B, R, d))
            for t in range(B):
                X = spec.step_batch(X, W[t], cfg.eta)
                X[~alive] = 0.0
                buf[t] = X
            norms = np.linalg.norm(buf, axis=2)
            bad = ~np.isfinite(norms) | (norms > cfg.threshold)
            steps = np.arange(m0 + 1, m0 + B + 1)
            for j in range(R):
                if not alive[j]:
                    continue
                hits = np.flatnonzero(bad[:, j])
                n_ok = int(hits[0]) if hits.size else B
                if hits.size:
                    alive[j] = False
                    div_at[j] = int(steps[n_ok])
                    cause[j] = "threshold" if np.isfinite(norms[n_ok, j]) else "non-finite"
                if n_ok == 0:
                    continue
                xs = buf[:n_ok, j]
                fv = obj.values(xs)
                if not np.all(np.isfinite(fv)):
                    k = int(np.flatnonzero(~np.isfinite(fv))[0])
                    alive[j] = False
                    div_at[j] = int(steps[k])
                    cause[j] = "non-finite objective"
                    n_ok, xs, fv = k, xs[:k], fv[:k]
                    if n_ok == 0:
                        continue
                count[j] += n_ok
                f_sum[j] += fv.sum()
                nr = norms[:n_ok, j]
                for n in orders:
                    mom_sum[n][j] += np.sum(nr**n) if n else n_ok
                k = int(np.argmin(fv))
                if fv[k] < best_f[j]:
                    best_f[j], best_i[j], best_x[j] = fv[k], steps[k], xs[k]
                if cfg.keep_f:
                    f_parts[j].append(fv)
                sel = steps[:n_ok] % cfg.record_every == 0
                if sel.any():
                    rec_steps[j].append(steps[:n_ok][sel])
                    rec_x[j].append(xs[sel])
            m0 += B

    traces = []
    for j, r in enumerate(replicas):
        n = max(int(count[j]), 1)
        traces.append(ChainTrace(
            dim=d,
            recorded_steps=np.concatenate(rec_steps[j]) if rec_steps[j] else np.zeros(0, dtype=np.int64),
            iterates=np.concatenate(rec_x[j]) if rec_x[j] else np.zeros((0, d)),
            f_values=(np.concatenate(f_parts[j]) if f_parts[j] else np.zeros(0)) if cfg.keep_f else None,
            best_index=int(best_i[j]),
            best_x=best_x[j].copy(),
            best_f=float(best_f[j]) if count[j] else float(obj.value(x0)),
            mean_f=float(f_sum[j] / n) if count[j] else float("nan"),
            moments={k: float(v[j] / n) if count[j] else float("nan") for k, v in mom_sum.items()},
            steps_run=int(count[j]),
            diverged=div_at[j] is not None,
            diverged_at=div_at[j],
            cause=cause[j],
            replica=int(r),
        ))
    return traces


def run_chain(spec: DiffusionSpec, obj: ObjectiveSpec, cfg: ChainConfig, replica: int = 0) -> ChainTrace:
    """Run one Euler chain; deterministic given ``(cfg.seed, replica)``."""
    return _run_batch(spec, obj, cfg, [replica])[0]


def run_replicas(spec: DiffusionSpec, obj: ObjectiveSpec, cfg: ChainConfig, replicas: int,
                 threads: int = 1) -> list:
    """Run independent replicas ``0..replicas-1``.

    Each replica owns its Gaussian stream, so results do not depend on
    ``threads`` or on how replicas are grouped.
    """
    if int(replicas) < 1:
        raise ParamOutOfRange("replicas must be at least 1")
    ids = list(range(int(replicas)))
    threads = max(1, min(int(threads), len(ids)))
    if threads == 1:
        return _run_batch(spec, obj, cfg, ids)
    groups = [ids[i::threads] for i in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda g: _run_batch(spec, obj, cfg, g), groups))
    out = [t for part in parts for t in part]
    return sorted(out, key=lambda t: t.replica)


def run_gd(obj: ObjectiveSpec, eta: float, steps: int, x0, threshold: float = DIVERGENCE_THRESHOLD,
           record_every: int = 1, moment_orders: Sequence[int] = (2,)) -> ChainTrace:
    """Gradient descent ``x <- x - eta grad f(x)`` in the chain-trace format."""
    cfg = ChainConfig(eta=eta, steps=steps, x0=x0, record_every=record_every, moment_orders=moment_orders,
                      threshold=threshold)
    x = np.asarray(x0, dtype=float)
    fvals, xs = [], []
    diverged_at, cause = None, ""
    for m in range(1, int(steps) + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = x - eta * obj.gradient(x)
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx > threshold:
            diverged_at, cause = m, "threshold" if np.isfinite(nx) else "non-finite"
            break
        xs.append(x.copy())
        fvals.append(obj.value(x))
    return _trace_from_path(obj, cfg, np.array(xs).reshape(-1, obj.dim), np.array(fvals), diverged_at, cause)


def _trace_from_path(obj, cfg, xs, fvals, diverged_at, cause) -> ChainTrace:
    n = len(fvals)
    steps = np.arange(1, n + 1)
    sel = steps % cfg.record_every == 0
    norms = np.linalg.norm(xs, axis=1) if n else np.zeros(0)
    k = int(np.argmin(fvals)) if n else 0
    return ChainTrace(
        dim=obj.dim,
        recorded_steps=steps[sel],
        iterates=xs[sel],
        f_values=fvals,
        best_index=k + 1 if n else 0,
        best_x=xs[k].copy() if n else np.asarray(cfg.x0, dtype=float),
        best_f=float(fvals[k]) if n else float(obj.value(cfg.x0)),
        mean_f=float(fvals.mean()) if n else float("nan"),
        moments={o: float(np.mean(norms**o)) if n else float("nan") for o in cfg.moment_orders},
        steps_run=n,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
        cause=cause,
    )


def empirical_moment(trace: ChainTrace, n_e: int) -> float:
    """Average of ``||X_m||^{n_e}`` over the chain."""
    if n_e == 0:
        return 1.0
    if n_e not in trace.moments:
        raise UntrackedOrder(f"moment order {n_e} was not tracked")
    return trace.moments[n_e]


def write_trace_csv(trace: ChainTrace, path) -> None:
    """Write recorded iterates with columns step, x_1..x_d, f, best_f, running_avg_f."""
    header = ["step"] + [f"x_{i + 1}" for i in range(trace.dim)] + ["f", "best_f", "running_avg_f"]
    idx = trace.recorded_steps - 1
    f = trace.f_values[idx] if trace.f_values is not None else np.full(idx.size, np.nan)
    best = trace.best_so_far[idx] if trace.f_values is not None else np.full(idx.size, np.nan)
    avg = trace.running_avg_f[idx] if trace.f_values is not None else np.full(idx.size, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(idx.size):
            w.writerow([int(trace.recorded_steps[k])] + [repr(float(v)) for v in trace.iterates[k]]
                       + [repr(float(f[k])), repr(float(best[k])), repr(float(avg[k]))])
