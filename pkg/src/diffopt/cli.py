"""Command-line front end.

Subcommands ``run``, ``fig1``, ``verify``, ``bounds``, ``couple`` and
``zoo-list`` read an optional JSON config, write CSV series and JSON reports
into the output directory and print the main JSON report to stdout.

Exit codes: 0 success (including unsatisfied conditions), 2 configuration
error, 3 runtime failure or divergence when ``fail_on_divergence`` is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds, sampler, verify, zoo
from .errors import (ConfigError, DiffOptError, NegativeLogArgument, NotDissipative, NotUniform,
                     ParamOutOfRange)
from .objective import SampleConfig, estimate_smoothness

__all__ = ["main", "build_parser", "load_config", "SCHEMA_DIR"]

SCHEMA_DIR = Path(__file__).parent / "schemas"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class DivergenceFailure(DiffOptError):
    """A chain diverged while ``fail_on_divergence`` was requested."""


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite numbers to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _write_json(path: Path, payload: dict) -> dict:
    payload = _clean(payload)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return payload


def load_config(path: Optional[str]) -> dict:
    """Read a JSON config; an absent path gives an empty config."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


TOP_LEVEL_KEYS = {"zoo", "params", "chain", "replicas", "passage_level", "fail_on_divergence", "fig1", "verify",
                  "bounds", "couple", "output_dir"}


def _check_keys(cfg: dict) -> None:
    unknown = set(cfg) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")


def _threads(args) -> int:
    env = os.environ.get("DIFFOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"DIFFOPT_THREADS must be an integer, got {env!r}") from exc
    return max(1, int(args.threads))


def _entry(cfg: dict) -> zoo.ZooEntry:
    name = cfg.get("zoo", "ou")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    try:
        return zoo.build(name, params)
    except ParamOutOfRange as exc:
        raise ConfigError(str(exc)) from exc


def _chain_config(cfg: dict, entry: zoo.ZooEntry, seed: Optional[int]) -> sampler.ChainConfig:
    ch = dict(cfg.get("chain", {}))
    if "x0" not in ch:
        ch["x0"] = [0.0] * entry.objective.dim
    if len(ch["x0"]) != entry.objective.dim:
        raise ConfigError(f"x0 must have {entry.objective.dim} entries")
    if seed is not None:
        ch["seed"] = seed
    ch.setdefault("eta", 0.01)
    ch.setdefault("steps", 1000)
    allowed = {"eta", "steps", "x0", "seed", "record_every", "moment_orders", "threshold"}
    unknown = set(ch) - allowed
    if unknown:
        raise ConfigError(f"unknown chain keys {sorted(unknown)}")
    ch["x0"] = tuple(float(v) for v in ch["x0"])
    ch["steps"] = int(ch["steps"])
    try:
        return sampler.ChainConfig(**ch)
    except DiffOptError as exc:
        raise ConfigError(str(exc)) from exc


def _verify_config(cfg: dict, seed: Optional[int], threads: int) -> verify.VerifyConfig:
    vc = {k: v for k, v in cfg.get("verify", {}).items() if k not in ("verifiers", "s")}
    if seed is not None:
        vc["seed"] = seed
    vc["threads"] = threads
    try:
        return verify.VerifyConfig(**vc)
    except TypeError as exc:
        raise ConfigError(f"bad verify settings: {exc}") from exc


def cmd_run(args, cfg: dict, out: Path) -> int:
    entry = _entry(cfg)
    ccfg = _chain_config(cfg, entry, args.seed)
    replicas = int(args.replicas if args.replicas is not None else cfg.get("replicas", 1))
    if replicas < 1:
        raise ConfigError("replicas must be at least 1")
    traces = sampler.run_replicas(entry.diffusion, entry.objective, ccfg, replicas, _threads(args))
    level = float(cfg.get("passage_level", 1.0))
    f0 = entry.objective.value(np.asarray(ccfg.x0))
    for tr in traces:
        sampler.write_trace_csv(tr, out / f"trace_{tr.replica:04d}.csv")
        summary = tr.summary()
        summary.update(zoo=entry.name, first_passage=tr.first_passage(level), passage_level=level)
        _write_json(out / f"summary_{tr.replica:04d}.json", summary)
    best = [tr.best_f for tr in traces]
    agg = {
        "zoo": entry.name,
        "params": entry.params,
        "replicas": replicas,
        "eta": ccfg.eta,
        "steps": ccfg.steps,
        "seed": ccfg.seed,
        "f_x0": f0,
        "best_f_mean": float(np.mean(best)),
        "best_f_min": float(np.min(best)),
        "mean_f_mean": float(np.mean([tr.mean_f for tr in traces])),
        "n_diverged": sum(tr.diverged for tr in traces),
        "passage_level": level,
        "first_passage": [tr.first_passage(level) for tr in traces],
    }
    agg = _write_json(out / "aggregate.json", agg)
    print(json.dumps(agg, indent=2, sort_keys=True))
    if cfg.get("fail_on_divergence") and agg["n_diverged"]:
        raise DivergenceFailure(f"{agg['n_diverged']} replica(s) diverged")
    return EXIT_OK


def cmd_fig1(args, cfg: dict, out: Path) -> int:
    p = {"d": 2, "c": 10.0, "gamma": 1.0, "eta": 0.1, "x0": None, "seeds": 20, "steps": 10_000, "level": 1.0}
    unknown = set(cfg.get("fig1", {})) - set(p)
    if unknown:
        raise ConfigError(f"unknown fig1 keys {sorted(unknown)}")
    p.update(cfg.get("fig1", {}))
    if args.replicas is not None:
        p["seeds"] = args.replicas
    d = int(p["d"])
    x0 = tuple(float(v) for v in (p["x0"] if p["x0"] is not None else [90.0, 110.0] + [0.0] * (d - 2)))
    if len(x0) != d:
        raise ConfigError(f"x0 must have {d} entries")
    if not float(p["eta"]) > 0 or int(p["steps"]) < 1 or int(p["seeds"]) < 1:
        raise ConfigError("eta must be positive, steps and seeds at least 1")
    seed = 0 if args.seed is None else int(args.seed)
    threads = _threads(args)
    designed = zoo.sublinear_example(p["c"], d, p["gamma"])
    langevin = zoo.langevin_sublinear(p["c"], d, p["gamma"])
    ccfg = sampler.ChainConfig(eta=float(p["eta"]), steps=int(p["steps"]), x0=x0, seed=seed)
    runs = {
        "gd": [sampler.run_gd(designed.objective, ccfg.eta, ccfg.steps, x0)],
        "langevin": sampler.run_replicas(langevin.diffusion, langevin.objective, ccfg, int(p["seeds"]), threads),
        "diffusion": sampler.run_replicas(designed.diffusion, designed.objective, ccfg, int(p["seeds"]), threads),
    }
    level = float(p["level"])
    steps = ccfg.steps

    def padded(tr):
        f = np.full(steps, np.nan)
        f[: tr.f_values.size] = tr.f_values
        return f

    cols = {}
    for name, trs in runs.items():
        F = np.vstack([padded(tr) for tr in trs])
        with np.errstate(all="ignore"):
            cols[f"{name}_f"] = F[0]
            cols[f"{name}_mean_f"] = np.nanmean(F, axis=0) if np.isfinite(F).any() else F[0]
            cols[f"{name}_min_f"] = np.nanmin(F, axis=0) if np.isfinite(F).any() else F[0]
    with open(out / "fig1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + list(cols))
        for m in range(steps):
            w.writerow([m + 1] + [_fmt(cols[k][m]) for k in cols])
    rows = []
    with open(out / "fig1_seeds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "seed", "diverged", "diverged_at", "first_passage", "best_f"])
        for name, trs in runs.items():
            for tr in trs:
                fp = tr.first_passage(level)
                row = {"method": name, "seed": tr.replica, "diverged": bool(tr.diverged),
                       "diverged_at": tr.diverged_at, "first_passage": fp, "best_f": tr.best_f}
                rows.append(row)
                w.writerow([name, tr.replica, int(tr.diverged), "" if tr.diverged_at is None else tr.diverged_at,
                            "" if fp is None else fp, _fmt(tr.best_f)])
    summary = {
        "params": {**p, "x0": list(x0), "seed": seed},
        "methods": {
            name: {
                "diverged": [bool(tr.diverged) for tr in trs],
                "diverged_at": [tr.diverged_at for tr in trs],
                "first_passage": [tr.first_passage(level) for tr in trs],
                "best_f": [tr.best_f for tr in trs],
            }
            for name, trs in runs.items()
        },
    }
    summary = _write_json(out / "fig1_summary.json", summary)
    print(json.dumps(summary["methods"], sort_keys=True))
    return EXIT_OK


def _fmt(v) -> str:
    return "" if v is None or not np.isfinite(v) else repr(float(v))


VERIFIERS = ("growth", "dissipativity", "uniform")


def cmd_verify(args, cfg: dict, out: Path) -> int:
    entry = _entry(cfg)
    vcfg = _verify_config(cfg, args.seed, _threads(args))
    names = cfg.get("verify", {}).get("verifiers", list(VERIFIERS))
    unknown = set(names) - set(VERIFIERS) - {"distant"}
    if unknown:
        raise ConfigError(f"unknown verifiers {sorted(unknown)}")
    spec = entry.diffusion
    report = {"zoo": entry.name, "params": entry.params, "sample": {
        "n_samples": vcfg.n_samples, "r_max": vcfg.r_max, "n_pairs": vcfg.n_pairs,
        "pair_radius": vcfg.pair_radius, "seed": vcfg.seed}, "verifiers": {}}
    res = report["verifiers"]
    analytic = entry.analytic_constants or {}
    if "growth" in names:
        g = verify.fit_growth(spec, vcfg)
        res["growth"] = {"satisfied": True, "lambda_b": g.lambda_b, "lambda_sigma": g.lambda_sigma,
                         "lambda_a": g.lambda_a, "r": g.r}
    if "dissipativity" in names:
        try:
            dc = verify.fit_dissipativity(spec, vcfg)
            res["dissipativity"] = {"satisfied": True, "alpha": dc.alpha, "beta": dc.beta,
                                    "frontier_alpha": list(dc.frontier_alpha),
                                    "frontier_beta": list(dc.frontier_beta)}
        except NotDissipative as exc:
            res["dissipativity"] = {"satisfied": False, "reason": str(exc)}
    if "uniform" in names:
        try:
            rm = verify.uniform_dissipativity_rate(spec, 2, vcfg)
            res["uniform"] = {"satisfied": True, "k": rm.k, "amplitude": rm.amplitude, "p": rm.p}
        except NotUniform as exc:
            res["uniform"] = {"satisfied": False, "reason": str(exc)}
    if "distant" in names:
        s = float(cfg.get("verify", {}).get("s", 1.0))
        prof = verify.distant_profile(spec, s, vcfg)
        rm = verify.rate_from_distant(prof)
        res["distant"] = {"satisfied": True, "K": prof.K, "L": prof.L, "R": prof.R, "s": prof.s,
                          "k": rm.k, "amplitude": rm.amplitude}
    if "dissipativity" in analytic:
        report["analytic"] = {"alpha": analytic["dissipativity"].alpha, "beta": analytic["dissipativity"].beta}
    report = _write_json(out / "verify_report.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _bound_inputs(entry: zoo.ZooEntry, cfg: dict, vcfg: verify.VerifyConfig, n: int):
    """Analytic constants where available, fitted otherwise, with provenance."""
    an = entry.analytic_constants or {}
    prov = {}
    spec = entry.diffusion
    if "growth" in an:
        growth, prov["growth"] = an["growth"], "analytic"
    else:
        growth, prov["growth"] = verify.fit_growth(spec, vcfg), "fitted"
    if "dissipativity" in an:
        diss, prov["dissipativity"] = an["dissipativity"], "analytic"
    else:
        diss, prov["dissipativity"] = verify.fit_dissipativity(spec, vcfg), "fitted"
    if "rate" in an:
        rate, prov["rate"] = an["rate"], "analytic"
    else:
        rate, prov["rate"] = verify.uniform_dissipativity_rate(spec, 2, vcfg), "fitted"
    if "smoothness" in an:
        smooth, prov["smoothness"] = an["smoothness"], "analytic"
    else:
        smooth = estimate_smoothness(entry.objective, n, SampleConfig(n_pairs=vcfg.n_pairs // 10,
                                                                       radius=vcfg.pair_radius, seed=vcfg.seed))
        prov["smoothness"] = "fitted"
    which = cfg.get("bounds", {}).get("coefficients", "envelope")
    key = "coefficients_envelope" if which == "envelope" and "coefficients_envelope" in an else "coefficients"
    if key not in an:
        raise ConfigError(f"zoo entry {entry.name!r} provides no coefficient set for the Stein factors")
    prov["coefficients"] = "analytic"
    return growth, diss, rate, smooth, an[key], prov


def cmd_bounds(args, cfg: dict, out: Path) -> int:
    entry = _entry(cfg)
    bc = {"n": 1, "n_e": None, "theta": 1.0, "eta": 0.01, "M": 10_000, "x0": None, "enforce_threshold": False,
          "exponent": "main", "coefficients": "envelope"}
    unknown = set(cfg.get("bounds", {})) - set(bc)
    if unknown:
        raise ConfigError(f"unknown bounds keys {sorted(unknown)}")
    bc.update(cfg.get("bounds", {}))
    n = int(bc["n"])
    n_e = int(bc["n_e"]) if bc["n_e"] is not None else n + 4 + (n % 2)
    if n < 1 or n_e < n + 4 or n_e % 2:
        raise ConfigError("need n >= 1 and an even n_e >= n + 4")
    d = entry.objective.dim
    x0 = np.zeros(d) if bc["x0"] is None else np.asarray(bc["x0"], dtype=float)
    if x0.size != d:
        raise ConfigError(f"x0 must have {d} entries")
    vcfg = _verify_config(cfg, args.seed, _threads(args))
    growth, diss, rate, smooth, coeffs, prov = _bound_inputs(entry, cfg, vcfg, n)
    stein = bounds.stein_factors(rate, growth, diss, smooth, coeffs, n, exponent=bc["exponent"])
    c = bounds.c_constants(stein, growth, n, n_e)
    kap = bounds.kappa_r(n_e, diss.alpha, diss.beta, growth.lambda_a, growth.r)
    thr = bounds.step_threshold(diss.alpha, growth.lambda_b, growth.lambda_sigma, n_e)
    eta, M = float(bc["eta"]), int(bc["M"])
    x0m = float(np.linalg.norm(x0)) ** n_e
    warnings = []
    gamma = entry.params.get("gamma", 1.0)
    try:
        mu2 = smooth.mu.get(2, np.nan)
        sub = bounds.suboptimality_generalized_gibbs(gamma, float(bc["theta"]), d, diss.alpha, diss.beta, mu2)
    except NegativeLogArgument as exc:
        sub = float("nan")
        warnings.append(str(exc))
    if not eta < thr:
        msg = f"eta={eta:g} is not below the step threshold {thr:g}"
        if bc["enforce_threshold"]:
            raise ConfigError(msg)
        warnings.append(msg)
    brn = bounds.beta_rn(diss.alpha, diss.beta, growth.lambda_a, growth.r, n_e)
    rep = bounds.assemble_corollary(c, eta, M, kap, x0m, sub, thr if bc["enforce_threshold"] else None,
                                    growth=growth, dissipativity=diss, rate=rate, stein=stein,
                                    beta_rn_value=brn, provenance=prov)
    payload = rep.to_dict()
    payload["step_threshold"] = thr
    payload["integration_bound_general"] = bounds.integration_error_bound(*c, eta, M, n, kap, x0m)
    payload.update(zoo=entry.name, params=entry.params, n=n, n_e=n_e, theta=float(bc["theta"]))
    payload["warnings"] = list(payload["warnings"]) + warnings
    payload = _write_json(out / "bound_report.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_couple(args, cfg: dict, out: Path) -> int:
    entry = _entry(cfg)
    d = entry.objective.dim
    cc = {"x": [1.0] + [0.0] * (d - 1), "y": [0.0] * d, "horizon": 1.0, "reps": 1, "eta": 1e-3,
          "record_every": 1}
    unknown = set(cfg.get("couple", {})) - set(cc)
    if unknown:
        raise ConfigError(f"unknown couple keys {sorted(unknown)}")
    cc.update(cfg.get("couple", {}))
    if len(cc["x"]) != d or len(cc["y"]) != d:
        raise ConfigError(f"x and y must have {d} entries")
    reps = int(args.replicas if args.replicas is not None else cc["reps"])
    res = verify.simulate_coupling(entry.diffusion, cc["x"], cc["y"], float(cc["horizon"]), reps,
                                   float(cc["eta"]), 0 if args.seed is None else int(args.seed),
                                   int(cc["record_every"]))
    with open(out / "coupling.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mean_distance"])
        for t, m in zip(res.times, res.mean_distance):
            w.writerow([repr(float(t)), repr(float(m))])
    an = entry.analytic_constants or {}
    payload = {"zoo": entry.name, "params": entry.params, "x": cc["x"], "y": cc["y"],
               "horizon": cc["horizon"], "eta": cc["eta"], "reps": reps, "k_hat": res.k_hat,
               "n_diverged": res.n_diverged,
               "alpha": an["dissipativity"].alpha if "dissipativity" in an else None}
    payload = _write_json(out / "coupling.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_zoo_list(args, cfg: dict, out: Path) -> int:
    payload = {"entries": zoo.list_entries()}
    _write_json(out / "zoo.json", payload)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "fig1": cmd_fig1,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
    "couple": cmd_couple,
    "zoo-list": cmd_zoo_list,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffopt", description="Discretised diffusions for global optimisation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="root seed")
        p.add_argument("--out", default="diffopt_out", help="output directory")
        p.add_argument("--replicas", type=int, default=None, help="number of independent replicas")
        p.add_argument("--threads", type=int, default=1, help="worker threads (DIFFOPT_THREADS overrides)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        _check_keys(cfg)
        out = Path(cfg.get("output_dir", args.out)) if args.out == "diffopt_out" else Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DiffOptError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
