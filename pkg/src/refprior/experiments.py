"""Config-driven experiment runners behind the ``refprior`` command.

Every runner takes a JSON-style config dict, a master seed and an output
directory, fills in defaults, writes the effective config next to its
outputs and returns a small summary dict.  Randomness for each independent
cell comes from ``SeedSequence([seed, cell])`` so results do not depend on
how many cells run or in which order.  Wall-clock times go to
``timing.json`` only; every other file is byte-reproducible.
"""
from __future__ import annotations

import copy
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, evaluation
from .infobound import ANALYTIC_LOO, REALIZED_DATASET, InfoBoundConfig, train_info_bound
from .models import BernoulliMean, GaussianScale, model_from_dict
from .priors import ImplicitSampler, ParametricPrior, domain_map_for, prior_to_dict, sample_prior
from .svgd import Kernel, SvgdConfig, train_svgd

__all__ = [
    "ConfigError",
    "METHODS",
    "cell_rng",
    "effective_config",
    "run_recover_jeffreys",
    "run_stability",
    "run_train_info",
    "run_train_svgd",
    "run_baseline_berger",
    "run_baseline_mcmc",
    "run_eval_ks",
    "RUNNERS",
]

#: Fixed cell index of each recovery method; the truth sampler uses len(METHODS).
METHODS = ("parametric", "implicit", "particle", "berger", "mcmc", "uniform")
_RECOVERY_KINDS = ("BernoulliMean", "GaussianScale", "PoissonRate")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def cell_rng(seed: int, cell: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(cell)]))


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# -- defaults ---------------------------------------------------------------

_TRAIN = {"n_samples": 50, "n_obs": 1, "iterations": 250, "batch": 100, "max_mode": ANALYTIC_LOO}

_DEFAULTS = {
    "recover-jeffreys": {
        "model": {"kind": "BernoulliMean"},
        "seeds": [0],
        "bounds": None,
        "grid_size": 1000,
        "sizes": [250, 500, 1000],
        "alpha": 0.05,
        "methods": list(METHODS),
        "parametric": dict(_TRAIN, lr=1e-4, family=None, loc=0.0, log_scale=0.0),
        "implicit": dict(_TRAIN, lr=1e-3, latent_dim=5, hidden=[], activation="identity", out_map="exp"),
        "particle": {
            "n_particles": 50, "n_samples": 50, "n_obs": 1, "iterations": 250, "batch": 100,
            "lr": 1e-4, "eta": 0.1, "latent_dim": 5, "hidden": [], "activation": "identity",
            "out_map": "exp", "kernel": None,
        },
        "berger": {"J": 100, "S": 50, "N": 500},
        "mcmc": {"iterations": 10000, "S_t": 50, "keep": 1000, "x_grid_size": 1000},
    },
    "stability": {
        "model": {"kind": "GaussianScale", "params": {"mu": 0.0}},
        "seeds": [0, 1, 2],
        "sweep_a": {"dims": 5, "n_samples": [10, 50, 100]},
        "sweep_b": {"n_samples": 100, "dims": [2, 10, 50]},
        "train": {"n_obs": 1, "iterations": 250, "batch": 100, "lr": 1e-3, "max_mode": REALIZED_DATASET},
        "latent_dim": 5,
        "out_map": "exp",
        "window": 50,
    },
    "train-info": {
        "model": {"kind": "BernoulliMean"},
        "prior": {"type": "parametric", "family": None, "loc": 0.0, "log_scale": 0.0,
                  "latent_dim": 5, "hidden": [], "activation": "identity", "out_map": "exp"},
        "train": dict(_TRAIN, lr=1e-4, alpha="-inf"),
        "n_draws": 1000,
    },
    "train-svgd": {
        "model": {"kind": "BernoulliMean"},
        "sampler": {"latent_dim": 5, "hidden": [], "activation": "identity", "out_map": "exp"},
        "kernel": None,
        "train": {"n_particles": 50, "n_samples": 50, "n_obs": 1, "iterations": 250, "batch": 100,
                  "lr": 1e-4, "eta": 0.1},
        "n_draws": 1000,
    },
    "baseline-berger": {
        "model": {"kind": "BernoulliMean"},
        "bounds": None,
        "berger": {"J": 100, "S": 50, "N": 500, "G": 1000},
        "n_draws": 1000,
    },
    "baseline-mcmc": {
        "model": {"kind": "BernoulliMean"},
        "bounds": None,
        "mcmc": {"iterations": 10000, "S_t": 50, "keep": 1000, "x_grid_size": 1000},
    },
    "eval-ks": {
        "samples": {},
        "truth": {"model": {"kind": "BernoulliMean"}, "bounds": None, "grid_size": 1000},
        "sizes": [250, 500, 1000],
        "alpha": 0.05,
    },
}


def effective_config(experiment: str, config: dict) -> dict:
    """Defaults overlaid with ``config``, checked before any compute."""
    if experiment not in _DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(config) - set(_DEFAULTS[experiment]) - {"experiment"}
    if extra:
        raise ConfigError(f"unknown config keys for {experiment}: {sorted(extra)}")
    cfg = _merge(_DEFAULTS[experiment], config)
    cfg["experiment"] = experiment
    _validate(experiment, cfg)
    return cfg


def _model(cfg) -> object:
    try:
        return model_from_dict(cfg["model"])
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad model descriptor: {exc}") from None


def _bounds(cfg, model):
    b = cfg.get("bounds")
    if b is None:
        try:
            return baselines.default_bounds(model)
        except KeyError:
            raise ConfigError(f"no default bounds for {model.kind}") from None
    try:
        return baselines._check_bounds(b)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from None


def _validate(experiment, cfg):
    model = _model(cfg) if "model" in cfg else None
    try:
        if experiment == "recover-jeffreys":
            if model.kind not in _RECOVERY_KINDS:
                raise ConfigError(f"recover-jeffreys supports {_RECOVERY_KINDS}, got {model.kind}")
            unknown = set(cfg["methods"]) - set(METHODS)
            if unknown:
                raise ConfigError(f"unknown methods {sorted(unknown)}")
            if not cfg["seeds"] or not cfg["sizes"] or min(cfg["sizes"]) < 1:
                raise ConfigError("seeds and sizes must be nonempty, sizes positive")
            _bounds(cfg, model)
            _info_cfg(cfg["parametric"]).validate()
            _info_cfg(cfg["implicit"]).validate()
            _svgd_cfg(cfg["particle"]).validate()
            _kernel(cfg["particle"]["kernel"], model)
            _berger_cfg(cfg["berger"], _bounds(cfg, model), cfg["grid_size"]).validate()
            _mcmc_cfg(cfg["mcmc"], _bounds(cfg, model)).validate()
        elif experiment == "stability":
            if not isinstance(model, GaussianScale):
                raise ConfigError("stability runs on the diagonal GaussianScale model")
            if not cfg["seeds"]:
                raise ConfigError("seeds must be nonempty")
            for S in cfg["sweep_a"]["n_samples"] + [cfg["sweep_b"]["n_samples"]]:
                _info_cfg(dict(cfg["train"], n_samples=S)).validate()
            if min([cfg["sweep_a"]["dims"]] + list(cfg["sweep_b"]["dims"])) < 1:
                raise ConfigError("dims must be positive")
            if cfg["window"] < 1:
                raise ConfigError("window must be positive")
        elif experiment == "train-info":
            _info_cfg(cfg["train"]).validate()
            _build_prior(cfg["prior"], model)
        elif experiment == "train-svgd":
            _svgd_cfg(cfg["train"]).validate()
            _kernel(cfg["kernel"], model)
        elif experiment == "baseline-berger":
            _berger_cfg(cfg["berger"], _bounds(cfg, model), cfg["berger"].get("G", 1000)).validate()
        elif experiment == "baseline-mcmc":
            _mcmc_cfg(cfg["mcmc"], _bounds(cfg, model)).validate()
        elif experiment == "eval-ks":
            if not cfg["samples"]:
                raise ConfigError("eval-ks needs at least one samples file")
            _bounds(cfg["truth"], _model(cfg["truth"]))
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{experiment}: {exc}") from None


# -- builders ---------------------------------------------------------------


def _info_cfg(d) -> InfoBoundConfig:
    alpha = d.get("alpha", "-inf")
    return InfoBoundConfig(
        n_samples=int(d["n_samples"]), n_obs=int(d["n_obs"]), iterations=int(d["iterations"]),
        batch=int(d["batch"]), lr=float(d["lr"]), max_mode=d["max_mode"], alpha=float(alpha),
    )


def _svgd_cfg(d) -> SvgdConfig:
    keys = ("n_particles", "n_samples", "n_obs", "iterations", "batch")
    return SvgdConfig(**{k: int(d[k]) for k in keys}, lr=float(d["lr"]), eta=float(d["eta"]))


def _berger_cfg(d, bounds, G) -> baselines.BergerConfig:
    return baselines.BergerConfig(J=int(d["J"]), S=int(d["S"]), N=int(d["N"]), bounds=bounds, G=int(G))


def _mcmc_cfg(d, bounds) -> baselines.McmcConfig:
    return baselines.McmcConfig(
        iterations=int(d["iterations"]), S_t=int(d["S_t"]), keep=int(d["keep"]),
        bounds=bounds, x_grid_size=int(d["x_grid_size"]),
    )


def _default_family(model) -> str:
    lo, hi = model.domain
    if (lo, hi) == (0.0, 1.0):
        return "logitnormal"
    return "lognormal" if lo == 0.0 else "normal"


def _sampler(d, model) -> ImplicitSampler:
    out_map = domain_map_for(model, positive=d.get("out_map", "exp"))
    widths = [int(d["latent_dim"])] + [int(w) for w in d.get("hidden", [])] + [model.param_dim]
    return ImplicitSampler(tuple(widths), activation=d.get("activation", "identity"), out_map=out_map)


def _build_prior(d, model):
    """Returns ``(prior, init_kwargs)``."""
    if d.get("type", "parametric") == "parametric":
        prior = ParametricPrior(d.get("family") or _default_family(model), model.param_dim)
        return prior, {"loc": float(d.get("loc", 0.0)), "log_scale": float(d.get("log_scale", 0.0))}
    if d["type"] == "implicit":
        return _sampler(d, model), {}
    raise ConfigError(f"unknown prior type {d['type']!r}")


def _kernel(d, model) -> Kernel:
    if d is None:
        if isinstance(model, BernoulliMean):
            return Kernel("sobolev01", 2.0)
        return Kernel("rbf", "median", log_space=model.domain[0] == 0.0)
    return Kernel(d.get("kind", "rbf"), d.get("length_scale", "median"), bool(d.get("log_space", False)))


def _init(prior, kw, rng):
    if isinstance(prior, ParametricPrior):
        return prior.init_params(rng, **kw)
    return prior.init_params(rng)


# -- output helpers -----------------------------------------------------------


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _persist_config(out: Path, cfg: dict, seeds) -> None:
    _write(out / "config.json", _dump_json(dict(cfg, seeds=list(seeds))))


def _n_workers(n_tasks: int) -> int:
    raw = os.environ.get("REFPRIOR_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"REFPRIOR_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError("REFPRIOR_THREADS must be >= 1")
    return max(1, min(cap, n_tasks))


def _map_cells(fn, tasks):
    """Run ``fn`` over ``tasks`` (in a process pool when REFPRIOR_THREADS > 1).

    Results come back in task order regardless of worker count.
    """
    workers = _n_workers(len(tasks))
    if workers == 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _seeds(cfg, seed):
    return [int(seed)] if seed is not None else [int(s) for s in cfg["seeds"]]


# -- recover-jeffreys --------------------------------------------------------------


def _recovery_cell(cfg: dict, seed: int, method: str):
    """Train or run one method; returns ``(samples, seconds)``."""
    model = _model(cfg)
    bounds = _bounds(cfg, model)
    n_draws = max(cfg["sizes"])
    rng = cell_rng(seed, METHODS.index(method))
    start = time.perf_counter()
    if method == "parametric":
        d = cfg["parametric"]
        prior = ParametricPrior(d["family"] or _default_family(model), model.param_dim)
        lam0 = prior.init_params(rng, loc=d["loc"], log_scale=d["log_scale"])
        lam, _ = train_info_bound(model, prior, _info_cfg(d), rng, lam0)
        samples, _ = sample_prior(prior, lam, n_draws, rng)
    elif method == "implicit":
        prior = _sampler(cfg["implicit"], model)
        lam, _ = train_info_bound(model, prior, _info_cfg(cfg["implicit"]), rng, prior.init_params(rng))
        samples, _ = sample_prior(prior, lam, n_draws, rng)
    elif method == "particle":
        d = cfg["particle"]
        sampler = _sampler(d, model)
        lam, _ = train_svgd(model, sampler, _kernel(d["kernel"], model), _svgd_cfg(d), rng, sampler.init_params(rng))
        samples, _ = sample_prior(sampler, lam, n_draws, rng)
    elif method == "berger":
        dist = baselines.berger_grid_sampler(model, _berger_cfg(cfg["berger"], bounds, cfg["grid_size"]), rng)
        samples = dist.sample(n_draws, rng)
    elif method == "mcmc":
        mc = _mcmc_cfg(dict(cfg["mcmc"], keep=max(n_draws, cfg["mcmc"]["keep"])), bounds)
        samples = baselines.lw_mcmc(model, mc, rng)[-n_draws:]
    else:
        samples = baselines.uniform_sampler(bounds, n_draws, rng)
    return np.asarray(samples, dtype=float), time.perf_counter() - start


def run_recover_jeffreys(config: dict, seed=None, out_dir=".") -> dict:
    """Learn every approximation for one model and compare each with the Jeffreys prior.

    Writes, per seed, ``samples_<method>.csv``, ``ksd_curve.csv`` and
    ``summary.json`` under ``seed_<n>/``.
    """
    cfg = effective_config("recover-jeffreys", config)
    seeds = _seeds(cfg, seed)
    out = Path(out_dir)
    _persist_config(out, cfg, seeds)
    model = _model(cfg)
    bounds = _bounds(cfg, model)
    methods = [m for m in METHODS if m in cfg["methods"]]
    tasks = [(cfg, s, m) for s in seeds for m in methods]
    results = _map_cells(_recovery_cell, tasks)
    timing = {}
    summary = {"model": model.to_dict(), "bounds": list(bounds), "alpha": cfg["alpha"], "seeds": {}}
    truth = evaluation.true_rp_sampler(model, bounds, cfg["grid_size"])
    for s in seeds:
        sdir = out / f"seed_{s}"
        samples = {}
        for (_, ts, m), (x, secs) in zip(tasks, results):
            if ts == s:
                samples[m] = x
                timing[f"seed_{s}/{m}"] = secs
                _write(sdir / f"samples_{m}.csv", baselines.samples_to_csv(x))
        rows = evaluation.ksd_curve(samples, truth, cfg["sizes"], cell_rng(s, len(METHODS)), cfg["alpha"])
        _write(sdir / "ksd_curve.csv", evaluation.curve_to_csv(rows))
        n_final = max(cfg["sizes"])
        per = {}
        for m in methods:
            mine = [r for r in rows if r["method"] == m]
            final = [r for r in mine if r["n"] == n_final][0]
            per[m] = {
                "ksd": {str(r["n"]): r["ksd"] for r in mine},
                "final_ksd": final["ksd"],
                "threshold": final["threshold"],
                "reject": bool(final["ksd"] > final["threshold"]),
            }
        summary["seeds"][str(s)] = per
        _write(sdir / "summary.json", _dump_json(per))
    _write(out / "summary.json", _dump_json(summary))
    _write(out / "timing.json", _dump_json(timing))
    return summary


# -- stability ----------------------------------------------------------------


def _stability_cells(cfg):
    a, b = cfg["sweep_a"], cfg["sweep_b"]
    cells = [("a", int(a["dims"]), int(S)) for S in a["n_samples"]]
    cells += [("b", int(D), int(b["n_samples"])) for D in b["dims"]]
    return cells


def _stability_cell(cfg: dict, seed: int, index: int, sweep: str, dims: int, S: int):
    model = model_from_dict(dict(cfg["model"], dims=dims))
    sampler = ImplicitSampler((int(cfg["latent_dim"]), dims), "identity", domain_map_for(model, cfg["out_map"]))
    rng = cell_rng(seed, index)
    start = time.perf_counter()
    _, trace = train_info_bound(model, sampler, _info_cfg(dict(cfg["train"], n_samples=S)), rng, sampler.init_params(rng))
    return trace, time.perf_counter() - start


def run_stability(config: dict, seed=None, out_dir=".") -> dict:
    """Objective traces for an implicit prior on the diagonal Gaussian scale model.

    Sweep ``a`` varies the number of samples at fixed dimension, sweep ``b``
    the dimension at fixed sample count.  The summary holds the standard
    deviation of each trace's last ``window`` values and its median over seeds.
    """
    cfg = effective_config("stability", config)
    seeds = _seeds(cfg, seed)
    out = Path(out_dir)
    _persist_config(out, cfg, seeds)
    cells = _stability_cells(cfg)
    tasks = [(cfg, s, i) + c for s in seeds for i, c in enumerate(cells)]
    results = _map_cells(_stability_cell, tasks)
    w = int(cfg["window"])
    per_cell = {}
    timing = {}
    for (_, s, _, sweep, D, S), (trace, secs) in zip(tasks, results):
        name = f"{sweep}_dims{D}_S{S}"
        _write(out / f"trace_{name}_seed{s}.csv", trace.to_csv())
        timing[f"{name}_seed{s}"] = secs
        tail = np.asarray(trace.objective[-w:])
        per_cell.setdefault(name, {})[str(s)] = float(np.std(tail)) if tail.size else math.nan
    medians = {k: float(np.median(list(v.values()))) for k, v in per_cell.items()}
    summary = {"window": w, "std": per_cell, "median_std": medians}
    _write(out / "stability_summary.json", _dump_json(summary))
    _write(out / "timing.json", _dump_json(timing))
    return summary


# -- single-method commands ------------------------------------------------------------


def run_train_info(config: dict, seed=None, out_dir=".") -> dict:
    cfg = effective_config("train-info", config)
    s = _seeds({"seeds": [0]}, seed)[0]
    out = Path(out_dir)
    _persist_config(out, cfg, [s])
    model = _model(cfg)
    prior, kw = _build_prior(cfg["prior"], model)
    rng = cell_rng(s, 0)
    start = time.perf_counter()
    lam, trace = train_info_bound(model, prior, _info_cfg(cfg["train"]), rng, _init(prior, kw, rng))
    samples, _ = sample_prior(prior, lam, int(cfg["n_draws"]), rng)
    _write(out / "prior.json", _dump_json(prior_to_dict(prior, lam, [s])))
    _write(out / "trace.csv", trace.to_csv())
    _write(out / "samples.csv", baselines.samples_to_csv(samples))
    _write(out / "timing.json", _dump_json({"train": time.perf_counter() - start}))
    final = trace.objective[-1] if len(trace) else None
    return {"final_objective": final, "n_params": prior.n_params}


def run_train_svgd(config: dict, seed=None, out_dir=".") -> dict:
    cfg = effective_config("train-svgd", config)
    s = _seeds({"seeds": [0]}, seed)[0]
    out = Path(out_dir)
    _persist_config(out, cfg, [s])
    model = _model(cfg)
    sampler = _sampler(cfg["sampler"], model)
    rng = cell_rng(s, 0)
    start = time.perf_counter()
    lam, trace = train_svgd(model, sampler, _kernel(cfg["kernel"], model), _svgd_cfg(cfg["train"]), rng, sampler.init_params(rng))
    samples, _ = sample_prior(sampler, lam, int(cfg["n_draws"]), rng)
    _write(out / "prior.json", _dump_json(prior_to_dict(sampler, lam, [s])))
    _write(out / "trace.csv", trace.to_csv())
    _write(out / "samples.csv", baselines.samples_to_csv(samples))
    _write(out / "timing.json", _dump_json({"train": time.perf_counter() - start}))
    return {"final_step_norm": trace.objective[-1] if len(trace) else None}


def run_baseline_berger(config: dict, seed=None, out_dir=".") -> dict:
    cfg = effective_config("baseline-berger", config)
    s = _seeds({"seeds": [0]}, seed)[0]
    out = Path(out_dir)
    _persist_config(out, cfg, [s])
    model = _model(cfg)
    bcfg = _berger_cfg(cfg["berger"], _bounds(cfg, model), cfg["berger"]["G"])
    rng = cell_rng(s, METHODS.index("berger"))
    start = time.perf_counter()
    dist = baselines.berger_grid_sampler(model, bcfg, rng)
    samples = dist.sample(int(cfg["n_draws"]), rng)
    _write(out / "grid.csv", dist.to_csv())
    _write(out / "samples.csv", baselines.samples_to_csv(samples))
    _write(out / "timing.json", _dump_json({"berger": time.perf_counter() - start}))
    return {"grid_points": len(dist)}


def run_baseline_mcmc(config: dict, seed=None, out_dir=".") -> dict:
    cfg = effective_config("baseline-mcmc", config)
    s = _seeds({"seeds": [0]}, seed)[0]
    out = Path(out_dir)
    _persist_config(out, cfg, [s])
    model = _model(cfg)
    rng = cell_rng(s, METHODS.index("mcmc"))
    start = time.perf_counter()
    res = baselines.lw_mcmc(model, _mcmc_cfg(cfg["mcmc"], _bounds(cfg, model)), rng, return_state=True)
    _write(out / "samples.csv", baselines.samples_to_csv(res.samples))
    _write(out / "timing.json", _dump_json({"mcmc": time.perf_counter() - start}))
    summary = {"accepted": res.accepted, "kept": len(res.samples)}
    _write(out / "summary.json", _dump_json(summary))
    return summary


def _read_samples(path) -> np.ndarray:
    try:
        x = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read samples file {path}: {exc}") from None
    return x


def run_eval_ks(config: dict, seed=None, out_dir=".") -> dict:
    """KS curve of sample CSV files (as written by the other commands) against the true prior."""
    cfg = effective_config("eval-ks", config)
    s = _seeds({"seeds": [0]}, seed)[0]
    out = Path(out_dir)
    _persist_config(out, cfg, [s])
    t = cfg["truth"]
    model = _model(t)
    truth = evaluation.true_rp_sampler(model, _bounds(t, model), int(t["grid_size"]))
    samples = {name: _read_samples(p) for name, p in sorted(cfg["samples"].items())}
    try:
        rows = evaluation.ksd_curve(samples, truth, cfg["sizes"], cell_rng(s, len(METHODS)), cfg["alpha"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write(out / "ksd_curve.csv", evaluation.curve_to_csv(rows))
    return {"rows": len(rows)}


RUNNERS = {
    "train-info": run_train_info,
    "train-svgd": run_train_svgd,
    "baseline-berger": run_baseline_berger,
    "baseline-mcmc": run_baseline_mcmc,
    "eval-ks": run_eval_ks,
    "exp-jeffreys": run_recover_jeffreys,
    "exp-stability": run_stability,
}
