"""Command-line harness.

Every subcommand resolves its parameters from an optional flat config file
(JSON object, one level deep) overridden by flags, runs one pipeline, and
writes its artifacts plus ``manifest.json`` (the fully resolved parameters;
re-running from a manifest reproduces the outputs byte for byte) and
``summary.json`` (headline numbers) into the output directory.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from . import book as book_mod
from . import decay as decay_mod
from . import execution as exec_mod
from . import impact as impact_mod
from . import simulate as sim_mod
from ._io import ensure_dir, fmt, read_json, write_csv, write_json
from .errors import ParameterError
from .sizes import RandomSource, TailDistribution

COMMANDS = ("book", "simulate", "decay", "renorm", "aggregate", "exec", "calibrate")


@dataclass
class ExperimentConfig:
    command: str
    parameters: Dict[str, object]
    output_dir: str
    seed: int


# per-command parameter schema: name -> (type, default); required if default is None
SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "book": {"gamma": (float, None), "pmax": (int, 2000), "l0": (float, 1.0)},
    "simulate": {"gamma": (float, None), "mu": (float, 1.0), "horizon": (int, 100_000),
                 "policy": (str, sim_mod.ADAPTIVE), "pmax": (int, 1000),
                 "lmax": (float, math.inf)},
    "decay": {"delta": (float, None), "tmax": (float, 1000.0), "points": (int, 200)},
    "renorm": {"gamma": (float, None), "mu": (float, 1.0), "mu-tilde": (float, 0.001),
               "c": (float, 1.0), "lmax": (float, 1e4), "replicas": (int, 2000),
               "la-min": (float, 0.001), "la-max": (float, 10.0), "la-points": (int, 8)},
    "aggregate": {"gamma": (float, None), "c": (float, 1.0), "lmax": (float, 100.0),
                  "window": (int, 1000), "replicas": (int, 2), "trades": (int, 400_000),
                  "windows": (int, 50_000)},
    "exec": {"delta": (float, None), "l0": (float, 1.0), "steps": (int, 5),
             "lam": (float, -1.0), "vwap-la": (float, 0.0), "gamma": (float, 1.5),
             "lmax": (float, 1e3), "replicas": (int, 2000), "mu": (float, 1.0),
             "lambda-risk": (float, 0.0)},
    "calibrate": {"gamma": (float, None), "sigma": (float, None), "mu": (float, None),
                  "lmax": (float, math.inf)},
}


def parse_config(argv: List[str]) -> ExperimentConfig:
    """Resolve command, config file, flag overrides; unknown keys rejected."""
    parser = argparse.ArgumentParser(prog="impactlab", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out")
    parser.add_argument("--threads", type=int, default=1)
    known, rest = parser.parse_known_args(argv)

    schema = SCHEMAS[known.command]
    values: Dict[str, object] = {k: d for k, (_, d) in schema.items() if d is not None}

    if known.config:
        file_values = read_json(known.config)
        for key, val in file_values.items():
            if key in ("command", "seed", "out", "threads"):
                continue
            if key not in schema:
                raise ParameterError(f"unknown key {key!r} for command {known.command!r}")
            values[key] = schema[key][0](val)
        if "seed" in file_values and "--seed" not in argv:
            known.seed = int(file_values["seed"])

    flag_parser = argparse.ArgumentParser(prog=f"impactlab {known.command}")
    for key, (typ, _) in schema.items():
        flag_parser.add_argument(f"--{key}", type=typ, default=None)
    flags = flag_parser.parse_args(rest)
    for key in schema:
        val = getattr(flags, key.replace("-", "_"))
        if val is not None:
            values[key] = val

    missing = [k for k, (_, d) in schema.items() if d is None and k not in values]
    if missing:
        raise ParameterError(f"missing required key(s): {', '.join(missing)}")
    _validate(known.command, values)
    return ExperimentConfig(command=known.command, parameters=values,
                            output_dir=known.out, seed=known.seed), known.threads


def _validate(command: str, values: Dict[str, object]) -> None:
    if "gamma" in values and not float(values["gamma"]) > 1.0:
        raise ParameterError("gamma must exceed 1")
    if "delta" in values and not 0.0 < float(values["delta"]) < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    if "mu" in values and not 0.0 < float(values["mu"]) <= 1.0:
        raise ParameterError("mu must lie in (0, 1]")


# ---------------------------------------------------------------------------
# command runners
# ---------------------------------------------------------------------------

def _run_book(cfg: ExperimentConfig, out, threads: int) -> dict:
    gamma = float(cfg.parameters["gamma"])
    pmax = int(cfg.parameters["pmax"])
    l0 = float(cfg.parameters["l0"])
    book = book_mod.power_law_book(gamma, L0=l0, p_max=pmax)
    book.to_csv(out / "book.csv")
    alpha_last = float(book.alpha[-1])
    return {
        "alpha_last": alpha_last,
        "alpha_limit": (gamma - 1.0) / gamma,
        "impact_slope": book_mod.impact_curve_slope(book).slope,
        "volume_profile_slope": book_mod.volume_profile_slope(book).slope,
    }


def _run_simulate(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    dist = TailDistribution.power_law(float(p["gamma"]), l_max=float(p["lmax"]))
    policy = str(p["policy"])
    book = None
    if policy == sim_mod.ADAPTIVE:
        book = book_mod.power_law_book(float(p["gamma"]), p_max=int(p["pmax"]))
    config = sim_mod.SimConfig(dist=dist, mu=float(p["mu"]), horizon=int(p["horizon"]),
                               policy=policy, book=book, seed=RandomSource(cfg.seed))
    result = sim_mod.run_simulation(config)
    result.events.to_csv(out / "events.csv")
    lags = np.unique(np.logspace(1, math.log10(max(config.horizon // 10, 20)), 12).astype(int))
    sig = sim_mod.volatility_signature(result, lags)
    write_csv(out / "signature.csv", ["lag", "sigma2", "stderr"],
              [(s.lag, s.sigma2, s.stderr) for s in sig if not s.skipped])
    growth = sim_mod.variance_growth(result, lags)
    summary = {"variance_growth_exponent": growth.slope,
               "variance_growth_stderr": growth.stderr,
               "n_resampled": result.n_resampled}
    if policy == sim_mod.ADAPTIVE:
        buckets = sim_mod.mm_pnl_by_size(result)
        summary["mm_pnl_worst_abs_mean"] = max((abs(b.mean) for b in buckets), default=0.0)
        summary["orders_completed"] = int(result.orders.completed.sum())
    return summary


def _run_decay(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    params = decay_mod.DecayParams(delta=float(p["delta"]), t_max=float(p["tmax"]))
    grid = np.linspace(0.0, 2.0 * params.t_max, int(p["points"]))
    curve = decay_mod.decay_curve(params, grid)
    write_csv(out / "decay.csv", ["t_over_tmax", "ratio"],
              list(zip(curve.t_over_tmax, curve.ratio)))
    lam = decay_mod.full_decay_lambda(params.delta)
    return {"lambda": lam, "floor": 1.0 / (params.delta + 1.0)}


def _run_renorm(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    gamma = float(p["gamma"])
    delta = gamma - 1.0
    dist = TailDistribution.power_law(gamma, l_max=float(p["lmax"]))
    grid = np.logspace(math.log10(float(p["la-min"])), math.log10(float(p["la-max"])),
                       int(p["la-points"]))
    curve = impact_mod.renormalized_curve(grid, float(p["mu-tilde"]), float(p["mu"]),
                                          dist, float(p["c"]), delta,
                                          int(p["replicas"]), RandomSource(cfg.seed),
                                          threads=threads)
    curve.to_csv(out / "renorm.csv")
    asym = impact_mod.renormalized_asymptote(float(p["mu-tilde"]), float(p["mu"]),
                                             dist, float(p["c"]), delta)
    fit = curve.fitted_exponent
    write_json(out / "fit.json", {"exponent": fit.slope, "stderr": fit.stderr,
                                  "asymptote_per_total_volume": asym})
    return {"exponent": fit.slope, "asymptote_per_total_volume": asym}


def _run_aggregate(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    gamma = float(p["gamma"])
    dist = TailDistribution.power_law(gamma, l_max=float(p["lmax"]))
    curve = impact_mod.aggregate_impact_mc(int(p["window"]), dist, float(p["c"]),
                                           gamma - 1.0, int(p["replicas"]),
                                           RandomSource(cfg.seed),
                                           trades_per_replica=int(p["trades"]),
                                           windows_per_replica=int(p["windows"]))
    curve.to_csv(out / "aggregate.csv")
    fit = curve.fitted_exponent
    payload = {"exponent": fit.slope if fit else math.nan,
               "stderr": fit.stderr if fit else math.nan}
    write_json(out / "fit.json", payload)
    return payload


def _run_exec(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    delta = float(p["delta"])
    a = exec_mod.gain_analytics(delta)
    lam = float(p["lam"])
    schedule = exec_mod.bucket_strategy(float(p["l0"]), int(p["steps"]), delta,
                                        lam=None if lam < 0 else lam)
    summary = {
        "f": a.f, "g": a.g, "gain": a.gain, "gain_max": a.gain_max, "lambda": a.lam,
        "bucket_sizes": [float(x) for x in schedule.bucket_sizes],
        "relative_saving": schedule.relative_saving,
        "completion_time": schedule.completion_time,
        "trivial_saving_bound": exec_mod.trivial_strategy_bounds(delta, 1.0, a.lam)[0],
    }
    la = float(p["vwap-la"])
    if la > 0:
        dist = TailDistribution.power_law(float(p["gamma"]), l_max=float(p["lmax"]))
        grid = np.logspace(math.log10(0.02), math.log10(float(p["mu"]) * 0.5), 5)
        report = exec_mod.vwap_cost_mc(la, grid, float(p["mu"]), dist, 1.0, delta,
                                       int(p["replicas"]), RandomSource(cfg.seed),
                                       lambda_risk=float(p["lambda-risk"]),
                                       threads=threads)
        exec_mod.write_cost_grid_csv(report, out / "vwap_cost.csv")
        summary["vwap_beta"] = report.beta.slope if report.beta else math.nan
        summary["vwap_optimal_rate"] = report.optimal_rate
    write_json(out / "analytics.json", summary)
    return summary


def _run_calibrate(cfg: ExperimentConfig, out, threads: int) -> dict:
    p = cfg.parameters
    gamma = float(p["gamma"])
    dist = TailDistribution.power_law(gamma, l_max=float(p["lmax"]))
    C = book_mod.calibrate_scale(float(p["sigma"]), float(p["mu"]), dist)
    delta = gamma - 1.0
    return {"C": C, "delta": delta,
            "peak_impact_coefficient": C,
            "permanent_impact_coefficient": C / (delta + 1.0)}


RUNNERS = {"book": _run_book, "simulate": _run_simulate, "decay": _run_decay,
           "renorm": _run_renorm, "aggregate": _run_aggregate, "exec": _run_exec,
           "calibrate": _run_calibrate}


def run_command(cfg: ExperimentConfig, threads: int = 1) -> int:
    """Dispatch, write outputs, manifest and summary; 0 on success."""
    out = ensure_dir(cfg.output_dir)
    summary = RUNNERS[cfg.command](cfg, out, threads)
    manifest = {"command": cfg.command, "seed": cfg.seed}
    manifest.update({k: (v if not isinstance(v, float) or math.isfinite(v) else "inf")
                     for k, v in cfg.parameters.items()})
    write_json(out / "manifest.json", manifest)
    write_json(out / "summary.json", {k: _jsonable(v) for k, v in summary.items()})
    return 0


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, threads = parse_config(argv)
        return run_command(cfg, threads)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
