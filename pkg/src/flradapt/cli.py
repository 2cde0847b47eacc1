"""Command-line entry point.

Subcommands: ``simulate`` writes a dataset CSV, ``estimate`` reads one and
prints the selection result as JSON, ``mc-study`` runs a Monte Carlo study
and writes its report files, ``rates`` prints the theoretical risk curve and
closed-form rate orders, ``check-lemma`` runs the randomized suite for the
deterministic selection error bound.

Configuration comes from an optional YAML file (sections ``model``,
``functional``, ``simulate``, ``study``, ``output``); every flag overrides
the matching config key.  The environment variable ``FLR_SEED`` overrides
the study base seed.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 property-check violation.  Errors print one machine-parsable line on
stderr: ``error: <category>: <detail>``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
import yaml

from . import adaptive, functionals, harness, oracle, sequences, simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_PROPERTY = 3


class ConfigError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config not found: {path}")
    with open(path) as fh:
        try:
            cfg = yaml.safe_load(fh) or {}
        except yaml.YAMLError as err:
            raise ConfigError(f"config unreadable: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping of sections")
    return cfg


def _section(cfg, name):
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return dict(sec)


def _build_model(cfg, args):
    sec = _section(cfg, "model")
    for key in ("regime", "p", "a", "r", "d"):
        val = getattr(args, key, None)
        if val is not None:
            sec[key] = val
    regime = sec.get("regime")
    if regime is None:
        raise ConfigError("model regime missing (set model.regime or --regime)")
    if regime == "custom":
        try:
            return sequences.TabulatedSequenceModel(
                beta_table=tuple(float(v) for v in sec["beta"]),
                gamma_table=tuple(float(v) for v in sec["gamma"]),
            )
        except KeyError as err:
            raise ConfigError(f"custom regime needs beta and gamma tables: {err}") from err
    missing = [k for k in ("p", "a") if sec.get(k) is None]
    if missing:
        raise ConfigError(f"model parameters missing: {', '.join(missing)}")
    try:
        return sequences.SequenceModel(
            regime=sequences.Regime(regime),
            p=float(sec["p"]),
            a=float(sec["a"]),
            r=float(sec.get("r", 1.0)),
            d=float(sec.get("d", 1.0)),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def parse_functional(text):
    """Parse ``point:t0``, ``deriv:t0:q``, ``avg:b``, or ``custom:c1,c2,...``."""
    parts = str(text).split(":")
    kind = parts[0]
    try:
        if kind == "point" and len(parts) == 2:
            return functionals.PointEval(t0=float(parts[1]))
        if kind == "deriv" and len(parts) == 3:
            return functionals.DerivativeEval(t0=float(parts[1]), q=int(parts[2]))
        if kind == "avg" and len(parts) == 2:
            return functionals.LocalAverage(b=float(parts[1]))
        if kind == "custom" and len(parts) == 2:
            return functionals.Custom(
                coeffs=tuple(float(v) for v in parts[1].split(","))
            )
    except ValueError as err:
        raise ConfigError(f"bad functional {text!r}: {err}") from err
    raise ConfigError(f"bad functional {text!r} (point:t0 | deriv:t0:q | avg:b | custom:c1,..)")


def _build_functional(cfg, args):
    if getattr(args, "functional", None) is not None:
        return parse_functional(args.functional)
    sec = _section(cfg, "functional")
    kind = sec.get("kind")
    if kind is None:
        raise ConfigError("functional missing (set functional.kind or --functional)")
    try:
        if kind == "point":
            return functionals.PointEval(t0=float(sec["t0"]))
        if kind == "deriv":
            return functionals.DerivativeEval(t0=float(sec["t0"]), q=int(sec["q"]))
        if kind == "avg":
            return functionals.LocalAverage(b=float(sec["b"]))
        if kind == "custom":
            return functionals.Custom(coeffs=tuple(float(v) for v in sec["coeffs"]))
    except (KeyError, ValueError) as err:
        raise ConfigError(f"bad functional config: {err}") from err
    raise ConfigError(f"unknown functional kind {kind!r}")


def _pick(sec, key, flag_value, default=None, cast=None):
    val = flag_value if flag_value is not None else sec.get(key, default)
    if val is None:
        return None
    return cast(val) if cast else val


def _cmd_simulate(args):
    cfg = _load_config(args.config)
    model = _build_model(cfg, args)
    sec = _section(cfg, "simulate")
    n = _pick(sec, "n", args.n, cast=int)
    sigma = _pick(sec, "sigma", args.sigma, default=1.0, cast=float)
    seed = _pick(sec, "seed", args.seed, default=0, cast=int)
    if n is None:
        raise ConfigError("sample size missing (simulate.n or --n)")
    config = simulate.SimConfig(
        n=n, sigma=sigma, seed=seed, model=model,
        J=_pick(sec, "J", args.truncation, cast=int),
        slope_scale=_pick(sec, "slope_scale", args.slope_scale,
                          default=simulate.DEFAULT_SLOPE_SCALE, cast=float),
        mixing=_pick(sec, "theta", args.theta, default=0.0, cast=float),
    )
    slope = simulate.make_slope(model, config.J, config.slope_scale)
    data = simulate.draw_dataset(config, slope)
    out = _pick(_section(cfg, "output"), "dataset", args.out)
    if out is None:
        raise ConfigError("output path missing (output.dataset or --out)")
    simulate.save_dataset_csv(data, out)
    print(f"wrote {data.n} x {data.dim} dataset to {out}")
    return EXIT_OK


def _cmd_estimate(args):
    cfg = _load_config(args.config)
    spec = _build_functional(cfg, args)
    data_path = _pick(_section(cfg, "output"), "dataset", args.data)
    if data_path is None:
        raise ConfigError("dataset path missing (--data)")
    if not os.path.exists(data_path):
        raise ConfigError(f"dataset not found: {data_path}")
    data = simulate.load_dataset_csv(data_path)
    constant = _pick(_section(cfg, "study"), "penalty_constant",
                     args.penalty_constant,
                     default=adaptive.PENALTY_CONSTANT, cast=float)
    result = adaptive.adaptive_estimate(data, spec, penalty_constant=constant)
    text = json.dumps(result.to_record(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_mc_study(args):
    cfg = _load_config(args.config)
    model = _build_model(cfg, args)
    spec = _build_functional(cfg, args)
    sec = _section(cfg, "study")
    sim_sec = _section(cfg, "simulate")
    out_sec = _section(cfg, "output")
    n_grid = args.n_grid or sec.get("n_grid")
    if n_grid is None:
        raise ConfigError("study n_grid missing (study.n_grid or --n-grid)")
    if isinstance(n_grid, str):
        n_grid = [int(v) for v in n_grid.split(",")]
    base_seed = _pick(sec, "base_seed", args.base_seed, default=0, cast=int)
    if "FLR_SEED" in os.environ:
        base_seed = int(os.environ["FLR_SEED"])
    out_dir = args.out_dir or out_sec.get("dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    study = harness.StudyConfig(
        model=model,
        spec=spec,
        sigma=_pick(sim_sec, "sigma", args.sigma, default=1.0, cast=float),
        n_grid=tuple(int(v) for v in n_grid),
        replicates=_pick(sec, "replicates", args.replicates, default=100, cast=int),
        base_seed=base_seed,
        penalty_constant=_pick(sec, "penalty_constant", args.penalty_constant,
                               default=adaptive.PENALTY_CONSTANT, cast=float),
        slope_scale=_pick(sim_sec, "slope_scale", args.slope_scale,
                          default=simulate.DEFAULT_SLOPE_SCALE, cast=float),
        mixing=_pick(sim_sec, "theta", args.theta, default=0.0, cast=float),
        truncation=_pick(sim_sec, "J", args.truncation, cast=int),
        report_path=os.path.join(out_dir, out_sec.get("report", "study_report.json")),
        raw_path=os.path.join(out_dir, out_sec.get("raw", "study_raw.csv")),
        curves_path=os.path.join(out_dir, out_sec.get("curves", "study_curves.csv")),
    )
    report = harness.run_study(study)
    summary = {
        "per_n_risk_adaptive": {
            str(row["n"]): row.get("risk_adaptive") for row in report.rows
        },
        "slopes": report.slopes,
        "report": study.report_path,
        "raw": study.raw_path,
        "curves": study.curves_path,
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_rates(args):
    cfg = _load_config(args.config)
    model = _build_model(cfg, args)
    spec = _build_functional(cfg, args)
    n = _pick(_section(cfg, "study"), "n", args.n, default=10000, cast=int)
    m_search = args.m_search or oracle.default_search_bound(model, n)
    x_minimax = 1.0 / n
    x_adaptive = (1.0 + math.log(n)) / n
    prof_minimax = oracle.risk_profile(model, spec, x_minimax, m_search)
    prof_adaptive = oracle.risk_profile(model, spec, x_adaptive, m_search)
    out = {
        "n": n,
        "m_search": m_search,
        "m_star": prof_minimax.minimizer,
        "r_star_minimax": prof_minimax.minimum,
        "m_diamond": prof_adaptive.minimizer,
        "r_star_adaptive": prof_adaptive.minimum,
        "side_condition_ratio": oracle.side_condition_ratio(
            model, spec, n, prof_adaptive.minimizer
        ),
        "risk_curve_minimax": [float(v) for v in prof_minimax.risks],
    }
    for mode in ("minimax", "adaptive"):
        try:
            desc = oracle.rate_exponent(model, spec, mode)
            out[f"{mode}_order"] = {
                "n_exponent": desc.n_exponent,
                "log_exponent": desc.log_exponent,
                "loglog_exponent": desc.loglog_exponent,
                "label": desc.label(),
            }
        except oracle.RegimeConditionError as err:
            out[f"{mode}_order"] = {"error": str(err)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_check_lemma(args):
    result = adaptive.selection_bound_suite(args.instances, args.seed)
    print(
        f"selection error bound: {result.instances} instances, "
        f"{result.violations} violations"
    )
    if not result.passed:
        first = result.first_violation
        print(
            f"error: property: bound violated at m={first.witness} "
            f"(lhs={first.lhs!r} rhs={first.rhs_at_witness!r})",
            file=sys.stderr,
        )
        return EXIT_PROPERTY
    return EXIT_OK


def _add_model_flags(sub):
    sub.add_argument("--regime", choices=["pp", "pe", "ep", "custom"])
    sub.add_argument("--p", type=float)
    sub.add_argument("--a", type=float)
    sub.add_argument("--r", type=float)
    sub.add_argument("--d", type=float)


def _add_functional_flag(sub):
    sub.add_argument("--functional", help="point:t0 | deriv:t0:q | avg:b | custom:c1,c2,..")


def build_parser():
    parser = argparse.ArgumentParser(prog="flradapt", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="draw a dataset and write it as CSV")
    _add_model_flags(sim)
    sim.add_argument("--config")
    sim.add_argument("--n", type=int)
    sim.add_argument("--sigma", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--theta", type=float)
    sim.add_argument("--slope-scale", dest="slope_scale", type=float)
    sim.add_argument("--truncation", type=int)
    sim.add_argument("--out")
    sim.set_defaults(func=_cmd_simulate)

    est = subs.add_parser("estimate", help="run the data-driven estimator on a CSV dataset")
    _add_functional_flag(est)
    est.add_argument("--config")
    est.add_argument("--data")
    est.add_argument("--penalty-constant", dest="penalty_constant", type=float)
    est.add_argument("--out")
    est.set_defaults(func=_cmd_estimate)

    study = subs.add_parser("mc-study", help="run a Monte Carlo risk study")
    _add_model_flags(study)
    _add_functional_flag(study)
    study.add_argument("--config")
    study.add_argument("--n-grid", dest="n_grid")
    study.add_argument("--replicates", type=int)
    study.add_argument("--base-seed", dest="base_seed", type=int)
    study.add_argument("--sigma", type=float)
    study.add_argument("--theta", type=float)
    study.add_argument("--slope-scale", dest="slope_scale", type=float)
    study.add_argument("--truncation", type=int)
    study.add_argument("--penalty-constant", dest="penalty_constant", type=float)
    study.add_argument("--out-dir", dest="out_dir")
    study.set_defaults(func=_cmd_mc_study)

    rates = subs.add_parser("rates", help="print the theoretical risk curve and rate orders")
    _add_model_flags(rates)
    _add_functional_flag(rates)
    rates.add_argument("--config")
    rates.add_argument("--n", type=int)
    rates.add_argument("--m-search", dest="m_search", type=int)
    rates.set_defaults(func=_cmd_rates)

    lemma = subs.add_parser("check-lemma", help="randomized suite for the selection error bound")
    lemma.add_argument("--instances", type=int, default=10000)
    lemma.add_argument("--seed", type=int, default=0)
    lemma.set_defaults(func=_cmd_check_lemma)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: config: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (
        adaptive.AdaptiveEstimationError,
        harness.StudyError,
        oracle.DivergentTailError,
        sequences.SaturationError,
        np.linalg.LinAlgError,
        ArithmeticError,
    ) as err:
        print(f"error: numeric: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as err:
        print(f"error: usage: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
