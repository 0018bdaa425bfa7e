"""Command-line interface.

Subcommands: ``analyze`` (test effects on a long CSV data file), ``simulate``
(type-I error study), ``kqs`` (quantile-distance study), ``power`` (trend
alternative power curves) and ``large-sample`` (growing-n type-I error
curves). Scenario subcommands accept a config file (INI-style sections
``[scenario]``, ``[methods]``, ``[output]``); explicit flags override config
values. ``--paper-scale`` switches to the 10000 x 1000 replication counts.

Exit codes: 0 success, 2 data-schema or usage errors, 3 configuration errors,
4 numeric degeneracy, 1 internal errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    ContrastError,
    DegenerateCovarianceError,
    DesignError,
    InsufficientDataError,
    NotPositiveSemidefiniteError,
    RmpermError,
    SchemaError,
)
from .io import (
    AnalysisRequest,
    format_report_text,
    run_analyze,
    write_report_csv,
)
from .simulate import (
    DESK_SCALE,
    PAPER_SCALE,
    ScenarioConfig,
    run_kqs,
    run_large_sample,
    run_power,
    run_type1,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_SCHEMA = 2
EXIT_CONFIG = 3
EXIT_DEGENERATE = 4

_SCENARIO_KINDS = ("type1", "kqs", "power", "large-sample")

_SCENARIO_KEYS = {
    "kind", "distribution", "cov_setting", "n_vec", "t", "effect", "n_sim",
    "n_resample", "alpha", "seed", "block_sd2", "mu", "kqs_pooling",
    "kqs_quantile_method", "deltas", "increments",
}
_DEFAULT_DELTAS = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0)
_DEFAULT_INCREMENTS = tuple(range(0, 201, 20))


def _parse_list(text, conv, key):
    try:
        return tuple(conv(part.strip()) for part in str(text).split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"could not parse {key} value {text!r} as a list") from None


def _convert(value, conv, key):
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise ConfigError(f"could not parse {key} value {value!r}") from None


def load_scenario_config(path) -> dict:
    """Read and validate an INI scenario file into a plain dict."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    known_sections = {"scenario", "methods", "output"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    out: dict = {}
    if parser.has_section("scenario"):
        for key, value in parser.items("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown key {key!r} in [scenario]")
            out[key] = value
    if parser.has_section("methods"):
        for key, value in parser.items("methods"):
            if key != "use":
                raise ConfigError(f"unknown key {key!r} in [methods]; expected 'use'")
            out["methods"] = value
    if parser.has_section("output"):
        for key, value in parser.items("output"):
            if key not in ("dir", "prefix"):
                raise ConfigError(f"unknown key {key!r} in [output]")
            out[f"output_{key}"] = value
    return out


def _merged(args, kind: str) -> dict:
    cfg = load_scenario_config(args.config) if args.config else {}
    if "kind" in cfg and cfg["kind"] != kind:
        raise ConfigError(
            f"config file declares kind={cfg['kind']!r} but the {kind} command was invoked"
        )

    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in cfg:
            return cfg[key]
        return default

    merged = {
        "distribution": pick(args.distribution, "distribution", "normal"),
        "cov_setting": pick(args.cov_setting, "cov_setting", "S1"),
        "n_vec": _parse_list(pick(args.n_vec, "n_vec", "15,15,15"), int, "n_vec"),
        "t": _convert(pick(args.t, "t", 4), int, "t"),
        "effect": pick(args.effect, "effect", "T"),
        "methods": _parse_list(
            pick(args.methods, "methods", "ATS-F,WTS-asym,WTPS"), str, "methods"
        ),
        "n_sim": _convert(pick(args.n_sim, "n_sim", DESK_SCALE[0]), int, "n_sim"),
        "n_resample": _convert(
            pick(args.resamples, "n_resample", DESK_SCALE[1]), int, "n_resample"
        ),
        "alpha": _convert(pick(args.alpha, "alpha", 0.05), float, "alpha"),
        "seed": _convert(pick(args.seed, "seed", 0), int, "seed"),
        "output_dir": pick(args.output, "output_dir", "."),
        "prefix": pick(args.prefix, "output_prefix", f"rmperm_{kind}"),
    }
    block_sd2 = pick(getattr(args, "block_sd2", None), "block_sd2", None)
    merged["block_sd2"] = (
        _parse_list(block_sd2, float, "block_sd2") if block_sd2 is not None else None
    )
    mu = pick(getattr(args, "mu", None), "mu", None)
    merged["mu"] = _parse_list(mu, float, "mu") if mu is not None else None
    merged["kqs_pooling"] = pick(getattr(args, "pooling", None), "kqs_pooling", "pooled")
    merged["kqs_quantile_method"] = pick(
        getattr(args, "quantile_method", None), "kqs_quantile_method", "inverted_cdf"
    )
    merged["deltas"] = _parse_list(
        pick(getattr(args, "deltas", None), "deltas", ",".join(map(str, _DEFAULT_DELTAS))),
        float, "deltas",
    )
    merged["increments"] = _parse_list(
        pick(getattr(args, "increments", None), "increments",
             ",".join(map(str, _DEFAULT_INCREMENTS))),
        int, "increments",
    )
    if args.paper_scale:
        merged["n_sim"], merged["n_resample"] = PAPER_SCALE
    return merged


def _scenario(merged) -> ScenarioConfig:
    return ScenarioConfig(
        distribution=merged["distribution"],
        cov_setting=merged["cov_setting"],
        n_vec=merged["n_vec"],
        t=merged["t"],
        hypothesis=merged["effect"],
        methods=merged["methods"],
        n_sim=merged["n_sim"],
        n_resample=merged["n_resample"],
        alpha=merged["alpha"],
        seed=merged["seed"],
        mu=merged["mu"],
        block_sd2=merged["block_sd2"],
        kqs_pooling=merged["kqs_pooling"],
        kqs_quantile_method=merged["kqs_quantile_method"],
    )


def _scenario_label(cfg: ScenarioConfig, kind: str) -> str:
    effect = cfg.hypothesis if isinstance(cfg.hypothesis, str) else "custom"
    n = ",".join(str(v) for v in cfg.n_vec)
    return f"{kind}:{cfg.distribution}:{cfg.cov_setting}:n={n}:t={cfg.t}:{effect}"


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _scenario_columns(cfg: ScenarioConfig):
    effect = cfg.hypothesis if isinstance(cfg.hypothesis, str) else "custom"
    return [
        cfg.distribution, cfg.cov_setting, ",".join(map(str, cfg.n_vec)), cfg.t,
        effect, cfg.n_sim, cfg.n_resample, cfg.alpha, cfg.seed,
    ]


_SCENARIO_HEADER = [
    "distribution", "cov_setting", "n_vec", "t", "effect", "n_sim",
    "n_resample", "alpha", "seed",
]


def _emit_type1(report, merged, kind="type1"):
    cfg = report.config
    label = _scenario_label(cfg, kind)
    out_dir = Path(merged["output_dir"])
    prefix = merged["prefix"]
    rows = [
        _scenario_columns(cfg)
        + [m, res.rate, res.se, res.rejections, res.n_degenerate,
           round(report.duration_s, 3)]
        for m, res in report.results.items()
    ]
    report_path = _write_csv(
        out_dir / f"{prefix}_report.csv",
        _SCENARIO_HEADER + ["method", "rate", "se", "rejections", "n_degenerate",
                            "duration_s"],
        rows,
    )
    points_path = _write_csv(
        out_dir / f"{prefix}_points.csv",
        ["scenario", "method", "x", "y"],
        [[label, m, sum(cfg.n_vec), res.rate] for m, res in report.results.items()],
    )
    return [report_path, points_path]


def _emit_kqs(report, merged):
    cfg = report.config
    label = _scenario_label(cfg, "kqs")
    out_dir = Path(merged["output_dir"])
    prefix = merged["prefix"]
    report_path = _write_csv(
        out_dir / f"{prefix}_report.csv",
        _SCENARIO_HEADER + ["pooling", "kqs", "kqs_pi", "duration_s"],
        [_scenario_columns(cfg) + [report.pooling, report.kqs, report.kqs_pi,
                                   round(report.duration_s, 3)]],
    )
    points = []
    for name, values in (
        ("statistic", report.statistic_quantiles),
        ("chi2", report.chi2_quantiles),
        ("permutation", report.permutation_quantiles),
    ):
        points += [[label, name, float(x), float(y)] for x, y in zip(report.grid, values)]
    points_path = _write_csv(
        out_dir / f"{prefix}_points.csv", ["scenario", "method", "x", "y"], points
    )
    return [report_path, points_path]


def _emit_power(report, merged):
    cfg = report.config
    label = _scenario_label(cfg, "power")
    out_dir = Path(merged["output_dir"])
    prefix = merged["prefix"]
    rows = []
    points = []
    for delta in report.deltas:
        for m, res in report.results[delta].items():
            rows.append(_scenario_columns(cfg) + [delta, m, res.rate, res.se,
                                                  res.rejections, res.n_degenerate])
            points.append([label, m, delta, res.rate])
    report_path = _write_csv(
        out_dir / f"{prefix}_report.csv",
        _SCENARIO_HEADER + ["delta", "method", "rate", "se", "rejections",
                            "n_degenerate"],
        rows,
    )
    points_path = _write_csv(
        out_dir / f"{prefix}_points.csv", ["scenario", "method", "x", "y"], points
    )
    return [report_path, points_path]


def _emit_large_sample(report, merged):
    cfg = report.config
    label = _scenario_label(cfg, "large-sample")
    out_dir = Path(merged["output_dir"])
    prefix = merged["prefix"]
    rows = []
    points = []
    for b in report.increments:
        for m, res in report.results[b].items():
            rows.append(_scenario_columns(cfg) + [b, m, res.rate, res.se,
                                                  res.rejections, res.n_degenerate])
            points.append([label, m, b, res.rate])
    report_path = _write_csv(
        out_dir / f"{prefix}_report.csv",
        _SCENARIO_HEADER + ["increment", "method", "rate", "se", "rejections",
                            "n_degenerate"],
        rows,
    )
    points_path = _write_csv(
        out_dir / f"{prefix}_points.csv", ["scenario", "method", "x", "y"], points
    )
    return [report_path, points_path]


def run_scenario(config_path, output_dir=None, paper_scale=False):
    """Run the experiment described by a config file; returns written paths."""
    cfg_dict = load_scenario_config(config_path)
    kind = cfg_dict.get("kind", "type1")
    if kind not in _SCENARIO_KINDS:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {_SCENARIO_KINDS}")
    ns = argparse.Namespace(
        config=config_path, distribution=None, cov_setting=None, n_vec=None, t=None,
        effect=None, methods=None, n_sim=None, resamples=None, alpha=None, seed=None,
        output=output_dir, prefix=None, paper_scale=paper_scale, block_sd2=None,
        mu=None, pooling=None, quantile_method=None, deltas=None, increments=None,
    )
    merged = _merged(ns, kind)
    cfg = _scenario(merged)
    if kind == "type1":
        return _emit_type1(run_type1(cfg), merged)
    if kind == "kqs":
        return _emit_kqs(run_kqs(cfg), merged)
    if kind == "power":
        return _emit_power(run_power(cfg, merged["deltas"]), merged)
    return _emit_large_sample(run_large_sample(cfg, merged["increments"]), merged)


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI scenario file; flags override its values")
    p.add_argument("--distribution", choices=("normal", "lognormal", "exponential"))
    p.add_argument("--cov-setting", dest="cov_setting", choices=("S1", "S2", "S3"))
    p.add_argument("--n-vec", dest="n_vec", help="comma-separated group sizes")
    p.add_argument("--t", type=int, help="repeated measures per subject")
    p.add_argument("--effect", help="hypothesis effect tag (T, GT, G)")
    p.add_argument("--methods", help="comma-separated method tags")
    p.add_argument("--n-sim", dest="n_sim", type=int, help="simulation replicates")
    p.add_argument("--resamples", type=int, help="resamples per replicate")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--block-sd2", dest="block_sd2", help="per-group block effect variances")
    p.add_argument("--mu", help="comma-separated mean vector (length a*t)")
    p.add_argument("--paper-scale", action="store_true",
                   help="use 10000 simulations x 1000 resamples")
    p.add_argument("--output", help="output directory (default: current)")
    p.add_argument("--prefix", help="output file prefix")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmperm",
        description="Resampling-based tests for factorial repeated-measures designs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="test effects on a long CSV data file")
    pa.add_argument("--data", required=True, help="long CSV file (group,subject,...,value)")
    pa.add_argument("--effects", required=True,
                    help="comma-separated effect tags (e.g. A,B,T,AB or T,GT or custom)")
    pa.add_argument("--methods", default="ATS-F,WTS-asym,WTPS")
    pa.add_argument("--resamples", type=int, default=1000)
    pa.add_argument("--alpha", type=float, default=0.05)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--custom-h", dest="custom_h",
                    help="CSV matrix file for effect 'custom' (rows of numbers)")
    pa.add_argument("--output", help="write machine-readable report CSV here")

    for kind, help_text in (
        ("simulate", "Monte Carlo type-I error study"),
        ("kqs", "quantile distance study (KQS / KQS^pi)"),
        ("power", "power curves under a trend alternative"),
        ("large-sample", "type-I error for growing sample sizes"),
    ):
        p = sub.add_parser(kind, help=help_text)
        _add_scenario_flags(p)
        if kind == "kqs":
            p.add_argument("--pooling", choices=("pooled", "by-dataset"))
            p.add_argument("--quantile-method", dest="quantile_method",
                           choices=("inverted_cdf", "linear"),
                           help="empirical quantile estimator (sensitivity)")
        if kind == "power":
            p.add_argument("--deltas", help="comma-separated trend multipliers")
        if kind == "large-sample":
            p.add_argument("--increments", help="comma-separated sample-size increments")
    return parser


def _cmd_analyze(args) -> int:
    custom_h = None
    if args.custom_h:
        try:
            custom_h = np.loadtxt(args.custom_h, delimiter=",", ndmin=2)
        except OSError as exc:
            raise SchemaError(f"cannot read custom hypothesis file: {exc}") from None
        except ValueError as exc:
            raise SchemaError(f"custom hypothesis file is not numeric CSV: {exc}") from None
    req = AnalysisRequest(
        data_path=args.data,
        effects=tuple(s.strip() for s in args.effects.split(",") if s.strip()),
        methods=tuple(s.strip() for s in args.methods.split(",") if s.strip()),
        n_resample=args.resamples,
        alpha=args.alpha,
        seed=args.seed,
        custom_h=custom_h,
    )
    report = run_analyze(req)
    print(format_report_text(report))
    if args.output:
        write_report_csv(report, args.output)
        print(f"\nwrote {args.output}")
    return EXIT_OK


def _cmd_scenario(args, kind: str) -> int:
    merged = _merged(args, kind)
    cfg = _scenario(merged)
    if kind == "type1":
        report = run_type1(cfg)
        paths = _emit_type1(report, merged)
        for m, res in report.results.items():
            print(f"{m:10s} rate={res.rate:.4f} se={res.se:.4f} "
                  f"degenerate={res.n_degenerate}")
    elif kind == "kqs":
        report = run_kqs(cfg)
        paths = _emit_kqs(report, merged)
        print(f"KQS={report.kqs:.4g}  KQS^pi={report.kqs_pi:.4g}  "
              f"pooling={report.pooling}")
    elif kind == "power":
        report = run_power(cfg, merged["deltas"])
        paths = _emit_power(report, merged)
        for delta in report.deltas:
            line = "  ".join(
                f"{m}={res.rate:.3f}" for m, res in report.results[delta].items()
            )
            print(f"delta={delta:<4g} {line}")
    else:
        report = run_large_sample(cfg, merged["increments"])
        paths = _emit_large_sample(report, merged)
        for b in report.increments:
            line = "  ".join(
                f"{m}={res.rate:.3f}" for m, res in report.results[b].items()
            )
            print(f"b={b:<4d} {line}")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        kind = args.command if args.command != "simulate" else "type1"
        return _cmd_scenario(args, kind)
    except (SchemaError, InsufficientDataError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ConfigError, DesignError, ContrastError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateCovarianceError, NotPositiveSemidefiniteError) as exc:
        print(f"numeric degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RmpermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
