"""Command-line surface: ``frasian predict|bands|mtest|simulate``.

Every run writes a schema-versioned JSON report embedding the fully
resolved configuration and seed, plus plot-ready CSV companions where it
makes sense; re-running with the same configuration and seed reproduces
every artifact byte for byte.  Flag values win over the ``FRASIAN_SEED`` /
``FRASIAN_OUT_DIR`` environment variables, which win over built-in
defaults (the model defaults are the two-point illustration values:
standard normal prior, unit noise, alpha = 0.05).

Exit codes: 0 success (possibly with warnings recorded in the report),
2 usage or validation error, 3 internal numerical failure.
"""

import argparse
import csv
import io
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .bands import (
    DpBandConfig,
    DpPrior,
    band_coverage,
    dkw_band,
    dp_posterior,
    dp_posterior_band,
)
from .conformal import (
    ConjugateNormalModel,
    GridSpec,
    bayes_predictive_interval,
    conformal_pvalue,
    posterior_update,
    prediction_region,
    sweep_points,
)
from .experiments import conformal_coverage_study, fig1_study
from .multitest import (
    WeightSolverError,
    fwer_simulate,
    optimal_weights,
    weighted_bonferroni,
)
from .report import SCHEMA_VERSION
from .rng import RngSeed
from .special import NormalParams
from ._validation import check_weights

__all__ = ["main"]

PRESETS = ("fig1", "conformal-coverage", "dp-coverage", "fwer")
_PRESET_DEFAULT_REPS = {
    "fig1": 1000,
    "conformal-coverage": 10000,
    "dp-coverage": 500,
    "fwer": 10000,
}


class UsageError(Exception):
    """Invalid invocation or input; maps to exit code 2."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frasian",
        description="Prediction regions, CDF bands, and weighted multiple testing.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--alpha", type=float, default=0.05, help="miscoverage level (default 0.05)")
        p.add_argument("--seed", type=int, default=None, help="master seed (default: FRASIAN_SEED or 0)")
        p.add_argument("--out", default=None, help="output directory (default: FRASIAN_OUT_DIR or '.')")

    predict = sub.add_parser("predict", help="prediction region for the next observation")
    add_common(predict)
    predict.add_argument("--data", default=None, help="CSV file with a 'y' column")
    predict.add_argument("--sample", default=None, help="inline comma-separated sample, e.g. '0.1,-0.3'")
    predict.add_argument("--prior-mean", type=float, default=0.0)
    predict.add_argument("--prior-var", type=float, default=1.0)
    predict.add_argument("--noise-var", type=float, default=1.0)
    predict.add_argument("--grid-lo", type=float, default=None)
    predict.add_argument("--grid-hi", type=float, default=None)
    predict.add_argument("--grid-step", type=float, default=None)
    predict.add_argument(
        "--include-self",
        action="store_true",
        help="use the self-inclusive p-value convention (full 1-alpha guarantee)",
    )

    bands = sub.add_parser("bands", help="confidence/credible band for the CDF")
    add_common(bands)
    bands.add_argument("--data", required=True, help="CSV file with a 'y' column")
    bands.add_argument("--method", choices=("dkw", "dp"), default="dkw")
    bands.add_argument("--beta", type=float, default=None, help="DP prior concentration (required for --method dp)")
    bands.add_argument("--base-mean", type=float, default=0.0)
    bands.add_argument("--base-var", type=float, default=1.0)
    bands.add_argument("--draws", type=int, default=1000, help="posterior draws for the DP band")
    bands.add_argument("--truncation", type=int, default=1000, help="stick-breaking truncation")

    mtest = sub.add_parser("mtest", help="weighted Bonferroni multiple testing")
    add_common(mtest)
    mtest.add_argument("--pvalues", required=True, help="CSV file with a 'pvalue' column")
    mtest.add_argument("--weights", default=None, help="CSV file with a 'weight' column")
    mtest.add_argument("--means", default=None, help="CSV file with a 'theta' column (solves optimal weights)")
    mtest.add_argument(
        "--conservative",
        action="store_true",
        help="use the m-fold harsher literal rule P_j/w_j <= alpha/m",
    )

    simulate = sub.add_parser("simulate", help="seeded Monte Carlo presets")
    add_common(simulate)
    simulate.add_argument("--preset", required=True, choices=PRESETS)
    simulate.add_argument("--reps", type=int, default=None, help="replicates (preset-specific default)")
    simulate.add_argument("--prior-mean", type=float, default=0.0)
    simulate.add_argument("--prior-var", type=float, default=1.0)
    simulate.add_argument("--noise-var", type=float, default=1.0)
    simulate.add_argument("--beta", type=float, default=10.0, help="DP concentration (dp-coverage preset)")
    simulate.add_argument("--base-mean", type=float, default=0.0)
    simulate.add_argument("--base-var", type=float, default=1.0)
    simulate.add_argument("--draws", type=int, default=1000)
    simulate.add_argument("--truncation", type=int, default=1000)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("FRASIAN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"FRASIAN_SEED must be an integer, got {env!r}") from None
    return 0


def _resolve_out(args) -> Path:
    out = args.out if args.out is not None else os.environ.get("FRASIAN_OUT_DIR", ".")
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out!r}: {exc}") from None
    return path


def _read_csv_column(path: str, column: str) -> np.ndarray:
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path!r}: {exc}") from None
    values = []
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise UsageError(f"{path!r} must have a header row with a {column!r} column")
        for line_no, row in enumerate(reader, start=2):
            raw = row.get(column)
            if raw is None or raw.strip() == "":
                raise UsageError(f"{path!r} line {line_no}: missing {column!r} value")
            try:
                values.append(float(raw))
            except ValueError:
                raise UsageError(
                    f"{path!r} line {line_no}: {column!r} value {raw!r} is not a number"
                ) from None
    if not values:
        raise UsageError(f"{path!r} contains no data rows")
    return np.asarray(values)


def _parse_inline_sample(text: str) -> np.ndarray:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"--sample must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError("--sample is empty")
    return np.asarray(values)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _cmd_predict(args) -> int:
    if (args.data is None) == (args.sample is None):
        raise UsageError("predict needs exactly one of --data or --sample")
    sample = (
        _read_csv_column(args.data, "y") if args.data is not None else _parse_inline_sample(args.sample)
    )
    seed = _resolve_seed(args)
    out = _resolve_out(args)

    model = ConjugateNormalModel(
        prior_mean=args.prior_mean, prior_var=args.prior_var, noise_var=args.noise_var
    )
    grid_flags = (args.grid_lo, args.grid_hi, args.grid_step)
    if any(f is not None for f in grid_flags):
        if any(f is None for f in grid_flags):
            raise UsageError("--grid-lo, --grid-hi and --grid-step must be given together")
        grid = GridSpec(lo=args.grid_lo, hi=args.grid_hi, step=args.grid_step)
    else:
        grid = GridSpec.default_for(model, sample)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        freq = prediction_region(
            model, sample, args.alpha, grid=grid, include_self=args.include_self
        )
    bayes = bayes_predictive_interval(posterior_update(model, sample), model, args.alpha)

    sweep = sweep_points(grid, sample)
    pvals = conformal_pvalue(model, sample, sweep, include_self=args.include_self)
    in_region = (pvals >= args.alpha).astype(int)
    curve_name = "predict_curve.csv"
    _write_csv(
        out / curve_name,
        ["z", "pvalue", "in_region"],
        zip(sweep.tolist(), pvals.tolist(), in_region.tolist()),
    )

    config = {
        "subcommand": "predict",
        "data": args.data,
        "sample": args.sample,
        "alpha": args.alpha,
        "prior_mean": args.prior_mean,
        "prior_var": args.prior_var,
        "noise_var": args.noise_var,
        "grid": grid.to_dict(),
        "include_self": bool(args.include_self),
        "out": str(out),
    }
    report = {
        "schema": SCHEMA_VERSION,
        "config": config,
        "seed": RngSeed(seed).to_dict(),
        "n": int(sample.size),
        "frequentized": freq.to_dict(),
        "bayes": bayes.to_dict(),
        "warnings": list(freq.warnings),
        "artifacts": {"curve_csv": curve_name},
    }
    _write_json(out / "predict_report.json", report)
    for note in freq.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(f"wrote {out / 'predict_report.json'} and {out / curve_name}")
    return 0


def _cmd_bands(args) -> int:
    sample = _read_csv_column(args.data, "y")
    seed = _resolve_seed(args)
    out = _resolve_out(args)

    if args.method == "dp":
        if args.beta is None:
            raise UsageError("--method dp requires --beta")
        prior = DpPrior(
            base=NormalParams(args.base_mean, args.base_var), concentration=args.beta
        )
        posterior = dp_posterior(prior, sample)
        band = dp_posterior_band(
            posterior,
            args.alpha,
            seed=RngSeed(seed),
            draws=args.draws,
            truncation=args.truncation,
        )
    else:
        band = dkw_band(sample, args.alpha)

    band_name = "band.csv"
    _write_csv(
        out / band_name,
        ["x", "lower", "ecdf_or_mean", "upper"],
        zip(
            band.grid.tolist(),
            band.lower.tolist(),
            band.center.tolist(),
            band.upper.tolist(),
        ),
    )

    config = {
        "subcommand": "bands",
        "data": args.data,
        "method": args.method,
        "alpha": args.alpha,
        "beta": args.beta,
        "base_mean": args.base_mean,
        "base_var": args.base_var,
        "draws": args.draws,
        "truncation": args.truncation,
        "out": str(out),
    }
    report = {
        "schema": SCHEMA_VERSION,
        "config": config,
        "seed": RngSeed(seed).to_dict(),
        "n": int(sample.size),
        "method": band.method,
        "metadata": band.meta,
        "warnings": list(band.warnings),
        "artifacts": {"band_csv": band_name},
    }
    _write_json(out / "bands_report.json", report)
    for note in band.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(f"wrote {out / 'bands_report.json'} and {out / band_name}")
    return 0


def _cmd_mtest(args) -> int:
    pvalues = _read_csv_column(args.pvalues, "pvalue")
    out = _resolve_out(args)
    if args.weights is not None and args.means is not None:
        raise UsageError("pass either --weights or --means, not both")

    c_value = None
    if args.means is not None:
        means = _read_csv_column(args.means, "theta")
        weights, c_value = optimal_weights(means, args.alpha)
        source = "optimal"
    elif args.weights is not None:
        weights = check_weights(_read_csv_column(args.weights, "weight"), m=pvalues.size)
        source = "supplied"
    else:
        weights = np.full(pvalues.size, 1.0 / pvalues.size)
        source = "uniform"

    rejections = weighted_bonferroni(
        pvalues, weights, args.alpha, conservative=args.conservative
    )

    config = {
        "subcommand": "mtest",
        "pvalues": args.pvalues,
        "weights": args.weights,
        "means": args.means,
        "alpha": args.alpha,
        "conservative": bool(args.conservative),
        "out": str(out),
    }
    report = {
        "schema": SCHEMA_VERSION,
        "config": config,
        "seed": RngSeed(_resolve_seed(args)).to_dict(),
        "m": int(pvalues.size),
        "weight_source": source,
        "c": c_value,
        "weights": [float(w) for w in weights],
        "rejections": rejections.to_dict(),
        "warnings": [],
        "artifacts": {},
    }
    _write_json(out / "mtest_report.json", report)
    rejected = ", ".join(str(i) for i in rejections.indices) or "none"
    print(f"rejected hypotheses: {rejected} (report: {out / 'mtest_report.json'})")
    return 0


def _cmd_simulate(args) -> int:
    seed = RngSeed(_resolve_seed(args))
    out = _resolve_out(args)
    reps = args.reps if args.reps is not None else _PRESET_DEFAULT_REPS[args.preset]
    if reps < 1:
        raise UsageError(f"--reps must be positive, got {reps}")

    artifacts: dict = {}
    model = ConjugateNormalModel(
        prior_mean=args.prior_mean, prior_var=args.prior_var, noise_var=args.noise_var
    )

    if args.preset == "fig1":
        report_obj, panels = fig1_study(seed=seed, replicates=reps, alpha=args.alpha, model=model)
        panels_name = "fig1_panels.csv"
        _write_csv(
            out / panels_name,
            ["theta", "kind", "index", "lo", "hi"],
            [[r["theta"], r["kind"], r["index"], r["lo"], r["hi"]] for r in panels],
        )
        artifacts["panels_csv"] = panels_name
    elif args.preset == "conformal-coverage":
        report_obj = conformal_coverage_study(
            replicates=reps, alpha=args.alpha, seed=seed, model=model
        )
    elif args.preset == "dp-coverage":
        report_obj = band_coverage(
            method="dp",
            true_dist=NormalParams(5.0, 1.0),
            n=200,
            alpha=args.alpha,
            replicates=reps,
            seed=seed,
            dp_config=DpBandConfig(
                beta=args.beta,
                base=NormalParams(args.base_mean, args.base_var),
                draws=args.draws,
                truncation=args.truncation,
            ),
        )
    else:  # fwer
        m = 100
        report_obj = fwer_simulate(
            truth=np.zeros(m),
            weights=np.full(m, 1.0 / m),
            alpha=args.alpha,
            replicates=reps,
            seed=seed,
        )

    payload = report_obj.to_dict()
    payload["preset"] = args.preset
    payload["config"]["subcommand"] = "simulate"
    payload["config"]["preset"] = args.preset
    payload["config"]["out"] = str(out)
    payload["artifacts"] = artifacts
    _write_json(out / "simulate_report.json", payload)

    summary = ", ".join(f"{k}={v:.4g}" for k, v in sorted(report_obj.estimates.items()))
    print(f"{args.preset}: {summary}")
    print(f"wrote {out / 'simulate_report.json'}")
    return 0


_DISPATCH = {
    "predict": _cmd_predict,
    "bands": _cmd_bands,
    "mtest": _cmd_mtest,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help; pass it through.
        return int(exc.code) if exc.code is not None else 2
    try:
        return _DISPATCH[args.subcommand](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WeightSolverError as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return 3
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
