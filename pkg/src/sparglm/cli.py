"""Command-line interface: simulate, fit, predict, evaluate, benchmark.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""
import argparse
import json
import sys
import warnings

import numpy as np
import pandas as pd

from . import benchmark as bench
from .ensemble import SparConfig, load_model, predict, save_model, spar_fit
from .exceptions import CalibrationError, NumericalError
from .families import SUPPORTED, get_family
from .metrics import auc, msle, mspe, pauc, rmsle, rmspe
from .simulation import simulate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
FAMILIES = [f"{f}-{l}" for f, l in SUPPORTED]
SPARSITY = ["sparse", "medium", "dense"]
COVARIANCE = ["identity", "compound", "autocorrelated", "block"]
FLOAT_FORMAT = "%.17g"


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


# ----------------------------------------------------------------------
# files
# ----------------------------------------------------------------------
def read_csv(path):
    return pd.read_csv(path, float_precision="round_trip")


def write_csv(df, path):
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def dataset_frame(X, y=None, eta=None):
    df = pd.DataFrame(X, columns=[f"x{j + 1}" for j in range(X.shape[1])])
    if y is not None:
        df["y"] = y
    if eta is not None:
        df["eta_true"] = eta
    return df


def split_frame(df, response="y", require_response=True, predictors=None):
    """Split a data frame into ``(X, y, eta_true)``.

    Predictors are every column except the response and ``eta_true``
    unless ``predictors`` names them explicitly.
    """
    if require_response and response not in df.columns:
        raise ValueError(f"response column {response!r} not found")
    if predictors is None:
        predictors = [c for c in df.columns if c not in (response, "eta_true")]
    missing = [c for c in predictors if c not in df.columns]
    if missing:
        raise ValueError(f"missing predictor columns: {missing[:5]}")
    X = df[predictors].to_numpy(dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("predictors contain missing or non-finite values")
    y = df[response].to_numpy(dtype=float) if response in df.columns else None
    if y is not None and not np.all(np.isfinite(y)):
        raise ValueError("response contains missing or non-finite values")
    eta = df["eta_true"].to_numpy(dtype=float) if "eta_true" in df.columns else None
    return X, y, eta, list(predictors)


def write_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _clean(v):
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_simulate(args):
    data = simulate(args.family, args.n, args.p, args.sparsity, args.cov, n_test=args.n_test,
                    seed=args.seed)
    truth = data["truth"]
    write_csv(dataset_frame(data["X"], data["y"], data["eta"]), f"{args.out}.csv")
    if args.n_test:
        write_csv(dataset_frame(data["X_test"], data["y_test"], data["eta_test"]),
                  f"{args.out}_test.csv")
    support = np.flatnonzero(truth.active)
    meta = {
        "spec": {"family_link": truth.family, "n": args.n, "p": args.p,
                 "sparsity": args.sparsity, "covariance": args.cov, "seed": args.seed,
                 "n_test": args.n_test, "signal": truth.signal_c,
                 "target_mean": truth.target_mean},
        "beta0": truth.beta0,
        "a": int(support.size),
        "support": support.tolist(),
        "beta": truth.beta[support].tolist(),
    }
    write_json(meta, f"{args.out}.meta.json")
    print(json.dumps({"beta0": truth.beta0, "a": int(support.size)}))
    return EXIT_OK


def cmd_fit(args):
    X, y, _, predictors = split_frame(read_csv(args.data), args.response)
    rule = {"min": "min_score", "1se": "one_standard_error"}[args.threshold_rule]
    config = SparConfig(family=args.family, M_max=args.models, cv_folds=args.cv or None,
                        nu=args.nu, selection_rule=rule, averaging=args.averaging,
                        seed=args.seed, n_jobs=args.jobs)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = spar_fit(X, y, config)
    save_model(model, args.out)
    tr = model.training
    report = {
        "family_link": config.family,
        "n": tr["n"],
        "p": tr["p"],
        "deviance_ratio": tr["deviance_ratio"],
        "M": model.M,
        "nu": model.nu,
        "lambda_min": model.screening.lambda_used if model.screening is not None else None,
        "screening_deviance_ratio": (_clean(model.screening.deviance_ratio)
                                     if model.screening is not None else None),
        "nonzero": tr["nonzero"],
        "predictors": predictors,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    write_json(report, args.report)
    return EXIT_OK


def _check_columns(model, X):
    if X.shape[1] != model.p:
        raise ValueError(f"model expects {model.p} predictors, data has {X.shape[1]}")


def cmd_predict(args):
    model = load_model(args.model)
    X, _, _, _ = split_frame(read_csv(args.data), args.response, require_response=False)
    _check_columns(model, X)
    out = pd.DataFrame()
    if model.config.averaging == "link_level":
        out["link"] = predict(model, X, "link")
    out["response"] = predict(model, X, "response")
    write_csv(out, args.out)
    return EXIT_OK


def _read_eta(path):
    df = read_csv(path)
    col = "eta_true" if "eta_true" in df.columns else df.columns[0]
    return df[col].to_numpy(dtype=float)


def cmd_evaluate(args):
    if (args.model is None) == (args.predictions is None):
        raise UsageError("give exactly one of --model or --predictions")
    df = read_csv(args.data)
    model = None
    if args.model is not None:
        model = load_model(args.model)
        X, y, eta_true, _ = split_frame(df, args.response)
        _check_columns(model, X)
        fl = model.family
        mu_hat = predict(model, X, "response")
        eta_hat = (predict(model, X, "link") if model.config.averaging == "link_level"
                   else None)
        y_bar = model.training.get("y_mean") if args.train_mean is None else args.train_mean
    else:
        if args.response not in df.columns:
            raise ValueError(f"response column {args.response!r} not found")
        y = df[args.response].to_numpy(dtype=float)
        eta_true = df["eta_true"].to_numpy(dtype=float) if "eta_true" in df.columns else None
        pred = read_csv(args.predictions)
        if "response" not in pred.columns:
            raise ValueError("predictions file needs a 'response' column")
        mu_hat = pred["response"].to_numpy(dtype=float)
        eta_hat = pred["link"].to_numpy(dtype=float) if "link" in pred.columns else None
        fl = get_family(args.family) if args.family else None
        y_bar = args.train_mean
    if mu_hat.size != y.size:
        raise ValueError(f"{mu_hat.size} predictions for {y.size} responses")
    if args.eta is not None:
        eta_true = _read_eta(args.eta)
        if eta_true.size != y.size:
            raise ValueError("true-eta sidecar length does not match the data")

    record = dict.fromkeys(["mspe", "rmspe", "msle", "rmsle", "auc", "pauc"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        record["mspe"] = mspe(y, mu_hat)
        if y_bar is not None:
            record["rmspe"] = rmspe(y, mu_hat, y_bar)
        if eta_true is not None and eta_hat is not None:
            record["msle"] = msle(eta_true, eta_hat)
            record["rmsle"] = rmsle(eta_true, eta_hat)
        binary = np.all((y == 0) | (y == 1))
        if binary and (fl is None or fl.family == "binomial"):
            record["auc"] = auc(y, mu_hat)
            pred01 = mu_hat >= 0.5
            truth01 = y == 1
            record["confusion"] = {
                "threshold": 0.5,
                "tp": int(np.sum(pred01 & truth01)),
                "fp": int(np.sum(pred01 & ~truth01)),
                "tn": int(np.sum(~pred01 & ~truth01)),
                "fn": int(np.sum(~pred01 & truth01)),
            }
        if args.meta is not None and model is not None:
            with open(args.meta) as fh:
                meta = json.load(fh)
            active = np.zeros(model.p, dtype=bool)
            active[np.asarray(meta["support"], dtype=int)] = True
            record["pauc"] = pauc(active, np.abs(model.beta_hat), model.training["n"])
    record = {k: (_clean(v) if not isinstance(v, dict) else v) for k, v in record.items()}
    write_json(record, args.out)
    return EXIT_OK


GRID_AXES = {"family": "family_link", "p": "p", "n": "n", "n_test": "n_test",
             "sparsity": "sparsity", "cov": "covariance", "reps": "replications"}


def build_experiment(args):
    """Merge the optional config file with flags; flags win."""
    conf = {}
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        if not isinstance(conf, dict):
            raise UsageError("config file must hold a JSON object")
    for key in ("scenario", "methods", "seed", "m", "n_jobs"):
        val = getattr(args, key if key != "n_jobs" else "jobs")
        if val is not None:
            conf[key] = val
    if args.out is not None:
        conf["output_path"] = args.out
    cells = [dict(c) for c in conf.get("grid", [{}])]
    for flag, fld in GRID_AXES.items():
        values = getattr(args, flag)
        if values is None:
            continue
        cells = [dict(c, **{fld: v}) for c in cells for v in values]
    conf["grid"] = cells
    unknown = set(conf) - set(bench.ExperimentSpec.__dataclass_fields__)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        return bench.ExperimentSpec(**conf)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_benchmark(args):
    spec = build_experiment(args)
    if not spec.output_path:
        raise UsageError("an output path is required (--out or output_path in the config)")
    df = bench.run_benchmark(spec)
    if args.ranks:
        bench.write_results(bench.rank_table(df), args.ranks)
    print(json.dumps({"rows": int(len(df)), "output": spec.output_path}))
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="sparglm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic dataset")
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--p", type=_positive_int, required=True)
    s.add_argument("--sparsity", choices=SPARSITY, default="medium")
    s.add_argument("--cov", choices=COVARIANCE, default="block")
    s.add_argument("--n-test", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="sim", help="output prefix")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a SPAR model")
    f.add_argument("--data", required=True)
    f.add_argument("--response", default="y")
    f.add_argument("--family", choices=FAMILIES, required=True)
    cv = f.add_mutually_exclusive_group()
    cv.add_argument("--cv", type=int, nargs="?", const=10, default=0,
                    help="cross-validate with this many folds (default 10)")
    cv.add_argument("--no-cv", dest="cv", action="store_const", const=0)
    f.add_argument("--models", type=_positive_int, default=None)
    f.add_argument("--threshold-rule", choices=["min", "1se"], default="min")
    f.add_argument("--nu", type=float, default=None)
    f.add_argument("--averaging", choices=["link_level", "response_level"],
                   default="link_level")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--jobs", type=int, default=None)
    f.add_argument("--out", default="model.json")
    f.add_argument("--report", default=None, help="report path (stdout if omitted)")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--response", default="y")
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="score a model or a predictions file")
    e.add_argument("--model")
    e.add_argument("--predictions")
    e.add_argument("--data", required=True)
    e.add_argument("--response", default="y")
    e.add_argument("--family", choices=FAMILIES, default=None)
    e.add_argument("--eta", help="true linear predictor sidecar (CSV)")
    e.add_argument("--meta", help="metadata sidecar holding the true support")
    e.add_argument("--train-mean", type=float, default=None)
    e.add_argument("--out", default=None, help="metrics path (stdout if omitted)")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="run a simulation experiment")
    b.add_argument("--config", help="JSON experiment config; flags override it")
    b.add_argument("--scenario", choices=list(bench.SCENARIO_METHODS))
    b.add_argument("--methods", nargs="+")
    b.add_argument("--family", nargs="+", choices=FAMILIES)
    b.add_argument("--p", nargs="+", type=_positive_int)
    b.add_argument("--n", nargs="+", type=_positive_int)
    b.add_argument("--n-test", nargs="+", type=_positive_int)
    b.add_argument("--sparsity", nargs="+", choices=SPARSITY)
    b.add_argument("--cov", nargs="+", choices=COVARIANCE)
    b.add_argument("--reps", nargs="+", type=_positive_int)
    b.add_argument("--m", type=_positive_int)
    b.add_argument("--seed", type=int)
    b.add_argument("--jobs", type=int)
    b.add_argument("--out")
    b.add_argument("--ranks", help="also write mean ranks per cell to this CSV")
    b.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, CalibrationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError, pd.errors.ParserError,
            pd.errors.EmptyDataError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
