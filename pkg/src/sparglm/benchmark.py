"""Simulation experiment runner producing long-format score tables.

Three scenarios are supported:

* ``screening_recovery``: correlation of screening coefficients with the
  true active coefficients, plus their pAUC.
* ``projection_comparison``: one projection of all predictors to ``m``
  dimensions with different diagonals, then a GLM on the reduced data.
* ``spar_benchmark``: SPAR, SPAR-CV and a conventional CW ensemble.
"""
from dataclasses import dataclass, field, asdict
import math
import time
import warnings

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from .ensemble import SPAR, standardize
from .families import get_family
from .metrics import auc, msle, mspe, pauc, rmsle, rmspe
from .projection import apply, sample_cw, sample_cw_random_sign, sample_gaussian_rp
from .ridge import (RidgeSolver, holp_glm_limit, lambda_path, select_lambda_cv,
                    select_lambda_min)
from .screening import FLOOR_WEIGHT
from .simulation import simulate

__all__ = [
    "ExperimentSpec",
    "Cell",
    "run_benchmark",
    "mean_ranks",
    "RESULT_COLUMNS",
    "SCENARIO_METHODS",
]

RESULT_COLUMNS = ["cell_id", "family_link", "p", "n", "sparsity", "covariance",
                  "replication", "method", "metric", "value", "seconds"]

L2_FIXED = {"l2_10": 10.0, "l2_1": 1.0, "l2_01": 0.1, "l2_001": 0.01}
L2_DEV = {"l2_dev08": 0.8, "l2_dev095": 0.95, "l2_dev0999": 0.999}

SCENARIO_METHODS = {
    "screening_recovery": ["l2_cv", *L2_FIXED, "holp_limit", *L2_DEV, "marginal_glm"],
    "projection_comparison": ["l2_cv", "holp_limit", *L2_DEV, "true_beta", "random_sign",
                              "gaussian_rp"],
    "spar_benchmark": ["spar", "spar_cv", "cw_random_sign_ensemble"],
}


@dataclass
class Cell:
    family_link: str = "gaussian-identity"
    p: int = 500
    sparsity: str = "medium"
    covariance: str = "block"
    n: int = 100
    n_test: int = 100
    replications: int = 1

    def __post_init__(self):
        self.family_link = str(get_family(self.family_link))
        if self.sparsity not in ("sparse", "medium", "dense"):
            raise ValueError(f"unknown sparsity {self.sparsity!r}")
        if self.covariance not in ("identity", "compound", "autocorrelated", "block"):
            raise ValueError(f"unknown covariance {self.covariance!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")


@dataclass
class ExperimentSpec:
    scenario: str = "spar_benchmark"
    grid: list = field(default_factory=lambda: [Cell()])
    methods: list = None
    seed: int = 0
    output_path: str = None
    m: int = None
    n_models: int = 20
    n_models_cv: int = 50
    n_models_rp: int = 50
    n_jobs: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIO_METHODS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        self.grid = [c if isinstance(c, Cell) else Cell(**c) for c in self.grid]
        if self.methods is None:
            self.methods = list(SCENARIO_METHODS[self.scenario])
        unknown = set(self.methods) - set(SCENARIO_METHODS[self.scenario])
        if unknown:
            raise ValueError(f"methods {sorted(unknown)} are not available for {self.scenario}")

    def to_dict(self):
        return asdict(self)


class Skip(Exception):
    """A method cannot run for this family-link."""


# ----------------------------------------------------------------------
# coefficient estimators (screening / projection diagonals)
# ----------------------------------------------------------------------
def _ridge_estimate(name, Xs, y, fl, seed, cache):
    if name == "holp_limit":
        if not fl.is_canonical():
            raise Skip("non-canonical link")
        return holp_glm_limit(Xs, y, fl)
    if "solver" not in cache:
        cache["solver"] = RidgeSolver(Xs, y, fl)
    solver = cache["solver"]
    if name in L2_FIXED:
        return solver.fit(L2_FIXED[name]).beta
    if "path" not in cache:
        cache["path"] = lambda_path(None, None, fl, solver=solver)
    path = cache["path"]
    if name in L2_DEV:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return select_lambda_min(path, fl, L2_DEV[name])[1].beta
    if name == "l2_cv":
        return select_lambda_cv(Xs, y, fl, path, 10, seed)[1].beta
    raise ValueError(name)


def marginal_glm_coefficients(Xs, y, fl):
    """Slope of an unpenalised univariate GLM with intercept, per column."""
    n, p = Xs.shape
    out = np.zeros(p)
    for j in range(p):
        x = Xs[:, j:j + 1]
        if not np.any(x):
            continue
        # a vanishing penalty keeps separated binomial columns finite
        out[j] = RidgeSolver(x, y, fl, max_iter=50).fit(1e-8).beta[0]
    return out


# ----------------------------------------------------------------------
# prediction methods
# ----------------------------------------------------------------------
def _projection_method(name, data, fl, seed, m, cache):
    X, y = data["X"], data["y"]
    design = standardize(X)
    Xs = design.X
    n, p = Xs.shape
    rng = np.random.default_rng(seed)
    if name == "gaussian_rp":
        Phi = sample_gaussian_rp(m, p, rng)
        Z = Xs @ Phi.T
        back = lambda g: Phi.T @ g
    else:
        if name == "random_sign":
            phi = sample_cw_random_sign(m, p, rng)
        else:
            if name == "true_beta":
                d = data["truth"].beta * design.scale
            else:
                d = _ridge_estimate(name, Xs, y, fl, seed, cache)
            d = np.array(d, dtype=float)
            d[d == 0] = FLOOR_WEIGHT * np.max(np.abs(d))
            phi = sample_cw(m, p, d, rng)
        Z = apply(phi, Xs)
        back = phi.back_project
    lam = 1e-4 * max(fl.null_deviance(y), 1e-12) / m
    fit = RidgeSolver(Z, y, fl).fit(lam)
    beta_std = back(fit.beta)
    beta = beta_std / design.scale
    return beta, fit.intercept - float(beta @ design.center)


def _spar_method(name, data, fl, seed, spec):
    if name == "spar":
        est = SPAR(fl.name, n_models=spec.n_models, random_state=seed)
    elif name == "spar_cv":
        est = SPAR(fl.name, n_models=spec.n_models_cv, cv=10, random_state=seed)
    else:
        est = SPAR(fl.name, n_models=spec.n_models_rp, screening=None, diagonal="random_sign",
                   random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est.fit(data["X"], data["y"])
    return est.coef_, est.intercept_


def metric_names(scenario, family):
    if scenario == "screening_recovery":
        return ["correlation", "pauc"]
    names = ["mspe", "rmspe", "msle", "rmsle"]
    if get_family(family).family == "binomial":
        names.append("auc")
    names.append("pauc")
    return names


def prediction_metrics(data, fl, beta, intercept):
    truth = data["truth"]
    Xt, yt, et = data["X_test"], data["y_test"], data["eta_test"]
    eta_hat = intercept + Xt @ beta
    mu_hat = fl.linkinv(eta_hat)
    ybar = float(np.mean(data["y"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = {
            "mspe": mspe(yt, mu_hat),
            "rmspe": rmspe(yt, mu_hat, ybar),
            "msle": msle(et, eta_hat),
            "rmsle": rmsle(et, eta_hat),
        }
        if fl.family == "binomial":
            out["auc"] = auc(yt, mu_hat)
        out["pauc"] = pauc(truth.active, np.abs(beta), data["X"].shape[0])
    return out


def screening_metrics(data, alpha):
    truth = data["truth"]
    act = truth.active
    a = np.asarray(alpha)[act]
    b = truth.beta[act]
    if a.size > 1 and np.std(a) > 0:
        corr = float(np.corrcoef(a, b)[0, 1])
    else:
        corr = float("nan")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pa = pauc(act, np.abs(alpha), data["X"].shape[0])
    return {"correlation": corr, "pauc": pa}


def _item_seed(seed, cell_idx, rep):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(cell_idx), int(rep)))
    return [int(s) for s in ss.generate_state(2)]


def _run_item(spec, cell_idx, cell, rep):
    data_seed, method_seed = _item_seed(spec.seed, cell_idx, rep)
    fl = get_family(cell.family_link)
    rows = []
    base = [f"c{cell_idx}", cell.family_link, cell.p, cell.n, cell.sparsity, cell.covariance, rep]
    with threadpool_limits(limits=1):
        data = simulate(fl, cell.n, cell.p, cell.sparsity, cell.covariance,
                        n_test=cell.n_test, seed=data_seed)
        m = spec.m or max(cell.n // 4, 1)
        cache = {}
        Xs = None
        for method in spec.methods:
            t0 = time.perf_counter()
            try:
                if spec.scenario == "screening_recovery":
                    if Xs is None:
                        design = standardize(data["X"])
                        Xs = design.X
                    if method == "marginal_glm":
                        alpha = marginal_glm_coefficients(Xs, data["y"], fl)
                    else:
                        alpha = _ridge_estimate(method, Xs, data["y"], fl, method_seed, cache)
                    # back to the original scale for comparison with beta
                    scores = screening_metrics(data, alpha / design.scale)
                elif spec.scenario == "projection_comparison":
                    beta, b0 = _projection_method(method, data, fl, method_seed, m, cache)
                    scores = prediction_metrics(data, fl, beta, b0)
                else:
                    beta, b0 = _spar_method(method, data, fl, method_seed, spec)
                    scores = prediction_metrics(data, fl, beta, b0)
            except Skip as exc:
                rows.append(base + [method, f"skipped:{exc}", float("nan"), 0.0])
                continue
            seconds = time.perf_counter() - t0
            for metric in metric_names(spec.scenario, fl):
                rows.append(base + [method, metric, scores[metric], seconds])
    return rows


def run_benchmark(spec, n_jobs=None):
    """Run every (cell, replication) and return a long-format DataFrame.

    Each work item draws its seeds from ``(spec.seed, cell, replication)``,
    so results do not depend on ``n_jobs`` or scheduling.
    """
    n_jobs = spec.n_jobs if n_jobs is None else n_jobs
    items = [(i, c, r) for i, c in enumerate(spec.grid) for r in range(c.replications)]
    if n_jobs in (None, 1):
        chunks = [_run_item(spec, i, c, r) for i, c, r in items]
    else:
        chunks = Parallel(n_jobs=n_jobs)(delayed(_run_item)(spec, i, c, r) for i, c, r in items)
    rows = [row for chunk in chunks for row in chunk]
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    if spec.output_path:
        write_results(df, spec.output_path)
    return df


def write_results(df, path):
    df.to_csv(path, index=False, float_format="%.17g")


LOWER_IS_BETTER = {"mspe": True, "rmspe": True, "msle": True, "rmsle": True, "auc": False,
                   "pauc": False, "correlation": False}


def mean_ranks(df, metric):
    """Average per-replication rank of each method within each cell.

    Rank 1 is best; ``auc``, ``pauc`` and ``correlation`` are ranked
    descending (equivalently ``1 - auc`` ascending). Ties share the mean rank.
    """
    sub = df[df["metric"] == metric]
    if sub.empty:
        return pd.DataFrame(columns=["cell_id", "metric", "method", "mean_rank", "replications"])
    asc = LOWER_IS_BETTER.get(metric, True)
    ranks = sub.assign(
        rank=sub.groupby(["cell_id", "replication"])["value"].rank(ascending=asc, method="average")
    )
    out = (ranks.groupby(["cell_id", "method"])["rank"]
           .agg(mean_rank="mean", replications="count").reset_index())
    out.insert(1, "metric", metric)
    return out.sort_values(["cell_id", "mean_rank", "method"]).reset_index(drop=True)


def rank_table(df):
    metrics = [m for m in df["metric"].unique() if not str(m).startswith("skipped")]
    frames = [mean_ranks(df, m) for m in metrics]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
