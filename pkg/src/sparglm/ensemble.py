"""Sparse projected averaged regression for GLMs.

An ensemble of GLMs, each fitted on a screened and CW-projected copy of the
standardised predictors. Member coefficients are mapped back to the
predictor space, thresholded, and averaged on the link scale.
"""
from dataclasses import dataclass, field, asdict, replace
import json
import math
import warnings

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted
from threadpoolctl import threadpool_limits

from .exceptions import ConvergenceWarning
from .families import FamilyLink, get_family
from .projection import CwProjection, apply, sample_cw, sample_cw_random_sign
from .ridge import RidgeSolver, lambda_path, make_folds, select_lambda_min
from .screening import (FLOOR_WEIGHT, ScreeningCoefficient, compute_screening_coefficient,
                        sample_screening_set)

__all__ = [
    "StandardizedDesign",
    "SparConfig",
    "MarginalModel",
    "SparModel",
    "standardize",
    "fit_marginal",
    "spar_fit",
    "threshold_and_average",
    "predict",
    "one_standard_error_select",
    "coefficient_distribution",
    "nu_grid",
    "member_rng",
    "save_model",
    "load_model",
    "SPAR",
]

FORMAT_VERSION = 1


# ----------------------------------------------------------------------
# standardisation
# ----------------------------------------------------------------------
@dataclass
class StandardizedDesign:
    X: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    constant: np.ndarray

    def transform(self, X_new):
        return (np.asarray(X_new, dtype=float) - self.center) / self.scale


def standardize(X_raw):
    """Centre each column and scale it to unit sample sd (divisor n - 1).

    Constant columns are flagged, set to zero and given scale 1 so that the
    back-transformation leaves their (zero) coefficients untouched.
    """
    X = np.asarray(X_raw, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardize needs a 2-d array with at least two rows")
    center = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    constant = ~(scale > 1e-12 * np.maximum(1.0, np.abs(center)))
    scale = np.where(constant, 1.0, scale)
    Xs = (X - center) / scale
    Xs[:, constant] = 0.0
    return StandardizedDesign(Xs, center, scale, constant)


# ----------------------------------------------------------------------
# configuration and model records
# ----------------------------------------------------------------------
@dataclass
class SparConfig:
    """Settings for :func:`spar_fit`.

    ``M_max`` defaults to 20 without CV and 50 with CV. ``nu`` fixes the
    threshold (0 when omitted and CV is off). ``screening=None`` skips
    screening and uses every column, and ``diagonal='random_sign'`` replaces
    the data-informed diagonal; together they give a conventional CW
    ensemble.
    """

    family: str = "gaussian-identity"
    M_max: int = None
    cv_folds: int = None
    nu: float = None
    nu_grid_size: int = 20
    averaging: str = "link_level"
    selection_rule: str = "min_score"
    cv_score: str = "deviance"
    marginal_ridge_penalty: float = 1e-4
    screening: str = "ridge_dev_threshold"
    threshold: float = None
    n_lambda: int = 100
    lambda_ratio_min: float = 1e-4
    diagonal: str = "data"
    m: int = None
    seed: int = 0
    n_jobs: int = None

    def __post_init__(self):
        self.family = str(get_family(self.family))
        if self.M_max is None:
            self.M_max = 50 if self.cv_folds else 20
        if self.M_max < 1:
            raise ValueError("M_max must be at least 1")
        if self.cv_folds is not None and self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2 when CV is enabled")
        if self.averaging not in ("link_level", "response_level"):
            raise ValueError("averaging must be 'link_level' or 'response_level'")
        if self.selection_rule not in ("min_score", "one_standard_error"):
            raise ValueError("selection_rule must be 'min_score' or 'one_standard_error'")
        if self.cv_score not in ("deviance", "mse"):
            raise ValueError("cv_score must be 'deviance' or 'mse'")
        if self.diagonal not in ("data", "random_sign"):
            raise ValueError("diagonal must be 'data' or 'random_sign'")
        if self.nu_grid_size < 1:
            raise ValueError("nu_grid_size must be at least 1")

    @property
    def family_link(self):
        return get_family(self.family)


@dataclass(eq=False)
class MarginalModel:
    """One ensemble member on the standardised scale."""

    indices: np.ndarray
    projection: CwProjection
    gamma: np.ndarray
    intercept: float
    penalty: float = 0.0
    converged: bool = True

    @property
    def m(self):
        return self.projection.m

    @property
    def beta_screened(self):
        """Coefficients on ``indices``: ``Phi' gamma``."""
        return self.projection.back_project(self.gamma)

    def beta(self, p):
        out = np.zeros(p)
        out[self.indices] = self.beta_screened
        return out

    def to_dict(self):
        return {
            "indices": self.indices.tolist(),
            "projection": self.projection.to_dict(),
            "gamma": self.gamma.tolist(),
            "intercept": float(self.intercept),
            "penalty": float(self.penalty),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["indices"], dtype=np.int64),
            CwProjection.from_dict(d["projection"]),
            np.asarray(d["gamma"], dtype=float),
            float(d["intercept"]),
            float(d.get("penalty", 0.0)),
            bool(d.get("converged", True)),
        )


@dataclass(eq=False)
class SparModel:
    config: SparConfig
    members: list
    M: int
    nu: float
    beta_hat: np.ndarray
    intercept_hat: float
    center: np.ndarray
    scale: np.ndarray
    screening: ScreeningCoefficient = None
    cv_table: dict = None
    training: dict = field(default_factory=dict)

    @property
    def family(self):
        return self.config.family_link

    @property
    def p(self):
        return self.beta_hat.size

    def member_coefficients(self, nu=None):
        """Thresholded member coefficients on the standardised scale."""
        nu = self.nu if nu is None else nu
        return [_threshold(mm.beta(self.p), nu) for mm in self.members[: self.M]]

    def to_dict(self, include_alpha=True):
        return {
            "format": "sparglm-model",
            "version": FORMAT_VERSION,
            "config": asdict(self.config),
            "scaling": {"center": self.center.tolist(), "scale": self.scale.tolist()},
            "screening": None if self.screening is None else self.screening.to_dict(include_alpha),
            "members": [mm.to_dict() for mm in self.members],
            "selected": {"M": int(self.M), "nu": float(self.nu)},
            "beta_hat": self.beta_hat.tolist(),
            "intercept_hat": float(self.intercept_hat),
            "cv_table": _cv_table_to_json(self.cv_table),
            "training": self.training,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "sparglm-model":
            raise ValueError("not a sparglm model document")
        cfg = SparConfig(**d["config"])
        sc = d.get("screening")
        return cls(
            config=cfg,
            members=[MarginalModel.from_dict(m) for m in d["members"]],
            M=int(d["selected"]["M"]),
            nu=float(d["selected"]["nu"]),
            beta_hat=np.asarray(d["beta_hat"], dtype=float),
            intercept_hat=float(d["intercept_hat"]),
            center=np.asarray(d["scaling"]["center"], dtype=float),
            scale=np.asarray(d["scaling"]["scale"], dtype=float),
            screening=None if sc is None else ScreeningCoefficient.from_dict(sc),
            cv_table=_cv_table_from_json(d.get("cv_table")),
            training=d.get("training", {}),
        )


def _cv_table_to_json(t):
    if t is None:
        return None
    return {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in t.items()}


def _cv_table_from_json(t):
    if t is None:
        return None
    return {k: (np.asarray(v) if isinstance(v, list) else v) for k, v in t.items()}


def save_model(model, path, include_alpha=True):
    """Write a model as JSON; floats use shortest round-trip repr."""
    with open(path, "w") as fh:
        json.dump(model.to_dict(include_alpha), fh)


def load_model(path):
    with open(path) as fh:
        return SparModel.from_dict(json.load(fh))


# ----------------------------------------------------------------------
# members
# ----------------------------------------------------------------------
def member_rng(seed, k):
    """Generator for member ``k``; independent of how many members exist."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0, int(k))))


def _cv_seed(seed):
    return int(np.random.SeedSequence(int(seed), spawn_key=(1,)).generate_state(1)[0])


def draw_dimension(n, p, q, rng, m=None):
    """Projection dimension, uniform on ``ceil(log p) .. floor(n/2)``."""
    if m is not None:
        return int(min(max(int(m), 1), q))
    lo = int(math.ceil(math.log(p)))
    hi = n // 2
    if lo > hi:
        dim = hi
    else:
        dim = int(rng.integers(lo, hi + 1))
    return int(min(max(dim, 1), q))


def _fit_reduced(Z, y, family, penalty):
    solver = RidgeSolver(Z, y, family)
    fit = solver.fit(penalty)
    if not fit.converged:
        penalty = 10.0 * penalty
        fit = solver.fit(penalty)
    return fit, penalty


def marginal_penalty(config_penalty, y, family, m):
    """Reduced-space ridge penalty ``c * null_deviance / m``."""
    nd = get_family(family).null_deviance(y)
    return config_penalty * max(nd, 1e-12) / m


def fit_marginal(X_std, y, family, alpha, k, rng, penalty=1e-4, m=None, eligible=None,
                 diagonal="data", screen=True):
    """Sample member ``k``'s structure and fit its reduced GLM.

    Draws the screening set (``min(2n, p)`` columns, weights ``|alpha|``),
    a dimension ``m_k`` and a CW projection whose diagonal carries the
    screening coefficients of the selected columns, then fits a ridge GLM of
    ``y`` on ``Z_k = X[:, I_k] Phi_k'`` with penalty
    ``penalty * null_deviance / m_k``. A member that does not converge is
    refitted once with ten times the penalty and kept with a flag.
    """
    fl = get_family(family)
    X_std = np.asarray(X_std, dtype=float)
    n, p = X_std.shape
    alpha_vec = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
    if eligible is None:
        eligible = np.ones(p, dtype=bool)
    rng = np.random.default_rng(rng)
    if screen:
        idx = sample_screening_set(alpha_vec, n, rng, eligible=eligible)
    else:
        idx = np.flatnonzero(eligible)
    q = idx.size
    dim = draw_dimension(n, p, q, rng, m)
    if diagonal == "random_sign":
        phi = sample_cw_random_sign(dim, q, rng)
    else:
        d = alpha_vec[idx].copy()
        floor = FLOOR_WEIGHT * np.max(np.abs(alpha_vec))
        d[d == 0] = floor
        phi = sample_cw(dim, q, d, rng)
    Z = apply(phi, X_std[:, idx])
    lam = marginal_penalty(penalty, y, fl, dim)
    fit, lam = _fit_reduced(Z, y, fl, lam)
    return MarginalModel(idx, phi, fit.beta, fit.intercept, lam, fit.converged)


def refit_member(member, X_std, y, family, penalty):
    """Refit only ``gamma`` and the intercept, keeping ``I_k`` and ``Phi_k``."""
    fl = get_family(family)
    Z = apply(member.projection, X_std[:, member.indices])
    lam = marginal_penalty(penalty, y, fl, member.m)
    fit, lam = _fit_reduced(Z, y, fl, lam)
    return replace(member, gamma=fit.beta, intercept=fit.intercept, penalty=lam,
                   converged=fit.converged)


def _threshold(beta, nu):
    if nu <= 0:
        return beta
    out = beta.copy()
    out[np.abs(out) < nu] = 0.0
    return out


def average_members(members, nu, M, p):
    """Mean of the first ``M`` thresholded member coefficients and intercepts."""
    if M > len(members):
        raise ValueError(f"M={M} exceeds the {len(members)} available members")
    total = np.zeros(p)
    b0 = 0.0
    for mm in members[:M]:
        total += _threshold(mm.beta(p), nu)
        b0 += mm.intercept
    return total / M, b0 / M


def back_transform(beta_std, intercept_std, center, scale):
    beta = beta_std / scale
    return beta, intercept_std - float(beta @ center)


def threshold_and_average(members, nu, M, scaling):
    """Threshold, average and map coefficients back to the original scale.

    Entries with ``|beta_j^k| < nu`` are zeroed before averaging. ``scaling``
    is a ``(center, scale)`` pair or a :class:`StandardizedDesign`.
    """
    center, scale = (scaling.center, scaling.scale) if hasattr(scaling, "center") else scaling
    center = np.asarray(center, dtype=float)
    scale = np.asarray(scale, dtype=float)
    beta_std, b0_std = average_members(members, nu, M, center.size)
    return back_transform(beta_std, b0_std, center, scale)


def nu_grid(members, p, size=20):
    """0 followed by ``size - 1`` quantiles of the pooled nonzero ``|beta_j^k|``."""
    pooled = np.concatenate([np.abs(mm.beta_screened) for mm in members])
    pooled = pooled[pooled > 0]
    if size == 1 or pooled.size == 0:
        return np.zeros(1)
    levels = np.linspace(0.0, 1.0, size + 1)[1:-1]
    return np.concatenate([[0.0], np.quantile(pooled, levels)])


# ----------------------------------------------------------------------
# cross-validation over (M, nu)
# ----------------------------------------------------------------------
def _fold_scores(members, X_std, y, family, penalty, fold_of, nus, score):
    """Held-out mean loss per fold on the (M, nu) grid."""
    fl = get_family(family)
    n_folds = int(fold_of.max()) + 1
    M_max = len(members)
    out = np.empty((n_folds, M_max, len(nus)))
    for f in range(n_folds):
        train = fold_of != f
        test = ~train
        Xtr, ytr, Xte, yte = X_std[train], y[train], X_std[test], y[test]
        refit = [refit_member(mm, Xtr, ytr, fl, penalty) for mm in members]
        for j, nu in enumerate(nus):
            eta_sum = np.zeros(test.sum())
            for k, mm in enumerate(refit):
                b = _threshold(mm.beta_screened, nu)
                eta_sum += mm.intercept + Xte[:, mm.indices] @ b
                eta = eta_sum / (k + 1)
                if score == "deviance":
                    out[f, k, j] = fl.deviance_eta(yte, eta) / yte.size
                else:
                    out[f, k, j] = float(np.mean((yte - fl.linkinv(eta)) ** 2))
    return out


def cross_validate(members, X_std, y, config, fold_of=None, nus=None):
    """Cross-validated scores on the (M, nu) grid with fixed member structure.

    Returns a dict with keys ``M``, ``nu``, ``mean``, ``se`` (arrays of shape
    (M_max, n_nu) for the last two), ``nnz`` and ``fold_of``.
    """
    fl = config.family_link
    y = np.asarray(y, dtype=float)
    p = X_std.shape[1]
    if fold_of is None:
        fold_of = make_folds(y, fl, config.cv_folds, _cv_seed(config.seed))
    if nus is None:
        nus = nu_grid(members, p, config.nu_grid_size) if config.nu is None else np.array([config.nu])
    nus = np.asarray(nus, dtype=float)
    if nus.size == 0:
        raise ValueError("empty nu grid")
    scores = _fold_scores(members, X_std, y, fl, config.marginal_ridge_penalty, fold_of, nus,
                          config.cv_score)
    K = scores.shape[0]
    mean = scores.mean(axis=0)
    se = scores.std(axis=0, ddof=1) / np.sqrt(K)
    nnz = np.empty(mean.shape, dtype=np.int64)
    for j, nu in enumerate(nus):
        total = np.zeros(p)
        for k, mm in enumerate(members):
            total += _threshold(mm.beta(p), nu)
            nnz[k, j] = np.count_nonzero(total)
    return {
        "M": np.arange(1, len(members) + 1),
        "nu": nus,
        "mean": mean,
        "se": se,
        "nnz": nnz,
        "fold_of": fold_of,
    }


def min_score_select(cv_table):
    mean = np.asarray(cv_table["mean"])
    i, j = np.unravel_index(int(np.nanargmin(mean)), mean.shape)
    return int(cv_table["M"][i]), float(cv_table["nu"][j])


def one_standard_error_select(cv_table):
    """Sparsest (M, nu) cell whose mean score is within one SE of the best.

    The SE is that of the best cell. Ties on sparsity prefer the larger nu,
    then the smaller M.
    """
    mean = np.asarray(cv_table["mean"], dtype=float)
    se = np.asarray(cv_table["se"], dtype=float)
    nnz = np.asarray(cv_table["nnz"])
    Ms = np.asarray(cv_table["M"])
    nus = np.asarray(cv_table["nu"], dtype=float)
    bi, bj = np.unravel_index(int(np.nanargmin(mean)), mean.shape)
    bound = mean[bi, bj] + (se[bi, bj] if np.isfinite(se[bi, bj]) else 0.0)
    best = None
    for i in range(mean.shape[0]):
        for j in range(mean.shape[1]):
            if not mean[i, j] <= bound:
                continue
            key = (nnz[i, j], -nus[j], Ms[i])
            if best is None or key < best[0]:
                best = (key, i, j)
    _, i, j = best
    return int(Ms[i]), float(nus[j])


# ----------------------------------------------------------------------
# fitting
# ----------------------------------------------------------------------
def _fit_members(Xs, y, fl, alpha, config, eligible, n_members):
    def one(k):
        return fit_marginal(
            Xs, y, fl, alpha, k, member_rng(config.seed, k),
            penalty=config.marginal_ridge_penalty, m=config.m, eligible=eligible,
            diagonal=config.diagonal, screen=config.screening is not None,
        )

    # BLAS limits are process-wide, so they are set once around all workers;
    # single-threaded BLAS keeps results independent of the worker count
    with threadpool_limits(limits=1):
        if config.n_jobs in (None, 1):
            return [one(k) for k in range(n_members)]
        return Parallel(n_jobs=config.n_jobs, prefer="threads")(
            delayed(one)(k) for k in range(n_members))


def _screen(Xs, y, fl, config, alpha):
    if alpha is not None:
        a = np.asarray(getattr(alpha, "alpha", alpha), dtype=float)
        return alpha if isinstance(alpha, ScreeningCoefficient) else ScreeningCoefficient(
            a, 0.0, np.nan, "user")
    if config.screening is None:
        # no screening: all columns, a unit placeholder coefficient
        return ScreeningCoefficient(np.ones(Xs.shape[1]), 0.0, np.nan, "none")
    if config.screening == "ridge_train_dev":
        return None
    return compute_screening_coefficient(
        Xs, y, fl, source=config.screening, threshold=config.threshold,
        n_lambda=config.n_lambda, ratio_min=config.lambda_ratio_min,
        cv_folds=config.cv_folds or 10, random_state=_cv_seed(config.seed),
    )


def _train_dev_screening(Xs, y, fl, config, eligible):
    """Pick the penalty whose ensemble has the lowest training deviance."""
    solver = RidgeSolver(Xs, y, fl)
    path = lambda_path(None, None, fl, config.n_lambda, config.lambda_ratio_min, solver=solver)
    best = None
    seen = set()
    for thr in (0.5, 0.8, 0.9, 0.95, 0.99, 0.999):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam, fit = select_lambda_min(path, fl, thr)
        if lam in seen:
            continue
        seen.add(lam)
        sc = ScreeningCoefficient(fit.beta, lam, fit.deviance_ratio, "ridge_train_dev",
                                  fit.intercept)
        members = _fit_members(Xs, y, fl, sc, config, eligible, config.M_max)
        b, b0 = average_members(members, config.nu or 0.0, config.M_max, Xs.shape[1])
        dev = fl.deviance_eta(y, b0 + Xs @ b)
        if best is None or dev < best[0]:
            best = (dev, sc, members)
    return best[1], best[2]


def spar_fit(X_raw, y, config, alpha=None):
    """Fit the SPAR ensemble.

    Without CV the ensemble uses ``M = M_max`` members and threshold
    ``config.nu`` (0 by default). With CV, member structures are sampled
    once on the full data, only ``gamma`` and intercepts are refitted per
    fold, and ``(M, nu)`` is chosen by the configured rule.

    Parameters
    ----------
    X_raw : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    config : SparConfig
    alpha : array-like of shape (p,) or ScreeningCoefficient, optional
        Override of the screening coefficient on the standardised scale.

    Returns
    -------
    SparModel
    """
    fl = config.family_link
    X_raw = np.asarray(X_raw, dtype=float)
    # proportions are accepted for binomial; poisson counts must be integers
    y = fl.validate_response(y, allow_fractional=fl.family != "poisson")
    n, p = X_raw.shape
    if n < 10:
        raise ValueError("SPAR needs at least 10 observations")
    if p < 2:
        raise ValueError("SPAR needs at least 2 predictors")
    if y.size != n:
        raise ValueError("X and y have inconsistent numbers of rows")
    design = standardize(X_raw)
    Xs = design.X
    eligible = ~design.constant

    if config.screening == "ridge_train_dev" and alpha is None:
        sc, members = _train_dev_screening(Xs, y, fl, config, eligible)
    else:
        sc = _screen(Xs, y, fl, config, alpha)
        members = _fit_members(Xs, y, fl, sc, config, eligible, config.M_max)
    if not all(mm.converged for mm in members):
        warnings.warn("some marginal models did not converge", ConvergenceWarning, stacklevel=2)

    cv_table = None
    if config.cv_folds:
        cv_table = cross_validate(members, Xs, y, config)
        if config.selection_rule == "one_standard_error":
            M, nu = one_standard_error_select(cv_table)
        else:
            M, nu = min_score_select(cv_table)
    else:
        M, nu = config.M_max, (0.0 if config.nu is None else float(config.nu))
    members = members[:M]
    beta_hat, b0_hat = threshold_and_average(members, nu, M, design)
    eta = b0_hat + X_raw @ beta_hat
    null_dev = fl.null_deviance(y)
    dev = fl.deviance_eta(y, eta)
    training = {
        "n": int(n),
        "p": int(p),
        "y_mean": float(np.mean(y)),
        "deviance": dev,
        "null_deviance": null_dev,
        "deviance_ratio": 1.0 - dev / null_dev if null_dev > 0 else 0.0,
        "nonzero": int(np.count_nonzero(beta_hat)),
        "constant_columns": np.flatnonzero(design.constant).tolist(),
        "dispersion": fl.dispersion(y, fl.linkinv(eta)),
    }
    return SparModel(config, members, M, nu, beta_hat, b0_hat, design.center, design.scale,
                     sc, cv_table, training)


def predict(model, X_new, kind="response"):
    """Predictions on the link or response scale.

    Under ``response_level`` averaging the response is the mean of member
    responses and ``kind='link'`` is rejected.
    """
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != model.p:
        raise ValueError(f"expected {model.p} columns, got shape {X_new.shape}")
    fl = model.family
    if kind not in ("link", "response"):
        raise ValueError("kind must be 'link' or 'response'")
    if model.config.averaging == "response_level":
        if kind == "link":
            raise ValueError("link predictions are undefined under response-level averaging")
        Xs = (X_new - model.center) / model.scale
        mu = np.zeros(X_new.shape[0])
        for mm, b in zip(model.members[: model.M], model.member_coefficients()):
            mu += fl.linkinv(mm.intercept + Xs @ b)
        return mu / model.M
    eta = model.intercept_hat + X_new @ model.beta_hat
    return eta if kind == "link" else fl.linkinv(eta)


def coefficient_distribution(model):
    """Original-scale member coefficients per variable.

    Returns a list with one ``(values, count)`` pair per variable, where
    ``values`` holds ``beta_j^k`` for every member whose screening set
    contains ``j`` (values sorted by absolute size, largest first) and
    ``count`` is the number of such members.
    """
    p = model.p
    values = [[] for _ in range(p)]
    for mm in model.members[: model.M]:
        b = mm.beta_screened / model.scale[mm.indices]
        for j, v in zip(mm.indices, b):
            values[j].append(float(v))
    out = []
    for v in values:
        v = sorted(v, key=abs, reverse=True)
        out.append((np.asarray(v), len(v)))
    return out


# ----------------------------------------------------------------------
# estimator
# ----------------------------------------------------------------------
class SPAR(BaseEstimator, RegressorMixin):
    """Sparse projected averaged regression for generalized linear models.

    Parameters
    ----------
    family : str, default='gaussian-identity'
        One of 'gaussian-identity', 'gaussian-log', 'binomial-logit',
        'binomial-cloglog', 'poisson-log'.
    n_models : int, optional
        Ensemble size (upper bound when ``cv`` is set). Defaults to 20
        without CV and 50 with CV.
    cv : int, optional
        Number of CV folds for choosing the ensemble size and threshold.
    nu : float, optional
        Fixed threshold.
    nu_grid_size : int, default=20
    averaging : {'link_level', 'response_level'}, default='link_level'
    selection_rule : {'min_score', 'one_standard_error'}, default='min_score'
    cv_score : {'deviance', 'mse'}, default='deviance'
    marginal_penalty : float, default=1e-4
        Relative ridge penalty for the reduced-space fits.
    screening : {'ridge_dev_threshold', 'ridge_cv', 'holp_limit', 'ridge_train_dev'} or None
    threshold : float, optional
        Deviance-ratio threshold for the screening penalty.
    n_lambda, lambda_ratio_min : path settings for the screening penalty.
    diagonal : {'data', 'random_sign'}, default='data'
    m : int, optional
        Fixed projection dimension for every member.
    random_state : int, optional
        Master seed; member ``k`` draws from a stream derived from
        ``(random_state, k)``.
    n_jobs : int, optional
        Parallel workers for member fits; results do not depend on it.

    Attributes
    ----------
    model_ : SparModel
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    """

    def __init__(self, family="gaussian-identity", n_models=None, cv=None, nu=None,
                 nu_grid_size=20, averaging="link_level", selection_rule="min_score",
                 cv_score="deviance", marginal_penalty=1e-4, screening="ridge_dev_threshold",
                 threshold=None, n_lambda=100, lambda_ratio_min=1e-4, diagonal="data", m=None,
                 random_state=None, n_jobs=None):
        self.family = family
        self.n_models = n_models
        self.cv = cv
        self.nu = nu
        self.nu_grid_size = nu_grid_size
        self.averaging = averaging
        self.selection_rule = selection_rule
        self.cv_score = cv_score
        self.marginal_penalty = marginal_penalty
        self.screening = screening
        self.threshold = threshold
        self.n_lambda = n_lambda
        self.lambda_ratio_min = lambda_ratio_min
        self.diagonal = diagonal
        self.m = m
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self):
        seed = self.random_state
        if seed is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        elif not isinstance(seed, (int, np.integer)):
            raise ValueError("random_state must be an int or None")
        return SparConfig(
            family=self.family, M_max=self.n_models, cv_folds=self.cv, nu=self.nu,
            nu_grid_size=self.nu_grid_size, averaging=self.averaging,
            selection_rule=self.selection_rule, cv_score=self.cv_score,
            marginal_ridge_penalty=self.marginal_penalty, screening=self.screening,
            threshold=self.threshold, n_lambda=self.n_lambda,
            lambda_ratio_min=self.lambda_ratio_min, diagonal=self.diagonal, m=self.m,
            seed=int(seed), n_jobs=self.n_jobs,
        )

    def fit(self, X, y, alpha=None):
        """Fit the ensemble.

        ``alpha`` optionally replaces the screening coefficient; it is given
        on the original predictor scale and rescaled internally.
        """
        X = check_array(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        config = self._config()
        if alpha is not None:
            alpha = np.asarray(alpha, dtype=float) * X.std(axis=0, ddof=1)
        self.model_ = spar_fit(X, y, config, alpha=alpha)
        self._sync()
        return self

    def _sync(self):
        m = self.model_
        self.coef_ = m.beta_hat
        self.intercept_ = m.intercept_hat
        self.n_features_in_ = m.p
        self.n_models_ = m.M
        self.nu_ = m.nu
        self.cv_table_ = m.cv_table
        return self

    @classmethod
    def from_model(cls, model):
        cfg = model.config
        est = cls(family=cfg.family, n_models=cfg.M_max, cv=cfg.cv_folds, nu=cfg.nu,
                  nu_grid_size=cfg.nu_grid_size, averaging=cfg.averaging,
                  selection_rule=cfg.selection_rule, cv_score=cfg.cv_score,
                  marginal_penalty=cfg.marginal_ridge_penalty, screening=cfg.screening,
                  threshold=cfg.threshold, n_lambda=cfg.n_lambda,
                  lambda_ratio_min=cfg.lambda_ratio_min, diagonal=cfg.diagonal, m=cfg.m,
                  random_state=cfg.seed, n_jobs=cfg.n_jobs)
        est.model_ = model
        return est._sync()

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return predict(self.model_, check_array(X, dtype=float), kind="link")

    def predict(self, X):
        check_is_fitted(self, "model_")
        return predict(self.model_, check_array(X, dtype=float), kind="response")

    def score(self, X, y, sample_weight=None):
        """Fraction of null deviance explained on ``(X, y)``."""
        fl = get_family(self.family)
        y = np.asarray(y, dtype=float)
        nd = fl.null_deviance(y)
        if self.model_.config.averaging == "link_level":
            dev = fl.deviance_eta(y, self.decision_function(X))
        else:
            dev = fl.deviance(y, np.clip(self.predict(X), 1e-12, None))
        return 1.0 - dev / nd if nd > 0 else 0.0
