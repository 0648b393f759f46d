"""Ridge-penalised GLMs fitted by iteratively reweighted least squares.

The objective is ``-kernel(beta0, beta) + lam / 2 * ||beta||^2`` with an
unpenalised intercept. When ``p > n`` every IRLS step is solved in the
n-dimensional dual form, with ``beta = X' a`` and only the Gram matrix
``X X'`` ever formed.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator
from sklearn.model_selection import KFold, StratifiedKFold
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConvergenceWarning, DegenerateResponseError, SaturationWarning
from .families import FamilyLink, get_family

__all__ = [
    "RidgeFit",
    "LambdaPath",
    "RidgeSolver",
    "fit_ridge",
    "lambda_path",
    "select_lambda_min",
    "select_lambda_cv",
    "default_threshold",
    "holp_glm_limit",
    "RidgeGLM",
]


@dataclass
class RidgeFit:
    """Result of one penalised fit."""

    beta: np.ndarray
    intercept: float
    lam: float
    deviance: float
    null_deviance: float
    iterations: int
    converged: bool
    objective: float = np.nan
    dual: np.ndarray = field(default=None, repr=False)

    @property
    def deviance_ratio(self):
        if self.null_deviance <= 0:
            return 0.0
        return 1.0 - self.deviance / self.null_deviance


@dataclass
class LambdaPath:
    """Log-equally spaced decreasing penalties with one fit per value."""

    values: np.ndarray
    fits: list

    @property
    def deviance_ratios(self):
        return np.array([f.deviance_ratio for f in self.fits])

    def __len__(self):
        return len(self.values)


def default_threshold(family):
    """Deviance-ratio threshold for choosing ``lambda_min``."""
    return 0.999 if get_family(family).family == "gaussian" else 0.8


def _solve_pd(A, b):
    try:
        return linalg.solve(A, b, assume_a="pos", check_finite=False)
    except (linalg.LinAlgError, ValueError):
        w, V = linalg.eigh(A)
        w = np.where(w > w.max() * 1e-15, w, np.inf)
        return V @ ((V.T @ b) / w)


class RidgeSolver:
    """Penalised IRLS for a fixed design and response.

    Caches the Gram matrix so that a whole lambda path, or several paths on
    the same data, reuse the ``O(n^2 p)`` setup.

    Parameters
    ----------
    X : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    family : FamilyLink or str
    max_iter : int
        IRLS iteration cap.
    tol : float
        Relative gradient-norm tolerance; the absolute tolerance is
        ``tol * max(1, ||gradient at start||)``.
    max_halving : int
        Step-halving cap per iteration.
    """

    def __init__(self, X, y, family, max_iter=100, tol=1e-7, max_halving=30, gram=None):
        self.X = np.asarray(X, dtype=float)
        self.family = get_family(family)
        self.y = self.family.validate_response(y)
        n, p = self.X.shape
        if self.y.shape[0] != n:
            raise ValueError("X and y have inconsistent numbers of rows")
        if n < 2:
            raise ValueError("ridge fitting needs at least two observations")
        self.n, self.p = n, p
        self.max_iter = max_iter
        self.tol = tol
        self.max_halving = max_halving
        self.dual_mode = p > n
        if self.dual_mode:
            self.K = self.X @ self.X.T if gram is None else gram
        self.null_deviance, self.degenerate = self.family.null_deviance(self.y, return_flag=True)
        self._null_intercept = self._start_intercept()

    def _start_intercept(self):
        ybar = self.family.null_mean(self.y)
        try:
            return float(self.family.linkfun(np.array([ybar]))[0])
        except ValueError:
            return 0.0

    # pieces shared by both parametrisations -----------------------------
    def _eta(self, b0, coef):
        if self.dual_mode:
            return b0 + self.K @ coef
        return b0 + self.X @ coef

    def _sqnorm(self, coef):
        if self.dual_mode:
            return float(max(coef @ self.K @ coef, 0.0))
        return float(coef @ coef)

    def _objective(self, eta, coef, lam):
        terms = self.family.pointwise_loglik(self.y, eta)
        if not np.all(np.isfinite(terms)):
            return np.inf
        return -float(np.sum(terms)) + 0.5 * lam * self._sqnorm(coef)

    def _gradient_norm(self, score, coef, lam):
        g0 = -np.sum(score)
        v = lam * coef if not self.dual_mode else lam * coef - score
        if self.dual_mode:
            gb = float(max(v @ self.K @ v, 0.0))
        else:
            gb = float(np.sum((v - self.X.T @ score) ** 2))
        return float(np.sqrt(g0 * g0 + gb))

    def _newton(self, eta, score, weight, lam):
        """Weighted ridge solve for the next (intercept, coef) iterate."""
        sw = weight.sum()
        if sw <= 0:
            weight = np.full_like(weight, 1e-12)
            sw = weight.sum()
        z = eta + np.divide(score, weight, out=np.zeros_like(score), where=weight > 0)
        zbar = weight @ z / sw
        zc = z - zbar
        if self.dual_mode:
            K = self.K
            v = K @ weight / sw
            c = weight @ v / sw
            Kc = K - v[:, None] - v[None, :] + c
            sq = np.sqrt(weight)
            A = sq[:, None] * Kc * sq[None, :]
            A[np.diag_indices_from(A)] += lam
            u = sq * _solve_pd(A, sq * zc)
            a = u - weight * (u.sum() / sw)
            b0 = zbar - weight @ (K @ a) / sw
            return b0, a
        xbar = weight @ self.X / sw
        Xc = self.X - xbar
        A = Xc.T @ (weight[:, None] * Xc)
        A[np.diag_indices_from(A)] += lam
        beta = _solve_pd(A, Xc.T @ (weight * zc))
        return zbar - xbar @ beta, beta

    def fit(self, lam, warm_start=None, warm_intercept=None, dual_start=None):
        """Fit at penalty ``lam``.

        ``warm_start`` is a length-p coefficient vector; in dual mode it is
        projected onto the row space of ``X``, which leaves the linear
        predictor unchanged and can only lower the penalty. ``dual_start``
        passes dual coefficients directly.
        """
        lam = float(lam)
        if not lam > 0:
            raise ValueError("lambda must be positive")
        if dual_start is not None and self.dual_mode:
            coef = np.array(dual_start, dtype=float)
        elif warm_start is not None:
            w = np.asarray(warm_start, dtype=float)
            if self.dual_mode:
                coef = np.linalg.lstsq(self.K, self.X @ w, rcond=None)[0]
            else:
                coef = w.copy()
        else:
            coef = np.zeros(self.n if self.dual_mode else self.p)
        b0 = self._null_intercept if warm_intercept is None else float(warm_intercept)

        eta = self._eta(b0, coef)
        obj = self._objective(eta, coef, lam)
        if not np.isfinite(obj):
            coef = np.zeros_like(coef)
            b0 = self._null_intercept
            eta = self._eta(b0, coef)
            obj = self._objective(eta, coef, lam)
        score, weight = self.family.score_and_weight(self.y, eta)
        gnorm = self._gradient_norm(score, coef, lam)
        gtol = self.tol * max(1.0, gnorm)

        converged = gnorm <= gtol
        it = 0
        while not converged and it < self.max_iter:
            it += 1
            nb0, ncoef = self._newton(eta, score, weight, lam)
            step = 1.0
            accepted = False
            # tolerate rounding noise in the objective near the optimum
            slack = 1e-12 * max(1.0, abs(obj))
            for _ in range(self.max_halving + 1):
                cb0 = b0 + step * (nb0 - b0)
                ccoef = coef + step * (ncoef - coef)
                ceta = self._eta(cb0, ccoef)
                cobj = self._objective(ceta, ccoef, lam)
                if cobj <= obj + slack:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            b0, coef, eta, obj = cb0, ccoef, ceta, cobj
            score, weight = self.family.score_and_weight(self.y, eta)
            gnorm = self._gradient_norm(score, coef, lam)
            converged = gnorm <= gtol

        beta = self.X.T @ coef if self.dual_mode else coef
        dev = self.family.deviance_eta(self.y, eta)
        return RidgeFit(
            beta=beta,
            intercept=float(b0),
            lam=lam,
            deviance=dev,
            null_deviance=self.null_deviance,
            iterations=it,
            converged=bool(converged),
            objective=float(obj),
            dual=coef if self.dual_mode else None,
        )

    def null_score_scale(self):
        """``s' X_c X_c' s`` for the score ``s`` of the intercept-only model."""
        eta = np.full(self.n, self._null_intercept)
        s, _ = self.family.score_and_weight(self.y, eta)
        s = s - s.mean()
        if self.dual_mode:
            return float(s @ self.K @ s)
        xs = self.X.T @ s
        return float(xs @ xs)


def fit_ridge(X, y, family, lam, warm_start=None, max_iter=100, tol=1e-7, max_halving=30):
    """Fit a ridge-penalised GLM at a single penalty value.

    Parameters
    ----------
    X : array-like of shape (n, p)
        Design, ideally standardised; the intercept is fitted unpenalised.
    y : array-like of shape (n,)
    family : FamilyLink or str
    lam : float
        Positive penalty.
    warm_start : array-like of shape (p,), optional

    Returns
    -------
    RidgeFit
        If the iteration cap is reached the last accepted iterate is returned
        with ``converged=False``.
    """
    solver = RidgeSolver(X, y, family, max_iter=max_iter, tol=tol, max_halving=max_halving)
    fit = solver.fit(lam, warm_start=warm_start)
    if not fit.converged:
        warnings.warn(
            f"IRLS did not converge at lambda={lam:g} after {fit.iterations} iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    return fit


def _find_lambda_max(solver, target=0.01):
    scale = solver.null_score_scale()
    if scale <= 0:
        raise DegenerateResponseError("score at the null model is zero; no lambda path exists")
    # first-order deviance gain is about 2 * scale / lam
    lam = 2.0 * scale / (0.005 * solver.null_deviance)
    for _ in range(40):
        fit = solver.fit(lam)
        if fit.deviance_ratio < target:
            return lam, fit
        lam *= 10.0
    return lam, fit


def lambda_path(X, y, family, n_lambda=100, ratio_min=1e-4, solver=None, values=None):
    """Fit a decreasing, log-equally spaced sequence of penalties.

    ``lambda_max`` is chosen so that its deviance ratio is below 0.01 and the
    grid runs down to ``lambda_max * ratio_min``. Fits use warm starts in
    decreasing order; the first starts at zero. Passing ``values`` fits a
    prescribed grid instead.
    """
    if solver is None:
        solver = RidgeSolver(X, y, family)
    if solver.degenerate or solver.null_deviance <= 0:
        raise DegenerateResponseError("constant response: null deviance is zero")
    if values is None:
        if n_lambda < 2:
            raise ValueError("n_lambda must be at least 2")
        lam_max, _ = _find_lambda_max(solver)
        values = np.geomspace(lam_max, lam_max * ratio_min, n_lambda)
    else:
        values = np.asarray(values, dtype=float)
    fits = []
    prev = None
    for lam in values:
        if prev is None:
            fit = solver.fit(lam)
        else:
            fit = solver.fit(lam, warm_start=None if solver.dual_mode else prev.beta,
                             warm_intercept=prev.intercept, dual_start=prev.dual)
        fits.append(fit)
        prev = fit
    return LambdaPath(values=values, fits=fits)


def select_lambda_min(path, family, threshold=None):
    """Smallest penalty whose deviance ratio does not exceed ``threshold``.

    Defaults to 0.999 for gaussian and 0.8 for the other families. If every
    fit on the path exceeds the threshold, the largest penalty is returned
    together with a :class:`SaturationWarning`.
    """
    if len(path) == 0:
        raise ValueError("empty lambda path")
    if threshold is None:
        threshold = default_threshold(family)
    ratios = path.deviance_ratios
    ok = np.flatnonzero(ratios <= threshold)
    if ok.size == 0:
        warnings.warn(
            f"every lambda on the path explains more than {threshold:g} of the null deviance",
            SaturationWarning,
            stacklevel=2,
        )
        i = int(np.argmax(path.values))
    else:
        i = int(ok[np.argmin(path.values[ok])])
    return float(path.values[i]), path.fits[i]


def make_folds(y, family, n_folds, random_state):
    """Fold assignment array; stratified by class for binomial responses."""
    family = get_family(family)
    y = np.asarray(y)
    rs = check_random_state(random_state)
    if family.family == "binomial" and np.all((y == 0) | (y == 1)):
        counts = np.bincount(y.astype(int), minlength=2)
        if counts.min() >= n_folds:
            splitter = StratifiedKFold(n_folds, shuffle=True, random_state=rs)
            split = splitter.split(np.zeros(len(y)), y.astype(int))
        else:
            split = KFold(n_folds, shuffle=True, random_state=rs).split(y)
    else:
        split = KFold(n_folds, shuffle=True, random_state=rs).split(y)
    fold_of = np.empty(len(y), dtype=int)
    for k, (_, test) in enumerate(split):
        fold_of[test] = k
    return fold_of


def select_lambda_cv(X, y, family, path, n_folds=10, random_state=None):
    """Penalty on ``path`` minimising mean held-out deviance over folds.

    Returns ``(lam, fit, mean_deviance)`` where ``fit`` is the full-data fit
    at the chosen penalty.
    """
    family = get_family(family)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    fold_of = make_folds(y, family, n_folds, random_state)
    scores = np.zeros((n_folds, len(path)))
    for k in range(n_folds):
        train = fold_of != k
        test = ~train
        solver = RidgeSolver(X[train], y[train], family)
        if solver.degenerate:
            # a fold with constant training response cannot be fitted
            scores[k] = np.nan
            continue
        fp = lambda_path(None, None, family, solver=solver, values=path.values)
        for j, f in enumerate(fp.fits):
            eta = f.intercept + X[test] @ f.beta
            scores[k, j] = family.deviance_eta(y[test], eta) / test.sum()
    mean = np.nanmean(scores, axis=0)
    j = int(np.nanargmin(mean))
    return float(path.values[j]), path.fits[j], mean


def holp_glm_limit(X, y, family, centering="mean", jitter=None,
                   binomial_correction=(0.25, 0.75), poisson_zero=0.5,
                   return_intercept=False):
    """Closed-form limit of the ridge path as the penalty vanishes.

    Computes ``Xc' (Xc Xc' + jitter I)^{-1} gc`` with ``gc`` the centred
    link-transformed response. Boundary responses are continuity corrected
    first. ``jitter=None`` uses ``1e-8 * trace(Xc Xc') / n``; ``jitter=0``
    uses a minimum-norm least-squares solve (a generalised inverse).

    Parameters
    ----------
    centering : {'mean', 'median', 'none'}
    """
    fl = get_family(family)
    if not fl.is_canonical():
        raise ValueError(f"the closed-form limit needs a canonical link, got {fl}")
    X = np.asarray(X, dtype=float)
    y = fl.validate_response(y)
    g = fl.link_response(y, binomial_correction=binomial_correction, poisson_zero=poisson_zero)
    if centering == "mean":
        xc, gc = X.mean(axis=0), g.mean()
    elif centering == "median":
        xc, gc = np.median(X, axis=0), np.median(g)
    elif centering == "none":
        xc, gc = np.zeros(X.shape[1]), 0.0
    else:
        raise ValueError("centering must be 'mean', 'median' or 'none'")
    Xc = X - xc
    G = Xc @ Xc.T
    n = X.shape[0]
    if jitter is None:
        jitter = 1e-8 * np.trace(G) / n
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    rhs = g - gc
    if jitter == 0:
        u = linalg.lstsq(G, rhs, cond=None)[0]
    else:
        u = _solve_pd(G + jitter * np.eye(n), rhs)
    beta = Xc.T @ u
    if return_intercept:
        return beta, float(gc - xc @ beta)
    return beta


class RidgeGLM(BaseEstimator):
    """Ridge-penalised GLM with data-driven penalty selection.

    Parameters
    ----------
    family : str, default='gaussian-identity'
    lam : float or {'deviance_ratio', 'cv'}, default='deviance_ratio'
        A fixed penalty, the deviance-ratio rule, or 10-fold CV deviance.
    threshold : float, optional
        Deviance-ratio threshold; family default when None.
    n_lambda : int, default=100
    lambda_ratio_min : float, default=1e-4
    cv : int, default=10
    random_state : int, RandomState instance or None
    """

    def __init__(self, family="gaussian-identity", lam="deviance_ratio", threshold=None,
                 n_lambda=100, lambda_ratio_min=1e-4, cv=10, random_state=None):
        self.family = family
        self.lam = lam
        self.threshold = threshold
        self.n_lambda = n_lambda
        self.lambda_ratio_min = lambda_ratio_min
        self.cv = cv
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        fl = get_family(self.family)
        y = fl.validate_response(y)
        solver = RidgeSolver(X, y, fl)
        if isinstance(self.lam, str):
            self.path_ = lambda_path(None, None, fl, self.n_lambda, self.lambda_ratio_min, solver=solver)
            if self.lam == "deviance_ratio":
                lam, fit = select_lambda_min(self.path_, fl, self.threshold)
            elif self.lam == "cv":
                lam, fit, _ = select_lambda_cv(X, y, fl, self.path_, self.cv, self.random_state)
            else:
                raise ValueError(f"unknown penalty rule {self.lam!r}")
        else:
            lam = float(self.lam)
            fit = solver.fit(lam)
        self.lambda_ = lam
        self.coef_ = fit.beta
        self.intercept_ = fit.intercept
        self.deviance_ratio_ = fit.deviance_ratio
        self.fit_ = fit
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return self.intercept_ + X @ self.coef_

    def predict(self, X):
        return get_family(self.family).linkinv(self.decision_function(X))
