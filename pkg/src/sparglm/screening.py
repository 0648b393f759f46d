"""Screening coefficients and probabilistic screening sets."""
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateResponseError, DegenerateSignalError
from .families import get_family
from .ridge import (RidgeSolver, default_threshold, holp_glm_limit, lambda_path,
                    select_lambda_cv, select_lambda_min)

__all__ = [
    "ScreeningCoefficient",
    "compute_screening_coefficient",
    "sample_screening_set",
    "FLOOR_WEIGHT",
]

# relative weight given to zero coefficients so a draw can always be completed
FLOOR_WEIGHT = 1e-12


@dataclass
class ScreeningCoefficient:
    alpha: np.ndarray
    lambda_used: float
    deviance_ratio: float
    source: str = "ridge_dev_threshold"
    intercept: float = 0.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if not np.all(np.isfinite(self.alpha)):
            raise ValueError("screening coefficient contains non-finite values")

    def to_dict(self, include_alpha=True):
        d = {
            "lambda_used": float(self.lambda_used),
            "deviance_ratio": float(self.deviance_ratio),
            "source": self.source,
            "intercept": float(self.intercept),
        }
        if include_alpha:
            d["alpha"] = self.alpha.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d.get("alpha", [])), d["lambda_used"], d["deviance_ratio"],
                   d["source"], d.get("intercept", 0.0))


def compute_screening_coefficient(X, y, family, source="ridge_dev_threshold", threshold=None,
                                  n_lambda=100, ratio_min=1e-4, cv_folds=10,
                                  random_state=None, solver=None, path=None):
    """Ridge coefficient used for screening and as the projection diagonal.

    Parameters
    ----------
    X : ndarray of shape (n, p)
        Standardised design.
    source : {'ridge_dev_threshold', 'ridge_cv', 'holp_limit'}
        Deviance-ratio rule on a lambda path (default), 10-fold CV deviance
        on the same path, or the closed-form vanishing-penalty limit.
    threshold : float, optional
        Deviance-ratio threshold; 0.999 for gaussian, 0.8 otherwise.

    Returns
    -------
    ScreeningCoefficient
    """
    fl = get_family(family)
    if source == "holp_limit":
        _, degenerate = fl.null_deviance(y, return_flag=True)
        if degenerate:
            raise DegenerateSignalError("constant response: no screening signal")
        alpha, b0 = holp_glm_limit(X, y, fl, return_intercept=True)
        sc = ScreeningCoefficient(alpha, 0.0, np.nan, source, b0)
    else:
        if solver is None:
            solver = RidgeSolver(X, y, fl)
        if solver.degenerate or solver.null_deviance <= 0:
            raise DegenerateSignalError("constant response: no screening signal")
        if path is None:
            try:
                path = lambda_path(None, None, fl, n_lambda, ratio_min, solver=solver)
            except DegenerateResponseError as exc:
                raise DegenerateSignalError(str(exc)) from exc
        if source == "ridge_dev_threshold":
            if threshold is None:
                threshold = default_threshold(fl)
            lam, fit = select_lambda_min(path, fl, threshold)
        elif source == "ridge_cv":
            lam, fit, _ = select_lambda_cv(X, y, fl, path, cv_folds, random_state)
        else:
            raise ValueError(f"unknown screening source {source!r}")
        sc = ScreeningCoefficient(fit.beta, lam, fit.deviance_ratio, source, fit.intercept)
    if not np.any(sc.alpha != 0):
        raise DegenerateSignalError("screening coefficient is identically zero")
    return sc


def sample_screening_set(alpha, n, rng, eligible=None):
    """Draw ``min(2n, p)`` distinct column indices with weights ``|alpha|``.

    Sampling is sequential without replacement: each draw picks among the
    remaining columns with probability proportional to its weight. It is
    realised by an exponential race (keys ``E_j / w_j``, smallest first),
    which has exactly that law. Zero coefficients get the floor weight
    ``FLOOR_WEIGHT * max|alpha|``.

    Parameters
    ----------
    alpha : ScreeningCoefficient or array-like of shape (p,)
    n : int
        Training sample size; ``2n`` columns are drawn.
    rng : numpy.random.Generator
    eligible : boolean array of shape (p,), optional
        Columns allowed in the draw (e.g. non-constant ones).

    Returns
    -------
    ndarray of int
        Indices in draw order.
    """
    a = np.abs(np.asarray(getattr(alpha, "alpha", alpha), dtype=float))
    p = a.size
    if p < 1:
        raise ValueError("alpha is empty")
    if eligible is None:
        eligible = np.ones(p, dtype=bool)
    candidates = np.flatnonzero(eligible)
    w = a[candidates]
    top = w.max() if w.size else 0.0
    if not top > 0:
        raise DegenerateSignalError("screening coefficient is zero on every eligible column")
    size = min(2 * int(n), candidates.size)
    if size == candidates.size:
        return candidates.copy()
    w = np.maximum(w, FLOOR_WEIGHT * top)
    rng = np.random.default_rng(rng)
    keys = rng.standard_exponential(candidates.size) / w
    chosen = np.argpartition(keys, size - 1)[:size]
    chosen = chosen[np.argsort(keys[chosen], kind="stable")]
    return candidates[chosen]
