"""Exponential-dispersion families and link functions.

Only five family/link pairs are supported: gaussian-identity, gaussian-log,
binomial-logit, binomial-cloglog and poisson-log. All fitting in the package
goes through the log-likelihood kernel ``sum(y * theta - b(theta))`` and the
deviance; the normalising term ``c(y, phi)`` is never evaluated.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .exceptions import DomainError, NumericalError

__all__ = [
    "FamilyLink", "get_family", "SUPPORTED",
    "linkinv", "link", "loglik_kernel", "deviance", "null_deviance",
]

SUPPORTED = (
    ("gaussian", "identity"),
    ("gaussian", "log"),
    ("binomial", "logit"),
    ("binomial", "cloglog"),
    ("poisson", "log"),
)
_CANONICAL = {("gaussian", "identity"), ("binomial", "logit"), ("poisson", "log")}

# logit/cloglog linear predictors are clamped here before exponentiation
ETA_CLAMP = 30.0


@dataclass(frozen=True)
class FamilyLink:
    """A supported exponential family together with its link function.

    Parameters
    ----------
    family : {'gaussian', 'binomial', 'poisson'}
    link : {'identity', 'log', 'logit', 'cloglog'}

    Examples
    --------
    >>> fl = FamilyLink.from_string("binomial-logit")
    >>> float(fl.linkinv(np.array([0.0]))[0])
    0.5
    """

    family: str
    link: str

    def __post_init__(self):
        if (self.family, self.link) not in SUPPORTED:
            raise ValueError(
                f"unsupported family-link {self.family}-{self.link}; "
                f"choose one of {[f'{f}-{l}' for f, l in SUPPORTED]}"
            )

    @classmethod
    def from_string(cls, name):
        if isinstance(name, FamilyLink):
            return name
        parts = str(name).strip().lower().split("-")
        if len(parts) != 2:
            raise ValueError(f"family-link must look like 'binomial-logit', got {name!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.family}-{self.link}"

    @property
    def name(self):
        return str(self)

    def is_canonical(self):
        return (self.family, self.link) in _CANONICAL

    @property
    def dispersion_rule(self):
        """'estimate_for_reporting' for gaussian, 'fixed_one' otherwise."""
        return "estimate_for_reporting" if self.family == "gaussian" else "fixed_one"

    # ------------------------------------------------------------------
    # link and inverse link
    # ------------------------------------------------------------------
    def _clamp(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.link in ("logit", "cloglog"):
            return np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
        return eta

    def linkinv(self, eta):
        """Mean ``g^{-1}(eta)``."""
        eta = self._clamp(eta)
        if self.link == "identity":
            return eta.copy()
        if self.link == "log":
            return np.exp(eta)
        if self.link == "logit":
            return expit(eta)
        return -np.expm1(-np.exp(eta))

    def linkfun(self, mu):
        """Linear predictor ``g(mu)``; boundary means raise :class:`DomainError`."""
        mu = np.asarray(mu, dtype=float)
        self._check_mean(mu, strict=True)
        if self.link == "identity":
            return mu.copy()
        if self.link == "log":
            return np.log(mu)
        if self.link == "logit":
            return np.log(mu) - np.log1p(-mu)
        return np.log(-np.log1p(-mu))

    def mu_eta(self, eta):
        """Derivative ``d mu / d eta``."""
        eta = self._clamp(eta)
        if self.link == "identity":
            return np.ones_like(eta)
        if self.link == "log":
            return np.exp(eta)
        if self.link == "logit":
            mu = expit(eta)
            return mu * (1.0 - mu)
        return np.exp(eta - np.exp(eta))

    def _check_mean(self, mu, strict):
        if not np.all(np.isfinite(mu)):
            raise DomainError("mean contains non-finite values")
        if self.family == "binomial":
            bad = (mu <= 0) | (mu >= 1) if strict else (mu < 0) | (mu > 1)
            if np.any(bad):
                raise DomainError(
                    "binomial mean on or outside {0, 1}; a continuity correction "
                    "is required before applying the link"
                )
        elif self.family == "poisson" or self.link == "log":
            bad = mu <= 0 if strict else mu < 0
            if np.any(bad):
                raise DomainError(
                    "mean must be positive for log links; zeros need a continuity "
                    "correction before applying the link"
                )

    # ------------------------------------------------------------------
    # natural parameter and cumulant function
    # ------------------------------------------------------------------
    def theta(self, eta):
        """Natural parameter ``(b')^{-1}(g^{-1}(eta))``."""
        eta = self._clamp(eta)
        if self.is_canonical():
            return eta.copy()
        if self.family == "gaussian":  # log link
            return np.exp(eta)
        # binomial-cloglog: theta = logit(mu)
        return _log_mu_cloglog(eta) + np.exp(eta)

    def cumulant(self, theta):
        """Log-partition function ``b(theta)``."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            return 0.5 * theta**2
        if self.family == "binomial":
            return np.logaddexp(0.0, theta)
        return np.exp(theta)

    def cumulant_second(self, theta):
        """``b''(theta)``, the variance function on the natural scale."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            return np.ones_like(theta)
        if self.family == "binomial":
            return expit(theta) * expit(-theta)
        return np.exp(theta)

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.family == "gaussian":
            return np.ones_like(mu)
        if self.family == "binomial":
            return mu * (1.0 - mu)
        return mu.copy()

    # ------------------------------------------------------------------
    # likelihood pieces
    # ------------------------------------------------------------------
    def validate_response(self, y, allow_fractional=True):
        """Check ``y`` against the response domain and return it as floats.

        Binomial responses may be proportions in [0, 1] when
        ``allow_fractional`` is true; otherwise they must be 0/1.
        """
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise ValueError("response must be one-dimensional")
        if not np.all(np.isfinite(y)):
            raise DomainError("response contains non-finite values")
        if self.family == "binomial":
            if np.any((y < 0) | (y > 1)):
                raise DomainError("binomial responses must lie in [0, 1]")
            if not allow_fractional and np.any((y != 0) & (y != 1)):
                raise DomainError("binomial responses must be 0 or 1")
        elif self.family == "poisson":
            if np.any(y < 0):
                raise DomainError("poisson responses must be nonnegative")
            if not allow_fractional and np.any(y != np.round(y)):
                raise DomainError("poisson responses must be integers")
        return y

    def pointwise_loglik(self, y, eta):
        """Per-observation kernel ``y * theta - b(theta)``."""
        y = np.asarray(y, dtype=float)
        eta = self._clamp(eta)
        if self.family == "gaussian":
            th = eta if self.link == "identity" else np.exp(eta)
            return y * th - 0.5 * th**2
        if self.family == "poisson":
            return y * eta - np.exp(eta)
        if self.link == "logit":
            # y*eta - log(1 + e^eta)
            return y * eta - np.logaddexp(0.0, eta)
        log_mu = _log_mu_cloglog(eta)
        log_1mmu = -np.exp(eta)
        return y * log_mu + (1.0 - y) * log_1mmu

    def loglik_kernel(self, y, eta):
        """Sum of ``y_i theta_i - b(theta_i)`` over observations."""
        terms = self.pointwise_loglik(y, eta)
        bad = np.flatnonzero(~np.isfinite(terms))
        if bad.size:
            raise NumericalError(
                f"non-finite log-likelihood term at index {bad[0]}", index=int(bad[0])
            )
        return float(np.sum(terms))

    def _saturated_terms(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            return 0.5 * y**2
        if self.family == "binomial":
            return xlogy(y, y) + xlogy(1.0 - y, 1.0 - y)
        return xlogy(y, y) - y

    def unit_deviance_eta(self, y, eta):
        """Per-observation deviance from the linear predictor.

        Uses log-scale formulas so that clamped cloglog predictors with a
        mean that rounds to 1 still give finite values.
        """
        y = np.asarray(y, dtype=float)
        eta = self._clamp(eta)
        if self.link == "identity":
            return (y - eta) ** 2
        if self.family == "gaussian":
            return (y - np.exp(eta)) ** 2
        d = 2.0 * (self._saturated_terms(y) - self.pointwise_loglik(y, eta))
        return np.maximum(d, 0.0)

    def deviance_eta(self, y, eta):
        return float(np.sum(self.unit_deviance_eta(y, eta)))

    def unit_deviance(self, y, mu):
        y = np.asarray(y, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if self.family == "gaussian":
            self._check_mean(mu, strict=self.link == "log")
            return (y - mu) ** 2
        self._check_mean(mu, strict=True)
        if self.family == "binomial":
            d = xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu))
        else:
            d = xlogy(y, y / mu) - (y - mu)
        return np.maximum(2.0 * d, 0.0)

    def deviance(self, y, mu):
        """Deviance ``2 * (l_saturated - l(mu))``, with ``0 log 0 = 0``."""
        return float(np.sum(self.unit_deviance(y, mu)))

    def null_mean(self, y):
        return float(np.mean(np.asarray(y, dtype=float)))

    def null_deviance(self, y, return_flag=False):
        """Deviance of the intercept-only model with fitted mean ``mean(y)``.

        With ``return_flag=True`` a ``(value, degenerate)`` pair is returned;
        ``degenerate`` is true when the response is constant.
        """
        y = np.asarray(y, dtype=float)
        if y.size < 1:
            raise ValueError("null deviance needs at least one observation")
        ybar = self.null_mean(y)
        degenerate = bool(np.all(y == y[0]))
        if degenerate:
            value = 0.0
        else:
            value = self.deviance(y, np.full_like(y, ybar))
        return (value, degenerate) if return_flag else value

    def dispersion(self, y, mu):
        """Residual deviance / (n - 1) for gaussian, 1 otherwise (reporting only)."""
        if self.family != "gaussian":
            return 1.0
        y = np.asarray(y, dtype=float)
        return self.deviance(y, mu) / max(y.size - 1, 1)

    # ------------------------------------------------------------------
    # IRLS ingredients
    # ------------------------------------------------------------------
    def score_and_weight(self, y, eta):
        """Return ``d kernel / d eta`` and the Fisher weight per observation."""
        y = np.asarray(y, dtype=float)
        eta = self._clamp(eta)
        if self.link == "identity":
            return y - eta, np.ones_like(eta)
        if self.family == "poisson":
            mu = np.exp(eta)
            return y - mu, mu
        if self.family == "gaussian":  # log link
            mu = np.exp(eta)
            return (y - mu) * mu, mu**2
        if self.link == "logit":
            mu = expit(eta)
            return y - mu, mu * (1.0 - mu)
        e = np.exp(eta)
        mu = -np.expm1(-e)
        ratio = e / mu
        one_minus = np.exp(-e)
        return (y - mu) * ratio, e * ratio * one_minus

    def link_response(self, y, binomial_correction=(0.25, 0.75), poisson_zero=0.5):
        """``g(y)`` with continuity corrections at boundary responses.

        Poisson zeros become ``poisson_zero``; binomial 0/1 responses become
        the two values of ``binomial_correction`` (an approximation only).
        """
        y = np.array(y, dtype=float)
        if self.family == "poisson" or (self.family == "gaussian" and self.link == "log"):
            y[y <= 0] = poisson_zero
        elif self.family == "binomial":
            lo, hi = binomial_correction
            y[y <= 0] = lo
            y[y >= 1] = hi
        return self.linkfun(y)


def _log_mu_cloglog(eta):
    # log(1 - exp(-exp(eta))), accurate for both tails
    e = np.exp(eta)
    return np.log(-np.expm1(-e))


def get_family(name):
    """Parse ``'<family>-<link>'`` (or pass through a :class:`FamilyLink`)."""
    return FamilyLink.from_string(name)


def linkinv(fl, eta):
    return get_family(fl).linkinv(eta)


def link(fl, mu):
    return get_family(fl).linkfun(mu)


def loglik_kernel(fl, y, eta):
    return get_family(fl).loglik_kernel(y, eta)


def deviance(fl, y, mu):
    return get_family(fl).deviance(y, mu)


def null_deviance(fl, y):
    return get_family(fl).null_deviance(y)
