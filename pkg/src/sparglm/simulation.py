"""Synthetic GLM data: structured covariances, sparse coefficients, responses."""
from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq
from scipy.signal import lfilter

from .exceptions import CalibrationError
from .families import get_family

__all__ = [
    "Covariance",
    "TrueModel",
    "make_sigma",
    "make_beta",
    "active_count",
    "rescale_beta",
    "calibrate_intercept",
    "sample_dataset",
    "simulate",
    "SIGNAL",
    "TARGET_MEAN",
    "BLOCK_SIZE",
]

# signal strength beta' Sigma beta and target mean response per family-link
SIGNAL = {
    "binomial-logit": 100.0,
    "binomial-cloglog": 1000.0,
    "poisson-log": 0.25,
    "gaussian-identity": 10.0,
    "gaussian-log": 0.125,
}
TARGET_MEAN = {
    "binomial-logit": 0.5,
    "binomial-cloglog": 0.7,
    "poisson-log": 10.0,
    "gaussian-identity": 1.0,
    "gaussian-log": 10.0,
}
BLOCK_SIZE = 100
RHO_COMPOUND = 0.5
RHO_AR = 0.9
KINDS = ("identity", "compound", "autocorrelated", "block")


def _ar_multiply(v, rho):
    # (Sigma v)_i = sum_j rho^|i-j| v_j via a forward and a backward filter
    fwd = lfilter([1.0], [1.0, -rho], v)
    bwd = lfilter([1.0], [1.0, -rho], v[::-1])[::-1]
    return fwd + bwd - v


@dataclass(frozen=True)
class Covariance:
    """Structured covariance with O(p) products and sampling.

    ``kind`` is one of 'identity', 'compound' (0.5 off the diagonal),
    'autocorrelated' (``0.9^|i-j|``) or 'block'. Block designs use blocks of
    100: the first half of the blocks (rounded down) are compound, the last
    block (which may be shorter) is identity, the rest autocorrelated.
    """

    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be positive")

    def blocks(self):
        """List of ``(kind, start, stop)`` triples."""
        if self.kind != "block":
            return [(self.kind, 0, self.p)]
        nb = math.ceil(self.p / BLOCK_SIZE)
        n_comp = nb // 2
        out = []
        for b in range(nb):
            start, stop = b * BLOCK_SIZE, min((b + 1) * BLOCK_SIZE, self.p)
            if b == nb - 1:
                kind = "identity"
            elif b < n_comp:
                kind = "compound"
            else:
                kind = "autocorrelated"
            out.append((kind, start, stop))
        return out

    def toarray(self):
        S = np.zeros((self.p, self.p))
        for kind, a, b in self.blocks():
            k = b - a
            if kind == "identity":
                S[a:b, a:b] = np.eye(k)
            elif kind == "compound":
                S[a:b, a:b] = RHO_COMPOUND + (1 - RHO_COMPOUND) * np.eye(k)
            else:
                i = np.arange(k)
                S[a:b, a:b] = RHO_AR ** np.abs(i[:, None] - i[None, :])
        return S

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        for kind, a, b in self.blocks():
            seg = v[a:b]
            if kind == "identity":
                out[a:b] = seg
            elif kind == "compound":
                out[a:b] = (1 - RHO_COMPOUND) * seg + RHO_COMPOUND * seg.sum()
            else:
                out[a:b] = _ar_multiply(seg, RHO_AR)
        return out

    def quad(self, v):
        """``v' Sigma v``."""
        v = np.asarray(v, dtype=float)
        return float(v @ self.matvec(v))

    def sample(self, n, rng):
        """``n`` rows from ``N_p(0, Sigma)`` using per-block factors.

        Compound blocks use ``sqrt(1 - r) z + sqrt(r) w 1`` (a rank-one
        factor); autocorrelated blocks use the bidiagonal recursion
        ``x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j``.
        """
        rng = np.random.default_rng(rng)
        Z = rng.standard_normal((n, self.p))
        X = np.empty((n, self.p))
        for kind, a, b in self.blocks():
            seg = Z[:, a:b]
            if kind == "identity":
                X[:, a:b] = seg
            elif kind == "compound":
                w = rng.standard_normal((n, 1))
                X[:, a:b] = math.sqrt(1 - RHO_COMPOUND) * seg + math.sqrt(RHO_COMPOUND) * w
            else:
                e = seg * math.sqrt(1 - RHO_AR**2)
                e[:, 0] = seg[:, 0]
                X[:, a:b] = lfilter([1.0], [1.0, -RHO_AR], e, axis=1)
        return X


def make_sigma(kind, p):
    return Covariance(kind, p)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def active_count(p, sparsity, n):
    """Number of nonzero coefficients (natural log, half-up rounding)."""
    if sparsity == "sparse":
        return _round_half_up(2 * math.log(p))
    if sparsity == "medium":
        return _round_half_up(2 * math.log(p) + n / 2)
    if sparsity == "dense":
        return _round_half_up(p / 4)
    raise ValueError(f"unknown sparsity {sparsity!r}")


def make_beta(p, sparsity, n, rng):
    """Sparse coefficients ``(-1)^u (4 log(n) / sqrt(n) + |z|)`` at random positions.

    Returns ``(beta, active)``; ``u ~ Bernoulli(0.4)`` and ``z ~ N(0, 1)``.
    """
    a = active_count(p, sparsity, n)
    if a > p:
        raise ValueError(f"{a} active coefficients requested but p={p}")
    rng = np.random.default_rng(rng)
    pos = rng.choice(p, size=a, replace=False)
    u = rng.random(a) < 0.4
    z = rng.standard_normal(a)
    beta = np.zeros(p)
    beta[pos] = np.where(u, -1.0, 1.0) * (4 * math.log(n) / math.sqrt(n) + np.abs(z))
    active = np.zeros(p, dtype=bool)
    active[pos] = True
    return beta, active


def rescale_beta(beta, sigma, c):
    """Scale ``beta`` so that ``beta' Sigma beta = c``."""
    beta = np.asarray(beta, dtype=float)
    q = sigma.quad(beta)
    if not q > 0:
        raise ValueError("cannot rescale a zero coefficient vector")
    return beta * math.sqrt(c / q)


def calibrate_intercept(family, X, beta, target_mean, tol=1e-10):
    """Intercept making the average conditional mean on ``X`` equal ``target_mean``.

    The average mean is strictly increasing in the intercept for every
    supported link, so a root is bracketed from ``[-50, 50]`` (expanded by
    doubling) and refined to ``tol`` on the mean.
    """
    fl = get_family(family)
    lin = np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float)
    if fl.link == "identity":
        return float(target_mean - lin.mean())

    def gap(b0):
        return float(np.mean(fl.linkinv(b0 + lin))) - target_mean

    lo, hi = -50.0, 50.0
    for _ in range(60):
        if gap(lo) < 0 < gap(hi):
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise CalibrationError(f"could not bracket target mean {target_mean} for {fl}")
    b0 = brentq(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(gap(b0)) > tol:
        # brentq stops on x-tolerance; finish with bisection on the mean
        a, b = lo, hi
        for _ in range(400):
            mid = 0.5 * (a + b)
            g = gap(mid)
            if abs(g) <= tol:
                return float(mid)
            a, b = (mid, b) if g < 0 else (a, mid)
        raise CalibrationError(f"calibration stalled at residual {gap(b0):.3g}")
    return float(b0)


@dataclass
class TrueModel:
    beta: np.ndarray
    beta0: float
    active: np.ndarray
    family: str
    signal_c: float
    target_mean: float

    @property
    def family_link(self):
        return get_family(self.family)


def sample_response(family, eta, rng):
    fl = get_family(family)
    mu = fl.linkinv(eta)
    rng = np.random.default_rng(rng)
    if fl.family == "gaussian":
        return mu + rng.standard_normal(mu.size)
    if fl.family == "binomial":
        return (rng.random(mu.size) < mu).astype(float)
    return rng.poisson(mu).astype(float)


def sample_dataset(n, sigma, true_model, rng):
    """Draw ``(X, y, eta_true)`` with rows ``x_i ~ N(0, Sigma)``."""
    rng = np.random.default_rng(rng)
    X = sigma.sample(n, rng)
    eta = true_model.beta0 + X @ true_model.beta
    y = sample_response(true_model.family, eta, rng)
    return X, y, eta


def simulate(family, n, p, sparsity="medium", covariance="block", n_test=0, seed=0,
             signal=None, target_mean=None):
    """One replication of the simulation design.

    The intercept is calibrated on the realised training design. Returns a
    dict with ``X``, ``y``, ``eta`` (training), ``X_test``, ``y_test``,
    ``eta_test`` and the :class:`TrueModel` under ``truth``.
    """
    fl = get_family(family)
    name = str(fl)
    rng = np.random.default_rng(seed)
    sigma = make_sigma(covariance, p)
    beta, active = make_beta(p, sparsity, n, rng)
    c = SIGNAL[name] if signal is None else signal
    tm = TARGET_MEAN[name] if target_mean is None else target_mean
    beta = rescale_beta(beta, sigma, c)
    X = sigma.sample(n, rng)
    b0 = calibrate_intercept(fl, X, beta, tm)
    truth = TrueModel(beta, b0, active, name, c, tm)
    eta = b0 + X @ beta
    y = sample_response(fl, eta, rng)
    out = {"X": X, "y": y, "eta": eta, "truth": truth, "sigma": sigma}
    if n_test:
        Xt, yt, et = sample_dataset(n_test, sigma, truth, rng)
        out.update(X_test=Xt, y_test=yt, eta_test=et)
    return out
