"""Sparse CW random projections and a dense Gaussian baseline.

A CW projection ``Phi = B D`` of shape (m, q) has exactly one nonzero per
column: column ``j`` holds ``diag[j]`` in row ``row_of[j]``. It is stored as
the pair ``(row_of, diag)`` and never materialised outside of tests.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CwProjection",
    "sample_cw",
    "sample_cw_random_sign",
    "apply",
    "sample_gaussian_rp",
    "MAX_COVERAGE_RETRIES",
]

MAX_COVERAGE_RETRIES = 1000


@dataclass(frozen=True, eq=False)
class CwProjection:
    m: int
    q: int
    row_of: np.ndarray
    diag: np.ndarray

    def __post_init__(self):
        row_of = np.asarray(self.row_of, dtype=np.int64)
        diag = np.asarray(self.diag, dtype=float)
        if row_of.shape != (self.q,) or diag.shape != (self.q,):
            raise ValueError("row_of and diag must both have length q")
        if np.any((row_of < 0) | (row_of >= self.m)):
            raise ValueError("row indices out of range")
        row_of.setflags(write=False)
        diag.setflags(write=False)
        object.__setattr__(self, "row_of", row_of)
        object.__setattr__(self, "diag", diag)

    def covers_all_rows(self):
        return bool(np.all(np.bincount(self.row_of, minlength=self.m) > 0))

    def transpose_ones(self):
        """``Phi' 1_m``, which equals ``diag`` by construction."""
        return self.back_project(np.ones(self.m))

    def back_project(self, gamma):
        """``Phi' gamma``: map reduced coefficients to the source space."""
        gamma = np.asarray(gamma, dtype=float)
        return self.diag * gamma[self.row_of]

    def toarray(self):
        dense = np.zeros((self.m, self.q))
        dense[self.row_of, np.arange(self.q)] = self.diag
        return dense

    def to_dict(self):
        return {
            "m": int(self.m),
            "q": int(self.q),
            "row_of": self.row_of.tolist(),
            "diag": self.diag.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["m"]), int(d["q"]), np.asarray(d["row_of"]), np.asarray(d["diag"]))


def _sample_surjection(m, q, rng):
    """Uniform draw from all maps [q] -> [m] that hit every row.

    Items are placed one at a time; item ``j`` opens a new row with
    probability proportional to the number of ways the remaining items can
    still cover every row. The result has the law of iid uniform rows
    conditioned on coverage.
    """
    # logf[j, c]: log #ways to place items j..q-1 given c rows already covered
    logf = np.full((q + 1, m + 1), -np.inf)
    logf[q, m] = 0.0
    cs = np.arange(m + 1, dtype=float)
    with np.errstate(divide="ignore"):
        log_c = np.log(cs)
        log_new = np.log(m - cs)
    for j in range(q - 1, -1, -1):
        stay = log_c + logf[j + 1]
        move = np.full(m + 1, -np.inf)
        move[:m] = log_new[:m] + logf[j + 1, 1:]
        logf[j] = np.logaddexp(stay, move)
    perm = rng.permutation(m)
    row_of = np.empty(q, dtype=np.int64)
    c = 0
    u = rng.random(q)
    for j in range(q):
        if c < m:
            p_new = np.exp(log_new[c] + logf[j + 1, c + 1] - logf[j, c])
        else:
            p_new = 0.0
        if u[j] < p_new:
            row_of[j] = perm[c]
            c += 1
        else:
            row_of[j] = perm[rng.integers(c)]
    return row_of


def _sample_rows(m, q, rng):
    # expected number of empty rows under iid sampling; above one, coverage
    # can be rare (m = q = 9 covers with probability 9!/9^9 ~ 1e-3)
    expected_empty = m * (1.0 - 1.0 / m) ** q
    if expected_empty > 1.0:
        return _sample_surjection(m, q, rng)
    for _ in range(MAX_COVERAGE_RETRIES):
        row_of = rng.integers(0, m, size=q)
        if np.all(np.bincount(row_of, minlength=m) > 0):
            return row_of
    raise RuntimeError(
        f"could not cover all {m} rows after {MAX_COVERAGE_RETRIES} draws of {q} columns"
    )


def sample_cw(m, q, diag, rng):
    """Sample a CW projection with the given diagonal.

    Row indices are iid uniform on ``range(m)`` and resampled wholesale until
    every row is hit. When coverage is very unlikely (e.g. ``m`` close to
    ``q``) an exact sampler of the same conditional law is used instead.

    Parameters
    ----------
    m, q : int
        Target and source dimensions, ``1 <= m <= q``.
    diag : array-like of shape (q,)
        Nonzero diagonal entries.
    rng : numpy.random.Generator
    """
    m, q = int(m), int(q)
    if not 1 <= m <= q:
        raise ValueError(f"need 1 <= m <= q, got m={m}, q={q}")
    diag = np.asarray(diag, dtype=float)
    if diag.shape != (q,):
        raise ValueError("diag must have length q")
    if np.any(diag == 0) or not np.all(np.isfinite(diag)):
        raise ValueError("diag entries must be finite and nonzero")
    rng = np.random.default_rng(rng)
    return CwProjection(m, q, _sample_rows(m, q, rng), diag)


def sample_cw_random_sign(m, q, rng):
    """CW projection with iid equiprobable +-1 diagonal, independent of rows."""
    rng = np.random.default_rng(rng)
    m, q = int(m), int(q)
    if not 1 <= m <= q:
        raise ValueError(f"need 1 <= m <= q, got m={m}, q={q}")
    row_of = _sample_rows(m, q, rng)
    diag = rng.choice(np.array([-1.0, 1.0]), size=q)
    return CwProjection(m, q, row_of, diag)


def apply(phi, X_sub):
    """Reduced predictors ``Z = X_sub Phi'`` in one pass over the columns."""
    X_sub = np.asarray(X_sub, dtype=float)
    if X_sub.ndim != 2 or X_sub.shape[1] != phi.q:
        raise ValueError(f"expected a matrix with {phi.q} columns, got shape {X_sub.shape}")
    Z = np.zeros((X_sub.shape[0], phi.m))
    # unbuffered scatter-add: Z[:, h_j] += d_j * X[:, j]
    np.add.at(Z.T, phi.row_of, (X_sub * phi.diag).T)
    return Z


def sample_gaussian_rp(m, q, rng):
    """Dense ``m x q`` matrix of iid standard normals (comparison baseline)."""
    if m > q:
        raise ValueError("need m <= q")
    return np.random.default_rng(rng).standard_normal((m, q))
