import math

import numpy as np
import pytest

from sparglm.exceptions import CalibrationError
from sparglm.families import get_family
from sparglm.simulation import (SIGNAL, TARGET_MEAN, TrueModel, active_count, calibrate_intercept,
                                make_beta, make_sigma, rescale_beta, sample_dataset, simulate)

from conftest import FAMILY_LINKS

KINDS = ["identity", "compound", "autocorrelated", "block"]


def test_small_sigmas():
    assert np.array_equal(make_sigma("identity", 3).toarray(), np.eye(3))
    expected = np.array([[1, .9, .81], [.9, 1, .9], [.81, .9, 1]])
    assert np.allclose(make_sigma("autocorrelated", 3).toarray(), expected, atol=1e-15)
    assert np.allclose(make_sigma("compound", 3).toarray(), 0.5 + 0.5 * np.eye(3))


def test_block_layout():
    kinds = [k for k, _, _ in make_sigma("block", 400).blocks()]
    assert kinds == ["compound", "compound", "autocorrelated", "identity"]
    kinds = [k for k, _, _ in make_sigma("block", 2000).blocks()]
    assert kinds.count("compound") == 10 and kinds.count("autocorrelated") == 9
    assert kinds[-1] == "identity"
    last = make_sigma("block", 250).blocks()[-1]
    assert last == ("identity", 200, 250)


@pytest.mark.parametrize("kind", KINDS)
def test_matvec_matches_dense(kind):
    s = make_sigma(kind, 230)
    v = np.random.default_rng(0).normal(size=230)
    assert np.allclose(s.matvec(v), s.toarray() @ v, atol=1e-12)


def test_block_sampling_covariance():
    s = make_sigma("block", 400)
    X = s.sample(100_000, np.random.default_rng(1))
    emp = X.T @ X / X.shape[0]
    assert np.max(np.abs(emp - s.toarray())) < 0.02


@pytest.mark.parametrize("p, sparsity, n, a", [
    (2000, "sparse", 200, 15), (2000, "medium", 200, 115), (500, "dense", 100, 125),
])
def test_active_count_examples(p, sparsity, n, a):
    assert active_count(p, sparsity, n) == a


def test_active_count_formulas():
    # [DERIVED] natural log, half-up rounding
    for p in (500, 2000, 10000):
        for n in (100, 200):
            assert active_count(p, "sparse", n) == math.floor(2 * math.log(p) + 0.5)
            assert active_count(p, "medium", n) == math.floor(2 * math.log(p) + n / 2 + 0.5)
            assert active_count(p, "dense", n) == math.floor(p / 4 + 0.5)


def test_make_beta_structure():
    beta, active = make_beta(500, "medium", 100, np.random.default_rng(0))
    assert active.sum() == active_count(500, "medium", 100)
    assert np.all(beta[~active] == 0)
    assert np.all(np.abs(beta[active]) >= 4 * math.log(100) / 10)
    with pytest.raises(ValueError):
        make_beta(10, "medium", 100, np.random.default_rng(0))


def test_sign_frequency():
    beta, active = make_beta(100_000, "dense", 100, np.random.default_rng(1))
    assert abs(np.mean(beta[active] < 0) - 0.4) < 0.01


def test_rescale():
    s = make_sigma("identity", 2)
    assert np.array_equal(rescale_beta(np.array([3.0, 4.0]), s, 25.0), [3.0, 4.0])
    with pytest.raises(ValueError):
        rescale_beta(np.zeros(2), s, 1.0)


def test_calibration_closed_forms():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 4))
    beta = rng.normal(size=4)
    b0 = calibrate_intercept("gaussian-identity", X, beta, 1.0)
    assert b0 == 1.0 - np.mean(X @ beta)
    assert calibrate_intercept("poisson-log", X, np.zeros(4), 10.0) == pytest.approx(math.log(10),
                                                                                     abs=1e-12)


def test_calibration_failure():
    with pytest.raises(CalibrationError):
        calibrate_intercept("binomial-logit", np.zeros((5, 1)), np.zeros(1), 1.5)


@pytest.mark.parametrize("fl", FAMILY_LINKS)
@pytest.mark.parametrize("kind", KINDS)
def test_signal_and_mean_calibration(fl, kind):
    d = simulate(fl, 200, 500, "medium", kind, seed=3)
    t = d["truth"]
    assert abs(d["sigma"].quad(t.beta) / SIGNAL[fl] - 1) < 1e-10
    mu = get_family(fl).linkinv(t.beta0 + d["X"] @ t.beta)
    assert abs(mu.mean() - TARGET_MEAN[fl]) < 1e-9


def test_sample_dataset_moments():
    tm = TrueModel(np.zeros(3), 1.0, np.zeros(3, bool), "gaussian-identity", 0.0, 1.0)
    _, y, _ = sample_dataset(100_000, make_sigma("identity", 3), tm, np.random.default_rng(4))
    assert abs(y.mean() - 1) < 0.02
    tm = TrueModel(np.zeros(3), 0.0, np.zeros(3, bool), "binomial-logit", 0.0, 0.5)
    _, y, _ = sample_dataset(10_000, make_sigma("identity", 3), tm, np.random.default_rng(5))
    assert 0.47 <= y.mean() <= 0.53


def test_simulate_deterministic():
    a = simulate("poisson-log", 30, 120, seed=7, n_test=10)
    b = simulate("poisson-log", 30, 120, seed=7, n_test=10)
    for k in ("X", "y", "X_test", "y_test"):
        assert np.array_equal(a[k], b[k])
