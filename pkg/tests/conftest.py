import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FAMILY_LINKS = ["gaussian-identity", "gaussian-log", "binomial-logit", "binomial-cloglog",
                "poisson-log"]
CANONICAL = ["gaussian-identity", "binomial-logit", "poisson-log"]


def draw_response(family, eta, rng):
    from sparglm.simulation import sample_response
    return sample_response(family, eta, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
