import math

import numpy as np
import pytest
from scipy import stats

from ionnode import NoiseConfig


@pytest.fixture
def cfg():
    return NoiseConfig()


def binomial_ok(k, n, p, nsigma=3.0):
    """True when k successes in n trials are within nsigma of mean n p."""
    sd = math.sqrt(n * p * (1 - p))
    return abs(k - n * p) <= nsigma * max(sd, 1e-12)


def chi2_ok(observed, probs, alpha=1e-3):
    observed = np.asarray(observed, dtype=float)
    expected = observed.sum() * np.asarray(probs, dtype=float)
    return stats.chisquare(observed, expected).pvalue > alpha


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
