import math

import pytest

from cotlab.utils import GEvaluator


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale runs (b = 10007, 10^5 samples and more)')


@pytest.fixture(scope='session')
def direct_cfg():
    """A cheap direct-series evaluator that never rejects a sample."""
    return GEvaluator(method='direct', n_terms=2048, tolerance=math.inf)


@pytest.fixture(scope='session')
def tiny_cfg():
    return GEvaluator(method='direct', n_terms=256, tolerance=math.inf)
