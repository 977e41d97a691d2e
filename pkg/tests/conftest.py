import math

import pytest
from hypothesis import settings

from hemodyn import ModelParams, linearize

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def params_for_ratio(R, n=10.0, delta=0.05, **kw):
    """Parameters with n(beta0 - delta)/beta0 = R (needs n > R)."""
    return ModelParams(delta=delta, beta0=n * delta / (n - R), n=n, **kw)


@pytest.fixture
def clinical():
    return ModelParams()


@pytest.fixture
def clinical_lin(clinical):
    return linearize(clinical)


@pytest.fixture
def x_star(clinical):
    return clinical.theta * (clinical.beta0 / clinical.delta - 1.0) ** (1.0 / clinical.n)
