import numpy as np
import pytest

from slqr.config import fixture_path, load_config
from slqr.policy_iteration import policy_iteration


@pytest.fixture(scope="session")
def sec6_config():
    return load_config(fixture_path("example_sec6"))


@pytest.fixture(scope="session")
def sec6(sec6_config):
    return sec6_config.model, sec6_config.cost


@pytest.fixture(scope="session")
def sec6_reference(sec6):
    """Tight model-based optimum (P*, L*, lambda*) of the 3x3 example system."""
    model, cost = sec6
    trace = policy_iteration(model, cost, np.zeros((3, 3)), tol=1e-10, max_iter=500)
    assert trace.converged
    return trace.kernels[-1], trace.gains[-1], trace.costs[-1]
