import numpy as np
import pytest

from fslasso.solver import KKT_ACTIVE_TOL, KKT_INACTIVE_TOL


def assert_kkt_ok(fit, context=""):
    """Every converged fit must satisfy the optimality-report tolerances."""
    if not fit.converged:
        return
    assert fit.kkt.max_active_residual <= KKT_ACTIVE_TOL * max(fit.lam, 1.0), context
    assert fit.kkt.max_inactive_slack_violation <= KKT_INACTIVE_TOL, context


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
