"""Session setup: compile the jit kernels once so tests measure steady state."""

import numpy as np
import pytest

from optinformed import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    x = np.sin(np.arange(60.0)) * 0.01 + 0.001
    kernels.arma_residuals(x, 0.0, 0.1, -0.1)
    kernels.css_objective_grad(x, 0.1, -0.1)
    kernels.fit_css(x, 1e-6, 20)
    kernels.rolling_css(x, 25, 1e-6, 20)
    kernels.ar1_path(x, 0.5, 0.0, 0.0)
    kernels.arma11_path(x, 0.0, 0.5, -0.3, 0.0, 0.0)
