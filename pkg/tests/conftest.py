import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from esnlens import set_backend
from esnlens.reservoir import DeepEsnModel, ReservoirLayer

settings.register_profile(
    "default", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    previous = set_backend(request.param)
    yield request.param
    set_backend(previous)


def linear_model(W, W_in, alpha=1.0, activation="tanh", W_out=None, L=1, **kw):
    layer = ReservoirLayer(np.asarray(W, float), np.asarray(W_in, float), alpha, activation)
    return DeepEsnModel([layer], output_dim=L, spectral_radius_bound=0.999, readout_weights=W_out, **kw)


def mnist_dir():
    """Directory with the four MNIST IDX files, or None."""
    candidates = []
    if os.environ.get("ESNLENS_DATA_DIR"):
        base = Path(os.environ["ESNLENS_DATA_DIR"])
        candidates += [base / "mnist", base]
    candidates.append(Path("/root/data/mnist"))
    for d in candidates:
        if (d / "train-images-idx3-ubyte").is_file() or (d / "train-images-idx3-ubyte.gz").is_file():
            return d
    return None


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
