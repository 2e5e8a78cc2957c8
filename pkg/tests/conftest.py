import numpy as np
import pytest

from gnpr import RngStream, complex_gaussian_vector, gaussian_ensemble, measure, sample_octanary_masks


def make_problem(n, m=None, seed=0, kind="gaussian", L=6, norm=1.0):
    """Ensemble, unit signal and clean measurements drawn from one seed."""
    r = RngStream(seed)
    if kind == "gaussian":
        e = gaussian_ensemble(m, n, r.child(0))
    else:
        e = sample_octanary_masks(L, n, r.child(0))
    x = complex_gaussian_vector(n, r.child(1))
    x *= norm / np.linalg.norm(x)
    return e, x, measure(e, x), r


@pytest.fixture
def problem():
    return make_problem


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
