import numpy as np
import pytest
from hypothesis import settings

from concentration_lab import (make_forbidden, make_markov, make_product,
                               make_row_homogeneous)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# kernels with Doeblin coefficient 0, 0.5 and 0.8
KERNELS = {
    0.0: [[0.6, 0.4], [0.6, 0.4]],
    0.5: [[0.75, 0.25], [0.25, 0.75]],
    0.8: [[0.9, 0.1], [0.1, 0.9]],
}


def family_measures(n):
    """The five measure families of the test matrix at length n."""
    return {
        "product": make_product([[0.3, 0.7] if i % 2 else [0.6, 0.4] for i in range(n)]),
        "markov_0.5": make_markov([0.5, 0.5], KERNELS[0.5], n),
        "markov_0.8": make_markov([0.4, 0.6], KERNELS[0.8], n),
        "row_homogeneous": make_row_homogeneous(n),
        "forbidden": make_forbidden(n),
    }


def tail_matrix(n):
    """Families for the Monte Carlo harness: product, Markov theta in {0, .5, .8},
    row-homogeneous and forbidden."""
    fams = family_measures(n)
    fams["markov_0.0"] = make_markov([0.5, 0.5], KERNELS[0.0], n)
    return fams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
