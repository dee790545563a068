import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from delay_embed.signals import demean, gen_vdp
from delay_embed.spectral import SparsityPattern, detect_sparsity, dft

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])


@pytest.fixture(scope="session")
def vdp_period():
    X = gen_vdp(2.0, (1.0, 0.0), 0.01, 530 + 4 * 776)
    return demean(X.window(530, 530 + 776, 776))


@pytest.fixture(scope="session")
def five_mode_pattern():
    return SparsityPattern.from_first_half([1, 2, 4, 8, 12], 100)
