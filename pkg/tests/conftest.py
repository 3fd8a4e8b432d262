import numpy as np
import pytest

from qembed.sampling import RngStream, random_density

ACCEPTANCE_LINES = []


@pytest.fixture
def rng(request):
    # one deterministic stream per test, keyed by the test's node id
    key = sum(ord(c) * (i + 1) for i, c in enumerate(request.node.nodeid)) % (1 << 63)
    return RngStream(0xC0FFEE, key)


@pytest.fixture
def random_hermitian():
    def make(d, stream):
        X = stream.normal((d, d)) + 1j * stream.normal((d, d))
        return (X + X.conj().T) / 2

    return make


@pytest.fixture
def random_delta():
    def make(d, stream):
        return random_density(d, d, stream) - random_density(d, d, stream)

    return make


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


np.set_printoptions(precision=6, suppress=True)
