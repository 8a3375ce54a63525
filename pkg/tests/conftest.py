import pytest

from halfsign.context import EvalContext
from halfsign.lift import extend_eigenvalues, lift_from_eigenvalues
from halfsign.mellin import MellinEvaluator
from halfsign.qspace import HalfIntegralForm, eigenbasis


@pytest.fixture(scope="session")
def form9():
    """The k = 9 eigenform to N = 10^4, with eigenvalues extended for the lift."""
    f = eigenbasis(9, 10_000, (3, 5, 7, 11, 13))[0]
    eig = extend_eigenvalues(f, 100)
    return HalfIntegralForm(f.k, f.N, f.c, f.coords, eig, f.scale)


@pytest.fixture(scope="session")
def form9_big():
    return eigenbasis(9, 100_000)[0]


@pytest.fixture(scope="session")
def lift9(form9):
    return lift_from_eigenvalues(form9, 100)


@pytest.fixture(scope="session")
def ctx30():
    return EvalContext(digits=30)


@pytest.fixture(scope="session")
def ev30(form9, ctx30):
    return MellinEvaluator(form9, ctx30)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
