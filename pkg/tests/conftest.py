import pytest
from hypothesis import HealthCheck, settings

from stabenv.theta_core import EllipticParams

settings.register_profile("stabenv", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("stabenv")


@pytest.fixture(scope="session")
def ell():
    return EllipticParams(("0.1", "0"), 256)


ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
