import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from deepzero.generator import GeneratorSpec
from deepzero.lattice import make_lattice
from deepzero.spectrum import GeneratorPair, PeriodizationEvaluator

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def spec():
    return GeneratorSpec()


@pytest.fixture(scope="session")
def gp():
    return GeneratorPair()


@pytest.fixture(scope="session")
def gp_gauss():
    return GeneratorPair(GeneratorSpec(1.0, 0.0))


@pytest.fixture(scope="session")
def pe():
    return PeriodizationEvaluator()


@pytest.fixture(scope="session")
def lattice24():
    return make_lattice(24)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
