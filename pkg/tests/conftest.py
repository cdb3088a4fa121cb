import pytest

from weaknoise import locate_cycles, enumerate_prime_itineraries, perturbative_expansion, quartic_map
from weaknoise.spectral import MatrixSizes


@pytest.fixture(scope="session")
def quartic():
    return quartic_map()


@pytest.fixture(scope="session")
def quartic_cycles(quartic):
    """All prime cycles of the quartic map up to length 7, canonical order."""
    return locate_cycles(quartic, enumerate_prime_itineraries(7))


def _run(spec, cycles, n, sizes):
    sub = [c for c in cycles if c.length <= n]
    return perturbative_expansion(spec, n, sizes, cycles=sub)


@pytest.fixture(scope="session")
def quartic_run6(quartic, quartic_cycles):
    return _run(quartic, quartic_cycles, 6, MatrixSizes.uniform(16))


@pytest.fixture(scope="session")
def quartic_run7(quartic, quartic_cycles):
    return _run(quartic, quartic_cycles, 7, MatrixSizes.uniform(16))


@pytest.fixture(scope="session")
def quartic_run6_default(quartic, quartic_cycles):
    return _run(quartic, quartic_cycles, 6, MatrixSizes())


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
