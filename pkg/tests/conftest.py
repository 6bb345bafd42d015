import numpy as np
import pytest

from selberg_lab.lfunctions import tau_coefficients


def naive_sieve(n: int) -> np.ndarray:
    """Plain full-table Eratosthenes; independent of the segmented sieve."""
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for k in range(2, int(n ** 0.5) + 1):
        if flags[k]:
            flags[k * k::k] = False
    return np.flatnonzero(flags)


def is_prime_trial(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@pytest.fixture(scope="session")
def primes_1e6():
    return naive_sieve(10 ** 6)


@pytest.fixture(scope="session")
def tau_1e6():
    return tau_coefficients(10 ** 6)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
