import functools

import pytest

from mfou import TimeGrid, increment_covariance, projection_kernel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=32)
def cached_kernel(horizon: float, n: int, h: float):
    """Kernels are deterministic; share them across tests to keep the suite fast."""
    return projection_kernel(cached_covariance(horizon, n, h))


@functools.lru_cache(maxsize=32)
def cached_covariance(horizon: float, n: int, h: float):
    return increment_covariance(TimeGrid(horizon, n), h)


@pytest.fixture(scope="session")
def kernel_factory():
    return cached_kernel


@pytest.fixture(scope="session")
def covariance_factory():
    return cached_covariance
