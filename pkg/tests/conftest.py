import functools

import pytest
from hypothesis import HealthCheck, settings

from hermitian_energy.scenarios import admissible_potential, default_grid, make_metric

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


@functools.lru_cache(maxsize=None)
def scenario(kind: str, n: int, seed: int = 0, epsilon: float = 0.3):
    return make_metric(kind, n, default_grid(n), epsilon, seed)


@functools.lru_cache(maxsize=None)
def potential(kind: str, n: int, metric_seed: int, seed: int, amplitude: float = 0.6):
    return admissible_potential(scenario(kind, n, metric_seed), seed=seed, amplitude=amplitude).phi


@pytest.fixture
def nk3():
    return scenario("nonkaehler_perturbed", 3, 1)


@pytest.fixture
def nk2():
    return scenario("nonkaehler_perturbed", 2, 1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        for line in ACCEPTANCE_LINES[k]:
            terminalreporter.write_line(line)
