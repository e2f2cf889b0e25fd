import dataclasses

import numpy as np
import pytest

from wavelattice.config import ModelConfig
from wavelattice.lattice import canonical
from wavelattice.state import ShellState


def small_config(**overrides) -> ModelConfig:
    """A cheap configuration for unit tests: few directions, shallow grid."""
    base = dict(rho_max=2, n_dir=2, angular_profile="constant", t_end=0.5,
                output_interval=0.1)
    base.update(overrides)
    return dataclasses.replace(ModelConfig(), **base)


def random_shell_state(rng: np.random.Generator, xi: int = 3, max_shells: int = 20,
                       max_level: int = 4, max_numerator: int = 60) -> ShellState:
    """Sparse state with up to ``max_shells`` shells and amplitudes in [0, 1]."""
    k = int(rng.integers(1, max_shells + 1))
    shells = {}
    while len(shells) < k:
        eta = int(rng.integers(0, max_level + 1))
        m = int(rng.integers(1, max_numerator + 1))
        shells[canonical(xi, m, eta)] = float(rng.uniform(0.0, 1.0))
    return ShellState(shells)


class RandomTable:
    """A random test function: a fresh uniform value per radius, fixed once drawn."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.values = {}

    def __call__(self, r):
        if r not in self.values:
            self.values[r] = float(self.rng.uniform(-1.0, 1.0))
        return self.values[r]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
