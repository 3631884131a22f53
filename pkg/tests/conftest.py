import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class StubStream:
    """Deterministic stand-in for RandomStream.

    ``uniform`` returns ``uniform_value(a, b)``; gaussians return their mean;
    integers come from ``int_values`` in order (then ``lo``); permutations are
    the identity.
    """

    def __init__(self, uniform_value=None, beta_value=0.5, int_values=()):
        self.uniform_value = uniform_value or (lambda a, b: a)
        self.beta_value = beta_value
        self.int_values = list(int_values)
        self.uniform_calls = []

    def uniform(self, a=0.0, b=1.0):
        v = self.uniform_value(a, b)
        self.uniform_calls.append((a, b, v))
        return v

    def uniform_array(self, n, a=0.0, b=1.0):
        return np.array([self.uniform(a, b) for _ in range(n)])

    def gaussian(self, mu=0.0, sigma=1.0):
        return mu

    def gaussian_array(self, n, mu=0.0, sigma=1.0):
        return np.full(n, float(mu))

    def int_inclusive(self, lo, hi):
        if self.int_values:
            return min(max(self.int_values.pop(0), lo), hi)
        return lo

    def permutation(self, n):
        return np.arange(n)

    def points_in_unit_sphere(self, k):
        return np.zeros((k, 3))

    def beta(self, a, b):
        return self.beta_value

    def spawn(self):
        return StubStream(self.uniform_value, self.beta_value, self.int_values)


@pytest.fixture
def stub():
    return StubStream


@pytest.fixture
def rng():
    return np.random.default_rng(20220101)


def random_cloud(rng, n=1024):
    c = rng.normal(size=(n, 3))
    c -= c.mean(axis=0)
    return c / np.sqrt((c ** 2).sum(axis=1)).max()


@pytest.fixture
def cloud(rng):
    return random_cloud(rng)
