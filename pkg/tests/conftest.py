import itertools

import numpy as np
import pytest

from giglab.circuits import CircuitDescriptor, canonical
from giglab.network import random_network

_acceptance_lines: list[str] = []


def all_circuits(n):
    for signs in itertools.product((1, -1), repeat=n):
        yield CircuitDescriptor(signs)


def random_networks(count, n_max, seed, n_min=1):
    rng = np.random.default_rng(seed)
    return [random_network(int(rng.integers(n_min, n_max + 1)), rng) for _ in range(count)]


@pytest.fixture
def pos3():
    return canonical(3, 1).network()


@pytest.fixture
def neg3():
    return canonical(3, -1).network()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.get_closest_marker("acceptance"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance_lines.append(f"{'PASS' if rep.passed else 'FAIL'}  {doc}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
