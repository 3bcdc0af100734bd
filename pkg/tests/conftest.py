import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from idlegrad import costs, data, graph
from idlegrad.schedule import stream

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

ACCEPTANCE_LINES = []


def small_network(seed, n):
    """A connected random geometric graph on n nodes (radius grows until connected)."""
    rng = stream(seed, 0, "graph")
    return graph.random_geometric_graph(n, 0.9 if n <= 4 else 0.7, rng)


def small_instance(seed, n=5, d=3, kind="logistic", constraint=None):
    """(network, PD Metropolis weights, problem instance) for quick tests."""
    net = small_network(seed, n)
    C = graph.ensure_positive_definite(graph.metropolis_weights(net), 0.1)
    rng = stream(seed, 0, "data")
    if kind == "logistic":
        shards, _ = data.gen_synthetic(n, 3, d - 1, 0.1, rng)
        model = costs.LogisticCost.from_shards(shards.features, shards.labels, 0.1)
    else:
        model = costs.QuadraticCost(rng.uniform(-3, 3, size=(n, d)))
    constraint = constraint or costs.Ball(5.0)
    return net, C, costs.derive_constants(model, constraint)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def uniform_rows(seed, n, d, scale=5.0):
    return stream(seed, 0, "init").uniform(-scale, scale, size=(n, d))


np.set_printoptions(precision=6)
