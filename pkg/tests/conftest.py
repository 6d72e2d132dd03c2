import numpy as np
import pytest

from cactuspile.analysis.engine import Configuration, add_and_relax
from cactuspile.analysis.topology import build_ball
from cactuspile.documents import graph_to_document


@pytest.fixture(scope="session")
def ball0():
    return build_ball(0)


@pytest.fixture(scope="session")
def ball1():
    return build_ball(1)


@pytest.fixture(scope="session")
def ball2():
    return build_ball(2)


@pytest.fixture
def graph_file(tmp_path):
    """Write a graph document and return its path."""

    def write(graph, name="graph.json"):
        path = tmp_path / name
        path.write_text(graph_to_document(graph).model_dump_json())
        return str(path)

    return write


def random_recurrent(graph, count, seed):
    """Recurrent configurations reached by dropping grains on the maximal one."""
    rng = np.random.default_rng(seed)
    config = Configuration.uniform(graph, 3)
    found = []
    for _ in range(count):
        config = add_and_relax(graph, config, int(rng.integers(graph.vertex_count))).final
        found.append(config)
    return found


@pytest.fixture(scope="session")
def recurrent_sample(ball2):
    return random_recurrent(ball2, 1000, seed=11)
