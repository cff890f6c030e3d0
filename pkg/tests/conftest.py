import networkx as nx
import numpy as np
import pytest

import peerex as px

# Desk-scale network shared by the acceptance experiments: configuration
# model on a heavy-tailed degree sequence (exponent ~2.1, degrees 2..150),
# 10k nodes before giant-component extraction.
DESK_N = 10_000
DESK_GRAPH_SEED = 42


def heavy_tailed_degrees(n: int, rng: np.random.Generator, kmin: int = 2, alpha: float = 2.1, kmax: int = 150):
    u = rng.random(n)
    degs = np.minimum(np.floor(kmin * u ** (-1.0 / (alpha - 1.0))).astype(int), kmax)
    if degs.sum() % 2:
        degs[0] += 1
    return degs.tolist()


def nx_to_network(g: nx.Graph, node_count: int | None = None) -> px.Network:
    n = node_count if node_count is not None else g.number_of_nodes()
    return px.Network.from_edges(list(g.edges()), n)


@pytest.fixture(scope="session")
def desk_network() -> px.Network:
    rng = np.random.default_rng(DESK_GRAPH_SEED)
    degs = heavy_tailed_degrees(DESK_N, rng)
    g = nx.Graph(nx.configuration_model(degs, seed=DESK_GRAPH_SEED))
    g.remove_edges_from(nx.selfloop_edges(g))
    net, _ = px.giant_component(nx_to_network(g, DESK_N))
    assert net.node_count >= 9_000
    return net
