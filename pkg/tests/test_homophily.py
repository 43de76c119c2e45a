import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paramlap.errors import UsageError
from paramlap.graph import Graph, complete_graph, path_graph, random_connected_graph
from paramlap.homophily import metrics


def brute(g, z, c):
    """All six measures evaluated directly from their definitions with loops."""
    n = g.n
    adj = g.adjacency.toarray()
    edges = [(i, j) for i in range(n) for j in range(n) if adj[i, j]]
    h_edge = sum(z[i] == z[j] for i, j in edges) / len(edges)
    h_node = np.mean([np.mean([z[j] == z[i] for j in range(n) if adj[i, j]])
                      for i in range(n) if adj[i].sum()])
    hk = []
    for k in range(c):
        deg = sum(adj[i].sum() for i in range(n) if z[i] == k)
        same = sum(adj[i, j] for i in range(n) for j in range(n) if z[i] == k and z[j] == k)
        hk.append(same / deg if deg else 0.0)
    h_class = sum(max(hk[k] - np.mean(z == k), 0) for k in range(c)) / (c - 1)
    pbar = np.array([sum(adj[i].sum() for i in range(n) if z[i] == k) for k in range(c)]) / len(edges)
    h_adj = (h_edge - np.sum(pbar ** 2)) / (1 - np.sum(pbar ** 2))
    joint = np.zeros((c, c))
    for i, j in edges:
        joint[z[i], z[j]] += 1 / len(edges)
    num = sum(joint[a, b] * math.log(joint[a, b] / (pbar[a] * pbar[b]))
              for a in range(c) for b in range(c) if joint[a, b] > 0)
    li = -num / sum(p * math.log(p) for p in pbar if p > 0)
    ahat = adj + np.eye(n)
    onehot = np.eye(c)[z]
    s = (ahat @ onehot) @ (ahat @ onehot).T
    ok = 0
    for i in range(n):
        same = [s[i, j] for j in range(n) if z[j] == z[i]]
        other = [s[i, j] for j in range(n) if z[j] != z[i]]
        ok += (not other) or np.mean(same) >= np.mean(other)
    return dict(h_edge=h_edge, h_node=h_node, h_class=h_class, h_edge_adjusted=h_adj,
                label_informativeness=li, h_agg=ok / n)


def test_k3_distinct():
    r = metrics(complete_graph(3), [0, 1, 2])
    assert r.h_edge == 0 and r.h_node == 0


def test_k3_uniform():
    r = metrics(complete_graph(3), [0, 0, 0])
    assert r.h_edge == 1 and r.h_node == 1
    assert math.isnan(r.h_class) and math.isnan(r.h_edge_adjusted)
    assert r.flags
    assert r.to_dict()["h_class"] is None


def test_p3():
    r = metrics(path_graph(3), [0, 0, 1])
    assert r.h_edge == 0.5 and r.h_node == 0.5


@given(st.integers(0, 10_000), st.integers(2, 4))
@settings(max_examples=40, deadline=None)
def test_matches_brute_force(seed, c):
    g = random_connected_graph(14, 0.2, seed=seed)
    z = np.random.default_rng(seed).integers(0, c, 14)
    z[:c] = np.arange(c)  # every class present
    got = metrics(g, z, c)
    ref = brute(g, z, c)
    for key, val in ref.items():
        assert getattr(got, key) == pytest.approx(val, abs=1e-12), key


def test_isolated_nodes_flagged():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    r = metrics(g, [0, 0, 1, 1])
    assert any("isolated" in f for f in r.flags)
    assert r.h_node == pytest.approx((1 + 0.5 + 0) / 3)


def test_label_validation():
    with pytest.raises(UsageError):
        metrics(path_graph(3), [0, 1])
    with pytest.raises(UsageError):
        metrics(path_graph(3), [0, 1, 3], c=2)


def test_json_is_strict():
    import json
    r = metrics(complete_graph(3), [0, 0, 0])
    json.loads(r.to_json())
    assert "NaN" not in r.to_json()
