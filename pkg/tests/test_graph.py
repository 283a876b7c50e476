import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kans.errors import ConfigError, DataError
from kans.graph import (
    cosine_similarity_matrix,
    export_graph,
    init_embeddings,
    learn_graph,
    neighbors,
    symmetrize,
    topk_adjacency,
)


def _cosine_loop(Z):
    n = Z.shape[0]
    E = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            E[i, j] = Z[i] @ Z[j] / (np.linalg.norm(Z[i]) * np.linalg.norm(Z[j]))
    return E


def test_init_embeddings_shape_and_seed():
    a = init_embeddings(7, 5, seed=3)
    b = init_embeddings(7, 5, seed=3)
    assert a.Z.shape == (7, 5)
    np.testing.assert_array_equal(a.Z, b.Z)
    assert not np.array_equal(a.Z, init_embeddings(7, 5, seed=4).Z)
    assert np.all(np.linalg.norm(a.Z, axis=1) > 0)


@pytest.mark.parametrize("n,d", [(1, 4), (5, 0)])
def test_init_embeddings_rejects_bad_sizes(n, d):
    with pytest.raises(ConfigError):
        init_embeddings(n, d)


def test_cosine_matches_loop():
    Z = np.random.default_rng(0).normal(size=(6, 3))
    E = cosine_similarity_matrix(Z)
    np.testing.assert_allclose(E, _cosine_loop(Z), atol=1e-14)
    np.testing.assert_array_equal(E, E.T)


def test_zero_embedding_is_rejected():
    Z = np.ones((4, 3))
    Z[2] = 0.0
    with pytest.raises(DataError, match=r"\[2\]"):
        cosine_similarity_matrix(Z)


def test_topk_rows_and_diagonal():
    E = cosine_similarity_matrix(np.random.default_rng(1).normal(size=(10, 4)))
    adj = topk_adjacency(E, 3)
    assert adj.sum(axis=1).tolist() == [3] * 10
    assert np.all(np.diag(adj) == 0)


def test_topk_picks_highest_similarity():
    E = np.array([[1.0, 0.9, 0.1, 0.5],
                  [0.9, 1.0, 0.2, 0.3],
                  [0.1, 0.2, 1.0, 0.8],
                  [0.5, 0.3, 0.8, 1.0]])
    adj = topk_adjacency(E, 2)
    assert neighbors(adj, 0) == [1, 3]
    assert neighbors(adj, 2) == [1, 3]


def test_topk_ties_go_to_lower_index():
    E = np.ones((5, 5))
    adj = topk_adjacency(E, 2)
    assert neighbors(adj, 0) == [1, 2]
    assert neighbors(adj, 3) == [0, 1]


@pytest.mark.parametrize("k", [-1, 5])
def test_topk_rejects_k_out_of_range(k):
    with pytest.raises(ConfigError):
        topk_adjacency(np.eye(5), k)


def test_k_zero_and_full():
    E = cosine_similarity_matrix(np.random.default_rng(2).normal(size=(5, 3)))
    assert topk_adjacency(E, 0).sum() == 0
    full = topk_adjacency(E, 4)
    np.testing.assert_array_equal(full, 1 - np.eye(5, dtype=full.dtype))


def test_symmetrize_is_union():
    adj = np.array([[0, 1, 0], [0, 0, 0], [1, 0, 0]], dtype=np.int8)
    sym = symmetrize(adj)
    np.testing.assert_array_equal(sym, sym.T)
    assert sym[1, 0] == 1 and sym[0, 2] == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_topk_random_instances(n, d, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, n))
    _, adj = learn_graph(rng.normal(size=(n, d)), k)
    assert np.all(adj.sum(axis=1) == k)
    assert np.all(np.diag(adj) == 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_cosine_scale_invariance(n, d, seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, d))
    scale = rng.uniform(0.01, 100.0, size=(n, 1))
    np.testing.assert_allclose(cosine_similarity_matrix(Z * scale), cosine_similarity_matrix(Z), atol=1e-12, rtol=0)


def test_export_graph(tmp_path):
    Z = np.random.default_rng(5).normal(size=(4, 3))
    E, adj = learn_graph(Z, 2)
    export_graph(E, adj, 2, tmp_path / "g.json", tmp_path / "e.csv", tags=list("abcd"))
    doc = json.loads((tmp_path / "g.json").read_text())
    assert doc["k"] == 2
    assert len(doc["edges"]) == 8
    for j, i, e in doc["edges"]:
        assert adj[i, j] == 1
        assert e == pytest.approx(E[j, i])
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == ",a,b,c,d"
