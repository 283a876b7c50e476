"""Small hand-computed cases for each building block."""

import math

import numpy as np
import pytest

from kans.discovery import attention_matrix, embedding_correlation, pearson_matrix
from kans.gradients import loss_and_grads
from kans.graph import cosine_similarity_matrix, init_embeddings, neighbors, topk_adjacency
from kans.model import (
    ModelParams,
    aggregate,
    attention_probs,
    attention_scores,
    forward,
    init_params,
    mse_grad,
    mse_loss,
    node_features,
    readout,
)
from kans.optim import AdamState, adam_step

from oracles import central_difference


# embeddings and similarity

def test_embedding_table_size_and_seed():
    a = init_embeddings(23, 64, seed=5)
    assert a.Z.shape == (23, 64)
    np.testing.assert_array_equal(a.Z, init_embeddings(23, 64, seed=5).Z)


def test_cosine_hand_values():
    E = cosine_similarity_matrix(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 2.0], [1.0, 0.0]]))
    assert E[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert E[0, 2] == 0.0
    assert E[0, 3] == pytest.approx(1.0, abs=1e-15)


def test_three_node_topk():
    # similarities seen by node 0: node 1 -> 0.9, node 2 -> 0.1
    E = np.array([[1.0, 0.9, 0.1], [0.9, 1.0, 0.4], [0.1, 0.4, 1.0]])
    adj = topk_adjacency(E, 1)
    assert adj[0, 1] == 1 and adj[0, 2] == 0
    assert neighbors(adj, 0) == [1]
    assert neighbors(np.zeros((3, 3)), 0) == []
    assert neighbors(topk_adjacency(E, 2), 1) == [0, 2]


# node features and attention

def test_node_features_hand_case():
    Z = np.array([[1.0, 2.0], [0.5, -1.0]])
    W = np.array([[1.0, 0.0, 2.0], [0.0, -1.0, 1.0]])
    x = np.array([[1.0, 1.0, 1.0], [2.0, 0.0, -1.0]])
    g = node_features(Z, x, W)
    np.testing.assert_array_equal(g, [[1.0, 2.0, 3.0, 0.0], [0.5, -1.0, 0.0, -1.0]])
    np.testing.assert_array_equal(node_features(Z, np.zeros((2, 3)), W), np.hstack([Z, np.zeros((2, 2))]))
    np.testing.assert_array_equal(node_features(Z, Z, np.eye(2)), np.hstack([Z, Z]))


def test_attention_score_hand_case():
    g = np.array([[1.0, 0.0], [0.0, 1.0]])
    adj = np.array([[0, 1], [1, 0]])
    a = np.array([0.5, -1.0, 0.25, 2.0])
    # a . (g_i (+) g_j) by hand: (0,0)=0.75 (0,1)=2.5 (1,0)=-0.75 (1,1)=1.0
    expect = np.array([[0.75, 2.5], [-0.15, 1.0]])
    np.testing.assert_allclose(attention_scores(g, a, adj), expect, atol=1e-15)
    np.testing.assert_array_equal(attention_scores(g, np.zeros(4), adj), 0.0)
    # logit -1 gives -0.2 after the leaky slope
    assert attention_scores(np.array([[1.0], [0.0]]), np.array([-1.0, 0.0]), adj)[0, 0] == pytest.approx(-0.2)


def test_softmax_hand_cases():
    adj = np.array([[0, 1], [0, 0]])
    alpha = attention_probs(np.array([[0.0, math.log(3.0)], [5.0, 5.0]]), adj)
    np.testing.assert_allclose(alpha[0], [0.25, 0.75], atol=1e-15)
    np.testing.assert_array_equal(alpha[1], [0.0, 1.0])
    assert attention_probs(np.zeros((2, 2)), np.ones((2, 2)))[0].tolist() == [0.5, 0.5]


def test_aggregation_hand_case():
    W = np.eye(2)
    x = np.array([[1.0, -1.0], [3.0, 1.0], [-2.0, 4.0]])
    alpha = np.array([[0.5, 0.25, 0.25], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    n = aggregate(alpha, x, W)
    np.testing.assert_allclose(n[0], [0.5 + 0.75 - 0.5, max(0.0, -0.5 + 0.25 + 1.0)])
    np.testing.assert_array_equal(n[1], [3.0, 1.0])
    np.testing.assert_array_equal(n[2], [0.0, 4.0])
    np.testing.assert_array_equal(aggregate(alpha, np.zeros((3, 2)), W), 0.0)


def test_readout_hand_case():
    Z = np.array([[1.0, 0.0], [2.0, -1.0]])
    n = np.array([[3.0, 5.0], [1.0, 1.0]])
    p = ModelParams(
        W=np.eye(2), a=np.zeros(8),
        hidden_w=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0], [0.5, 0.0]]),
        hidden_b=np.array([0.0, -1.0]),
        readout_w=np.array([2.0, 3.0]), readout_b=np.array([0.5]),
    )
    # gated = [3, 0, 2, -1]; hidden = relu([3+2-0.5, 0-2-1]) = [4.5, 0]
    assert readout(Z, n, p) == pytest.approx(2.0 * 4.5 + 0.5)
    assert readout(np.zeros_like(Z), n, p) == pytest.approx(0.5)


def test_forward_is_deterministic_without_training(small_model):
    Z, params, adj, x, _ = small_model
    a = forward(Z, x, params, adj, dropout=0.5)
    b = forward(Z, x, params, adj, dropout=0.5)
    np.testing.assert_array_equal(a.y_hat, b.y_hat)
    np.testing.assert_allclose(a.alpha.sum(axis=-1), 1.0, atol=1e-12)


# loss and gradients

def test_mse_hand_cases():
    assert mse_loss([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse_loss([0.0, 2.0], [1.0, 1.0]) == 1.0


def test_mse_gradient_by_finite_differences():
    y = np.array([0.3, -1.2, 2.0])
    y_hat = np.array([0.1, 0.4, 1.5])
    numeric = central_difference(lambda: mse_loss(y, y_hat), y_hat)
    np.testing.assert_allclose(mse_grad(y, y_hat), numeric, rtol=1e-7)


def test_zero_residual_gives_zero_gradients(small_model):
    Z, params, adj, x, _ = small_model
    y = forward(Z, x, params, adj).y_hat
    _, grads, _ = loss_and_grads(Z, x, y, params, adj)
    for g in grads.values():
        assert np.all(g == 0)


def test_doubling_residual_doubles_readout_gradient(small_model):
    Z, params, adj, x, _ = small_model
    y_hat = forward(Z, x, params, adj).y_hat
    r = np.random.default_rng(0).normal(size=y_hat.shape)
    g1 = loss_and_grads(Z, x, y_hat - r, params, adj)[1]
    g2 = loss_and_grads(Z, x, y_hat - 2 * r, params, adj)[1]
    np.testing.assert_allclose(g2["readout_w"], 2 * g1["readout_w"], rtol=1e-12)
    np.testing.assert_allclose(g2["readout_b"], 2 * g1["readout_b"], rtol=1e-12)


def test_readout_only_descent_is_monotone(small_model):
    # the loss is convex in the last layer when everything before it is frozen
    Z, params, adj, x, y = small_model
    params = params.copy()
    losses = []
    for _ in range(50):
        loss, grads, _ = loss_and_grads(Z, x, y, params, adj)
        losses.append(loss)
        params.readout_w -= 1e-4 * grads["readout_w"]
        params.readout_b -= 1e-4 * grads["readout_b"]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


# optimiser

def test_adam_zero_gradient_first_step():
    params = {"p": np.array([1.5, -2.0])}
    adam_step(params, {"p": np.zeros(2)}, AdamState(), 0.001)
    np.testing.assert_array_equal(params["p"], [1.5, -2.0])


def test_adam_first_step_scalar():
    params = {"p": np.array([2.0])}
    adam_step(params, {"p": np.array([1.0])}, AdamState(), 0.001)
    # m_hat = 1, v_hat = 1
    assert params["p"][0] == pytest.approx(2.0 - 0.001 / (1.0 + 1e-8), abs=1e-15)


def test_adam_identical_tensors_update_identically():
    g = np.random.default_rng(1).normal(size=(3, 2))
    params = {"a": np.ones((3, 2)), "b": np.ones((3, 2))}
    state = AdamState()
    for _ in range(5):
        adam_step(params, {"a": g, "b": g.copy()}, state, 0.01)
    np.testing.assert_array_equal(params["a"], params["b"])


# correlation and attention averages

def test_pearson_hand_cases():
    x = np.random.default_rng(0).normal(size=50)
    C = pearson_matrix(np.vstack([x, -x, 2 * x + 3]))
    np.testing.assert_allclose(C, [[1, -1, 1], [-1, 1, -1], [1, -1, 1]], atol=1e-14)


def test_white_noise_is_uncorrelated():
    rng = np.random.default_rng(42)
    C = pearson_matrix(rng.normal(size=(2, 10_000)))
    assert abs(C[0, 1]) < 0.05


def test_embedding_correlation_hand_table():
    Z = np.array([[1.0, 2.0, 3.0, 4.0], [2.0, 0.0, 1.0, 5.0], [-1.0, -2.0, -3.0, -4.0]])
    C = embedding_correlation(Z)

    def corr(u, v):
        mu, mv = sum(u) / 4, sum(v) / 4
        num = sum((a - mu) * (b - mv) for a, b in zip(u, v))
        den = math.sqrt(sum((a - mu) ** 2 for a in u) * sum((b - mv) ** 2 for b in v))
        return num / den

    for i in range(3):
        for j in range(3):
            assert C[i, j] == pytest.approx(corr(Z[i], Z[j]), abs=1e-14)
    assert C[0, 2] == pytest.approx(-1.0)


class _Ckpt:
    def __init__(self, Z, params, adj):
        self.Z, self.params, self.adjacency = Z, params, adj


def test_attention_average_is_mean_of_windows(small_model):
    from kans.data import Windows

    Z, params, adj, x, y = small_model
    ckpt = _Ckpt(Z, params, adj)

    def windows(sel):
        return Windows(x[sel], y[sel], np.arange(len(y))[sel], 0, tuple(range(1, 6)))

    one = attention_matrix(ckpt, windows(slice(0, 1)))
    np.testing.assert_array_equal(one, forward(Z, x[0], params, adj).alpha)
    two = attention_matrix(ckpt, windows(slice(0, 2)))
    expect = 0.5 * (forward(Z, x[0], params, adj).alpha + forward(Z, x[1], params, adj).alpha)
    np.testing.assert_allclose(two, expect, atol=1e-15)
    np.testing.assert_allclose(attention_matrix(ckpt, windows(slice(None))).sum(axis=1), 1.0, atol=1e-12)
