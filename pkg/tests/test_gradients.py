import numpy as np
import pytest

from kans.errors import ShapeError
from kans.gradients import backward, loss_and_grads
from kans.model import PARAM_NAMES, forward, init_params, mse_loss
from kans.graph import init_embeddings, learn_graph

from oracles import central_difference, relative_error


def _check_all(Z, params, adj, x, y, dropout=0.0, seed=None, tol=1e-6):
    def rng():
        return None if seed is None else np.random.default_rng(seed)

    training = dropout > 0

    def loss():
        trace = forward(Z, x, params, adj, dropout=dropout, training=training, rng=rng())
        return mse_loss(y, trace.y_hat)

    _, grads, _ = loss_and_grads(Z, x, y, params, adj, dropout=dropout, training=training, rng=rng())
    arrays = dict(params.as_dict(), Z=Z)
    for name, arr in arrays.items():
        err = relative_error(grads[name], central_difference(loss, arr))
        assert err <= tol, (name, err)


def test_gradients_match_finite_differences(small_model):
    Z, params, adj, x, y = small_model
    _check_all(Z, params, adj, x, y)


def test_gradients_with_fixed_dropout_mask(small_model):
    Z, params, adj, x, y = small_model
    _check_all(Z, params, adj, x, y, dropout=0.3, seed=11)


def test_gradients_with_full_and_empty_graph():
    n, d, w, h = 4, 3, 5, 6
    Z = init_embeddings(n, d, seed=3).Z
    params = init_params(n, d, w, h, seed=4)
    params.hidden_b[:] = 0.05
    rng = np.random.default_rng(5)
    x, y = rng.random((6, n, w)), rng.random(6)
    for k in (0, n - 1):
        _, adj = learn_graph(Z, k)
        _check_all(Z, params, adj, x, y)


def test_gradient_keys(small_model):
    Z, params, adj, x, y = small_model
    _, grads, _ = loss_and_grads(Z, x, y, params, adj)
    assert set(grads) == set(PARAM_NAMES) | {"Z"}
    for name, arr in params.as_dict().items():
        assert grads[name].shape == arr.shape
    assert grads["Z"].shape == Z.shape


def test_batch_gradient_is_mean_of_singles(small_model):
    Z, params, adj, x, y = small_model
    _, full, _ = loss_and_grads(Z, x, y, params, adj)
    singles = [loss_and_grads(Z, x[i:i + 1], y[i:i + 1], params, adj)[1] for i in range(len(y))]
    for name in full:
        np.testing.assert_allclose(full[name], np.mean([s[name] for s in singles], axis=0), atol=1e-12)


def test_target_count_mismatch(small_model):
    Z, params, adj, x, y = small_model
    trace = forward(Z, x, params, adj)
    with pytest.raises(ShapeError):
        backward(trace, y[:-1], params, Z)
