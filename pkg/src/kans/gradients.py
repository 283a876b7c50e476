"""Reverse-mode gradients of the MSE loss through the graph-attention model.

The top-k graph is treated as a constant: embeddings receive gradient only
through the node features used for attention and through the readout gating.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .model import LEAKY_SLOPE, ForwardTrace, ModelParams, mse_grad


def backward(trace: ForwardTrace, y, params: ModelParams, Z) -> dict[str, np.ndarray]:
    """Gradients of ``mean((y_hat - y)**2)`` over the traced batch.

    Returns a dict keyed by ``"Z"`` and the :class:`ModelParams` field names.
    """
    Z = np.asarray(getattr(Z, "Z", Z))
    y_hat = np.atleast_1d(trace.y_hat)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape != y_hat.shape:
        raise ShapeError(f"{y.shape[0]} targets for a trace of {y_hat.shape[0]} predictions")
    x = trace.x.reshape((-1,) + trace.x.shape[-2:])
    proj = trace.proj.reshape(x.shape[:2] + (-1,))
    if proj.shape[-1] != params.d or x.shape[-1] != params.w or Z.shape != (x.shape[1], params.d):
        raise ShapeError("trace does not match the supplied parameters")
    B, N, _ = x.shape
    d = params.d
    g = trace.g.reshape(B, N, 2 * d)
    alpha = trace.alpha.reshape(B, N, N)
    pre_score = trace.pre_score.reshape(B, N, N)
    pre_agg = trace.pre_agg.reshape(B, N, d)
    n = trace.n.reshape(B, N, d)
    gated = trace.gated.reshape(B, N * d)
    hidden_pre = trace.hidden_pre.reshape(B, -1)
    mask = None if trace.hidden_mask is None else trace.hidden_mask.reshape(B, -1)

    dy = mse_grad(y, y_hat)  # (B,)

    # readout and hidden layer
    hidden = np.maximum(hidden_pre, 0.0)
    if mask is not None:
        hidden = hidden * mask
    grads = {
        "readout_w": hidden.T @ dy,
        "readout_b": np.array([dy.sum()]),
    }
    d_hidden = dy[:, None] * params.readout_w[None, :]
    if mask is not None:
        d_hidden = d_hidden * mask
    d_hidden_pre = d_hidden * (hidden_pre > 0)
    grads["hidden_w"] = gated.T @ d_hidden_pre
    grads["hidden_b"] = d_hidden_pre.sum(axis=0)
    d_gated = (d_hidden_pre @ params.hidden_w.T).reshape(B, N, d)

    # gating z_i * n_i
    dZ = (d_gated * n).sum(axis=0)
    d_pre_agg = d_gated * Z * (pre_agg > 0)

    # aggregation n = alpha @ proj
    d_alpha = d_pre_agg @ proj.transpose(0, 2, 1)
    d_proj = alpha.transpose(0, 2, 1) @ d_pre_agg

    # masked softmax and LeakyReLU
    d_scores = alpha * (d_alpha - (d_alpha * alpha).sum(axis=-1, keepdims=True))
    d_pre = d_scores * np.where(pre_score > 0, 1.0, LEAKY_SLOPE) * trace.support

    # pre_score[i, j] = a_dst . g_i + a_src . g_j
    a_dst, a_src = params.a[:2 * d], params.a[2 * d:]
    d_dst = d_pre.sum(axis=2)  # (B, N)
    d_src = d_pre.sum(axis=1)
    grads["a"] = np.concatenate([
        np.einsum("bn,bnf->f", d_dst, g),
        np.einsum("bn,bnf->f", d_src, g),
    ])
    d_g = d_dst[..., None] * a_dst + d_src[..., None] * a_src
    dZ += d_g[..., :d].sum(axis=0)
    d_proj += d_g[..., d:]

    # proj = x @ W.T
    grads["W"] = np.einsum("bnd,bnw->dw", d_proj, x)
    grads["Z"] = dZ
    return grads


def loss_and_grads(Z, x, y, params: ModelParams, adj, dropout=0.0, training=False, rng=None):
    from .model import forward, mse_loss

    trace = forward(Z, x, params, adj, dropout=dropout, training=training, rng=rng)
    return mse_loss(y, trace.y_hat), backward(trace, y, params, Z), trace
