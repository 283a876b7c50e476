"""Graph-attention forward pass over sensor windows.

Every function accepts either a single window (``x`` of shape ``(N, w)``) or
a batch (``(B, N, w)``); leading batch axes are carried through unchanged.
Row ``i`` of attention matrices is the destination node, column ``j`` the
neighbour, matching the adjacency convention in :mod:`kans.graph`.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ShapeError

LEAKY_SLOPE = 0.2
PARAM_NAMES = ("W", "a", "hidden_w", "hidden_b", "readout_w", "readout_b")


@dataclass
class ModelParams:
    W: np.ndarray          # (d, w) shared window projection
    a: np.ndarray          # (4d,) attention vector
    hidden_w: np.ndarray   # (N*d, H)
    hidden_b: np.ndarray   # (H,)
    readout_w: np.ndarray  # (H,)
    readout_b: np.ndarray  # (1,)

    def __post_init__(self):
        d = self.W.shape[0]
        if self.a.shape != (4 * d,):
            raise ShapeError(f"attention vector must have length 4d = {4 * d}, got {self.a.shape}")
        H = self.hidden_w.shape[1]
        if self.hidden_b.shape != (H,) or self.readout_w.shape != (H,) or self.readout_b.shape != (1,):
            raise ShapeError("hidden/readout parameter shapes are inconsistent")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def w(self) -> int:
        return self.W.shape[1]

    @property
    def hidden(self) -> int:
        return self.hidden_w.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.as_dict().items()})


def init_params(n: int, d: int, w: int, hidden: int, seed: int = 0) -> ModelParams:
    rng = np.random.default_rng(seed)
    lim_w = np.sqrt(6.0 / (d + w))
    lim_a = np.sqrt(6.0 / (4 * d + 1))
    return ModelParams(
        W=rng.uniform(-lim_w, lim_w, size=(d, w)),
        a=rng.uniform(-lim_a, lim_a, size=4 * d),
        hidden_w=rng.normal(0.0, np.sqrt(2.0 / (n * d)), size=(n * d, hidden)),
        hidden_b=np.zeros(hidden),
        readout_w=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
        readout_b=np.zeros(1),
    )


@dataclass
class ForwardTrace:
    """Intermediates of one (batched) forward pass.

    ``g``, ``alpha``, ``n`` and ``y_hat`` are the documented outputs; the
    remaining fields are kept for the backward pass.
    """

    g: np.ndarray          # (..., N, 2d)
    alpha: np.ndarray      # (..., N, N)
    n: np.ndarray          # (..., N, d)
    y_hat: np.ndarray      # (...)
    x: np.ndarray
    proj: np.ndarray       # W x_i, (..., N, d)
    pre_score: np.ndarray  # a^T (g_i + g_j) before LeakyReLU
    support: np.ndarray    # (N, N) bool, adjacency plus diagonal
    pre_agg: np.ndarray    # (..., N, d) before ReLU
    gated: np.ndarray      # (..., N*d)
    hidden_pre: np.ndarray
    hidden_mask: np.ndarray | None


def support_mask(adj: np.ndarray) -> np.ndarray:
    adj = np.asarray(adj)
    return (adj != 0) | np.eye(adj.shape[0], dtype=bool)


def _check_x(Z: np.ndarray, x: np.ndarray, W: np.ndarray) -> None:
    if x.shape[-2] != Z.shape[0]:
        raise ShapeError(f"window has {x.shape[-2]} sensor rows, embedding table has {Z.shape[0]}")
    if x.shape[-1] != W.shape[1]:
        raise ShapeError(f"window length {x.shape[-1]} does not match projection width {W.shape[1]}")
    if W.shape[0] != Z.shape[1]:
        raise ShapeError(f"projection rows {W.shape[0]} != embedding dimension {Z.shape[1]}")


def node_features(Z, x, W) -> np.ndarray:
    """``g_i = z_i (+) W x_i`` for every node; shape ``(..., N, 2d)``."""
    Z = np.asarray(getattr(Z, "Z", Z))
    x = np.asarray(x, dtype=np.float64)
    _check_x(Z, x, W)
    proj = x @ W.T
    return np.concatenate([np.broadcast_to(Z, proj.shape), proj], axis=-1)


def leaky_relu(v: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(v > 0, v, slope * v)


def _pair_logits(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    half = g.shape[-1]
    if a.shape != (2 * half,):
        raise ShapeError(f"attention vector length {a.shape} != 2 * feature width {2 * half}")
    # a^T (g_i (+) g_j) = a_dst . g_i + a_src . g_j
    dst = g @ a[:half]
    src = g @ a[half:]
    return dst[..., :, None] + src[..., None, :]


def attention_scores(g, a, adj) -> np.ndarray:
    """LeakyReLU(a^T (g_i (+) g_j)) on the support ``N(i) + {i}``; ``-inf`` elsewhere."""
    logits = _pair_logits(np.asarray(g), np.asarray(a))
    return np.where(support_mask(adj), leaky_relu(logits), -np.inf)


def attention_probs(scores, adj) -> np.ndarray:
    """Row-wise softmax restricted to ``N(i) + {i}``; exact zeros off the support."""
    support = support_mask(adj)
    s = np.where(support, scores, -np.inf)
    s = s - s.max(axis=-1, keepdims=True)
    e = np.where(support, np.exp(s), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


def aggregate(alpha, x, W, adj=None) -> np.ndarray:
    """``n_i = ReLU(sum_j alpha_ij W x_j)`` over the support (self included)."""
    alpha = np.asarray(alpha)
    proj = np.asarray(x, dtype=np.float64) @ W.T
    if alpha.shape[-1] != proj.shape[-2]:
        raise ShapeError(f"attention is {alpha.shape[-2:]} but there are {proj.shape[-2]} nodes")
    if adj is not None:
        alpha = np.where(support_mask(adj), alpha, 0.0)
    return np.maximum(alpha @ proj, 0.0)


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _rowwise(v: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``v @ M`` computed as a stack of single-row products."""
    return (v[..., None, :] @ M)[..., 0, :]


def _readout(Z, n, params: ModelParams, dropout: float, training: bool, rng):
    Z = np.asarray(getattr(Z, "Z", Z))
    if n.shape[-2:] != Z.shape:
        raise ShapeError(f"node embeddings {n.shape[-2:]} do not match embedding table {Z.shape}")
    if not 0.0 <= dropout < 1.0:
        raise ShapeError(f"dropout must lie in [0, 1), got {dropout}")
    gated = (Z * n).reshape(n.shape[:-2] + (-1,))
    if gated.shape[-1] != params.hidden_w.shape[0]:
        raise ShapeError(
            f"gated vector has {gated.shape[-1]} entries, hidden layer expects {params.hidden_w.shape[0]}"
        )
    # row-at-a-time products keep each prediction independent of batch size
    hidden_pre = _rowwise(gated, params.hidden_w) + params.hidden_b
    hidden = np.maximum(hidden_pre, 0.0)
    mask = None
    if training and dropout > 0.0:
        if rng is None:
            raise ValueError("training with dropout requires an rng")
        mask = dropout_mask(hidden.shape, dropout, rng)
        hidden = hidden * mask
    y_hat = _rowwise(hidden, params.readout_w[:, None])[..., 0] + params.readout_b[0]
    return y_hat, gated, hidden_pre, mask


def readout(Z, n, params: ModelParams, dropout: float = 0.0, training: bool = False, rng=None):
    """Gate node embeddings by ``z_i``, apply the ReLU hidden layer and the linear readout."""
    return _readout(Z, np.asarray(n), params, dropout, training, rng)[0]


def mse_loss(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("mse_loss of an empty series")
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    r = y_hat - y
    return float(np.mean(r * r))


def mse_grad(y, y_hat) -> np.ndarray:
    """dL/dy_hat for the mean squared error."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    return 2.0 * (y_hat - y) / y.size


def forward(Z, x, params: ModelParams, adj, dropout: float = 0.0, training: bool = False, rng=None) -> ForwardTrace:
    Z = np.asarray(getattr(Z, "Z", Z))
    x = np.asarray(x, dtype=np.float64)
    _check_x(Z, x, params.W)
    support = support_mask(adj)
    if support.shape != (Z.shape[0],) * 2:
        raise ShapeError(f"adjacency {support.shape} does not match {Z.shape[0]} nodes")

    proj = x @ params.W.T
    g = np.concatenate([np.broadcast_to(Z, proj.shape), proj], axis=-1)
    pre_score = _pair_logits(g, params.a)
    scores = np.where(support, leaky_relu(pre_score), -np.inf)
    alpha = attention_probs(scores, support)
    pre_agg = alpha @ proj
    n = np.maximum(pre_agg, 0.0)
    y_hat, gated, hidden_pre, mask = _readout(Z, n, params, dropout, training, rng)
    return ForwardTrace(
        g=g, alpha=alpha, n=n, y_hat=y_hat, x=x, proj=proj, pre_score=pre_score,
        support=support, pre_agg=pre_agg, gated=gated, hidden_pre=hidden_pre, hidden_mask=mask,
    )


def predict(Z, x, params: ModelParams, adj, batch_size: int | None = None) -> np.ndarray:
    """Inference-mode predictions for a stack of windows."""
    x = np.asarray(x, dtype=np.float64)
    if batch_size is None or batch_size >= len(x):
        return forward(Z, x, params, adj).y_hat
    return np.concatenate(
        [forward(Z, x[i:i + batch_size], params, adj).y_hat for i in range(0, len(x), batch_size)]
    )
