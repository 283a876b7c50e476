"""
Attention forward pass and its gradients
========================================

One forward pass over a batch of windows, then the analytic gradients checked
against central differences.
"""

import numpy as np

from kans import forward, init_embeddings, init_params, mse_loss
from kans.gradients import loss_and_grads
from kans.graph import learn_graph

n, d, w, hidden = 5, 4, 6, 8
Z = init_embeddings(n, d, seed=1).Z
params = init_params(n, d, w, hidden, seed=2)
_, adj = learn_graph(Z, 2)
rng = np.random.default_rng(0)
x, y = rng.random((7, n, w)), rng.random(7)

trace = forward(Z, x, params, adj)
print("predictions:", np.round(trace.y_hat, 4))
print("attention of window 0:\n", np.round(trace.alpha[0], 3))

loss, grads, _ = loss_and_grads(Z, x, y, params, adj)
print("loss", loss)

# spot-check a few entries of W with central differences
h = 1e-5
for idx in [(0, 0), (2, 3), (3, 5)]:
    keep = params.W[idx]
    params.W[idx] = keep + h
    up = mse_loss(y, forward(Z, x, params, adj).y_hat)
    params.W[idx] = keep - h
    down = mse_loss(y, forward(Z, x, params, adj).y_hat)
    params.W[idx] = keep
    print(idx, "analytic", grads["W"][idx], "numeric", (up - down) / (2 * h))
