"""Independent reference implementations used by the tests.

Nothing here imports the library's numerics: metrics are plain Python loops
and gradients come from central finite differences.
"""

import math

import numpy as np


def nrmse_ref(y, y_hat):
    n = len(y)
    mse = sum((a - b) ** 2 for a, b in zip(y, y_hat)) / n
    return math.sqrt(mse) / (max(y) - min(y))


def nmae_ref(y, y_hat):
    n = len(y)
    return sum(abs(a - b) for a, b in zip(y, y_hat)) / n / (max(y) - min(y))


def r2_ref(y, y_hat):
    mean = sum(y) / len(y)
    ss_res = sum((a - b) ** 2 for a, b in zip(y, y_hat))
    ss_tot = sum((a - mean) ** 2 for a in y)
    return 1.0 - ss_res / ss_tot


def mape_ref(y, y_hat, eps=1e-8):
    terms = [abs((a - b) / a) for a, b in zip(y, y_hat) if abs(a) > eps]
    return 100.0 * sum(terms) / len(terms)


def central_difference(loss, array, step=1e-5):
    """Numerical gradient of ``loss()`` w.r.t. every entry of ``array`` (perturbed in place)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + step
        up = loss()
        flat[i] = keep - step
        down = loss()
        flat[i] = keep
        out[i] = (up - down) / (2 * step)
    return grad


def relative_error(analytic, numeric):
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)
