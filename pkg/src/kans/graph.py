"""Sensor embeddings and the top-k cosine-similarity graph built from them.

Adjacency convention: ``adj[i, j] == 1`` means sensor ``j`` is an
in-neighbour of sensor ``i`` (a directed edge ``j -> i``). Each row therefore
lists the ``k`` candidates selected for destination ``i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ShapeError

ZERO_NORM = 1e-12


@dataclass
class EmbeddingTable:
    """``N x d`` learnable matrix; row ``i`` is sensor ``i``'s embedding."""

    Z: np.ndarray

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]


def init_embeddings(n: int, d: int, seed: int = 0) -> EmbeddingTable:
    """Draw ``N(0, 1/d)`` entries; rows are redrawn in the (measure-zero) zero case."""
    if n < 2:
        raise ConfigError(f"a sensor graph needs at least 2 nodes, got n={n}")
    if d < 1:
        raise ConfigError(f"embedding dimension must be >= 1, got d={d}")
    rng = np.random.default_rng(seed)
    Z = rng.normal(0.0, 1.0 / np.sqrt(d), size=(n, d))
    while True:
        bad = np.linalg.norm(Z, axis=1) <= ZERO_NORM
        if not bad.any():
            break
        Z[bad] = rng.normal(0.0, 1.0 / np.sqrt(d), size=(int(bad.sum()), d))
    return EmbeddingTable(Z)


def cosine_similarity_matrix(Z) -> np.ndarray:
    """Pairwise cosine similarity of embedding rows; symmetric, entries in [-1, 1].

    The diagonal is returned as computed (~1) but is never a graph candidate.
    """
    Z = np.asarray(getattr(Z, "Z", Z), dtype=np.float64)
    norms = np.linalg.norm(Z, axis=1)
    bad = np.flatnonzero(norms <= ZERO_NORM)
    if bad.size:
        raise DataError(f"zero-norm embedding for sensor(s) {bad.tolist()}")
    U = Z / norms[:, None]
    E = U @ U.T
    E = 0.5 * (E + E.T)
    return E


def topk_adjacency(E: np.ndarray, k: int) -> np.ndarray:
    """Keep, for each node ``i``, the ``k`` most similar other nodes.

    Ties are broken toward the lower sensor index. Returns an ``int8`` matrix
    with exactly ``k`` ones per row and a zero diagonal.
    """
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0]
    if E.shape != (n, n):
        raise ShapeError(f"similarity matrix must be square, got {E.shape}")
    if not 0 <= k <= n - 1:
        raise ConfigError(f"k={k} outside [0, {n - 1}] for {n} nodes")
    adj = np.zeros((n, n), dtype=np.int8)
    if k == 0:
        return adj
    idx = np.arange(n)
    for i in range(n):
        cand = idx[idx != i]
        # lexsort: last key is primary -> descending similarity, then ascending index
        order = np.lexsort((cand, -E[i, cand]))
        adj[i, cand[order[:k]]] = 1
    return adj


def symmetrize(adj: np.ndarray) -> np.ndarray:
    return np.maximum(adj, adj.T)


def neighbors(adj: np.ndarray, i: int) -> list[int]:
    """In-neighbours of node ``i`` in ascending index order."""
    return np.flatnonzero(adj[i]).tolist()


def learn_graph(Z, k: int, symmetric: bool = False) -> tuple[np.ndarray, np.ndarray]:
    E = cosine_similarity_matrix(Z)
    adj = topk_adjacency(E, k)
    if symmetric:
        adj = symmetrize(adj)
    return E, adj


def export_graph(E: np.ndarray, adj: np.ndarray, k: int, json_path, csv_path=None, tags=None) -> None:
    """Write ``{k, edges: [[j, i, e_ji], ...]}`` and optionally the full similarity CSV."""
    src_dst = np.argwhere(adj.T > 0)  # rows (j, i)
    edges = [[int(j), int(i), float(E[j, i])] for j, i in src_dst]
    doc = {"k": int(k), "edges": edges}
    if tags is not None:
        doc["tags"] = list(tags)
    Path(json_path).write_text(json.dumps(doc, indent=1) + "\n")
    if csv_path is not None:
        from .discovery import write_matrix_csv

        labels = list(tags) if tags is not None else [str(i) for i in range(E.shape[0])]
        write_matrix_csv(E, labels, csv_path)
