"""Interpretability matrices: data correlation, embedding correlation, attention.

All three are ``N x N`` over the input sensors and are exported as labelled
CSV files for heatmap plotting.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import ProcessDataset, Windows
from .errors import DataError, DegenerateVariableError
from .model import forward

MATRIX_KINDS = ("data", "embed", "attn")


def pearson_matrix(rows: np.ndarray, labels=None) -> np.ndarray:
    """Pearson correlation between the rows of ``rows`` (shape ``(M, L)``)."""
    rows = np.asarray(rows, dtype=np.float64)
    centred = rows - rows.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centred, axis=1)
    flat = np.flatnonzero(norms <= 1e-12 * max(1.0, float(np.abs(rows).max(initial=0.0))))
    if flat.size:
        names = [labels[i] for i in flat] if labels is not None else flat.tolist()
        raise DegenerateVariableError(f"constant series, correlation undefined: {names}", names)
    unit = centred / norms[:, None]
    C = unit @ unit.T
    C = 0.5 * (C + C.T)
    if np.abs(C).max() > 1.0 + 1e-12:
        raise ArithmeticError("correlation outside [-1, 1]")
    return C


def data_correlation(ds: ProcessDataset, variables=None, rows=None) -> np.ndarray:
    """Pairwise correlation of raw sensor series, optionally on a row range."""
    variables = list(range(ds.D)) if variables is None else list(variables)
    block = ds.values if rows is None else ds.values[rows]
    return pearson_matrix(block[:, variables].T, [ds.tags[v] for v in variables])


def embedding_correlation(Z) -> np.ndarray:
    Z = np.asarray(getattr(Z, "Z", Z))
    return pearson_matrix(Z, [f"z{i}" for i in range(Z.shape[0])])


def attention_matrix(ckpt, samples: Windows, batch_size: int = 256) -> np.ndarray:
    """Attention probabilities averaged over every window (dropout off)."""
    if len(samples) == 0:
        raise DataError("attention_matrix needs at least one window")
    total = np.zeros((ckpt.Z.shape[0],) * 2)
    for i in range(0, len(samples), batch_size):
        alpha = forward(ckpt.Z, samples.x[i:i + batch_size], ckpt.params, ckpt.adjacency).alpha
        total += alpha.sum(axis=0)
    return total / len(samples)


def node_relevance(ckpt, samples: Windows) -> np.ndarray:
    """Mean |gradient x input| of each node's gated embedding on the prediction.

    Identifies the nodes the readout actually relies on; normalised to sum 1.
    """
    trace = forward(ckpt.Z, samples.x, ckpt.params, ckpt.adjacency)
    p = ckpt.params
    d_gated = ((trace.hidden_pre > 0) * p.readout_w) @ p.hidden_w.T
    d_gated = d_gated.reshape(trace.n.shape)
    rho = np.abs((d_gated * ckpt.Z * trace.n).sum(axis=-1)).mean(axis=0)
    total = rho.sum()
    return rho / total if total > 0 else np.full_like(rho, 1.0 / rho.size)


def sensor_attention_scores(ckpt, samples: Windows, attention: np.ndarray | None = None) -> np.ndarray:
    """Averaged attention received by each sensor, weighted by destination relevance.

    ``score_j = sum_i relevance_i * mean_alpha[i, j]``: how strongly sensor
    ``j``'s window feeds the nodes that drive the prediction.
    """
    if attention is None:
        attention = attention_matrix(ckpt, samples)
    return node_relevance(ckpt, samples) @ attention


def top_attention_sensors(ckpt, samples: Windows, top: int = 3) -> list[int]:
    scores = sensor_attention_scores(ckpt, samples)
    return np.argsort(-scores, kind="stable")[:top].tolist()


@dataclass
class DiscoveryBundle:
    data_corr: np.ndarray
    embed_corr: np.ndarray
    attention_avg: np.ndarray
    sensor_tags: list
    target_tag: str = ""
    manifest: dict = field(default_factory=dict)

    def matrices(self) -> dict[str, np.ndarray]:
        return {"data": self.data_corr, "embed": self.embed_corr, "attn": self.attention_avg}


def checkpoint_id(ckpt) -> str:
    return hashlib.sha256(ckpt.to_json().encode()).hexdigest()[:16]


def build_bundle(ckpt, ds: ProcessDataset, samples: Windows, split: str = "test") -> DiscoveryBundle:
    """Assemble the three matrices over the rows covered by ``samples``."""
    first = int(samples.t_index[0]) - ckpt.config.window + 1
    last = int(samples.t_index[-1])
    inputs = [i for i in range(ds.D) if i != ckpt.target]
    attention = attention_matrix(ckpt, samples)
    scores = sensor_attention_scores(ckpt, samples, attention)
    return DiscoveryBundle(
        data_corr=data_correlation(ds, inputs, slice(first, last + 1)),
        embed_corr=embedding_correlation(ckpt.Z),
        attention_avg=attention,
        sensor_tags=[ds.tags[i] for i in inputs],
        target_tag=ckpt.target_tag,
        manifest={
            "target": ckpt.target_tag,
            "target_index": int(ckpt.target),
            "checkpoint_id": checkpoint_id(ckpt),
            "split": split,
            "sample_range": {"first_t_index": int(samples.t_index[0]), "last_t_index": last,
                             "n_windows": len(samples), "data_rows": [first, last + 1]},
            "attention": "mean over windows, dropout off",
            "correlation": "pearson",
            "k": int(ckpt.config.k),
            "sensor_attention_scores": {ds.tags[i]: float(v) for i, v in zip(inputs, scores)},
            "top_attention_sensors": [ds.tags[inputs[j]] for j in np.argsort(-scores, kind="stable")[:3]],
        },
    )


def write_matrix_csv(M: np.ndarray, labels, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(labels))
        for label, row in zip(labels, M):
            writer.writerow([label] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[np.ndarray, list]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        labels = next(reader)[1:]
        values = [[float(v) for v in row[1:]] for row in reader]
    return np.array(values), labels


def bundle_filenames(target_tag: str) -> dict[str, str]:
    names = {kind: f"{target_tag}_{kind}.csv" for kind in MATRIX_KINDS}
    names["manifest"] = f"{target_tag}_manifest.json"
    return names


def export_bundle(bundle: DiscoveryBundle, out_dir) -> list[Path]:
    """Write the three CSV matrices and a JSON manifest, all or nothing.

    Files are staged in a temporary directory inside ``out_dir`` and moved
    into place only once every file has been written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = bundle_filenames(bundle.target_tag or "target")
    stage = Path(tempfile.mkdtemp(prefix=".kans-export-", dir=out_dir))
    try:
        for kind, M in bundle.matrices().items():
            write_matrix_csv(M, bundle.sensor_tags, stage / names[kind])
        manifest = dict(bundle.manifest, sensor_tags=list(bundle.sensor_tags),
                        files={k: names[k] for k in MATRIX_KINDS})
        (stage / names["manifest"]).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        written = []
        for name in (names[k] for k in (*MATRIX_KINDS, "manifest")):
            os.replace(stage / name, out_dir / name)
            written.append(out_dir / name)
        return written
    finally:
        shutil.rmtree(stage, ignore_errors=True)
