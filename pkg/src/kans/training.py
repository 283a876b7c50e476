"""End-to-end training: graph refresh, mini-batch Adam, early stopping."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .data import (
    NormalizationStats,
    ProcessDataset,
    Windows,
    apply_normalizer,
    fit_normalizer,
    make_windows,
    split_chronological,
    split_sizes,
)
from .errors import ConfigError, DataError, NonFiniteError, ShapeError
from .gradients import backward
from .graph import init_embeddings, learn_graph
from .model import ModelParams, PARAM_NAMES, forward, init_params, mse_loss, predict
from .optim import AdamState, adam_step, clip_by_global_norm

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "kans-checkpoint/1"
HISTORY_FIELDS = ["epoch", "train_mse", "val_mse", "lr", "wall_time"]


@dataclass
class TrainConfig:
    embedding_dim: int = 64
    batch_size: int = 64
    hidden_width: int = 128
    dropout: float = 0.2
    learning_rate: float = 0.001
    window: int = 85
    max_epochs: int = 200
    early_stop_patience: int = 10
    k: int = 6
    seed: int = 0
    graph_refresh: str = "per-epoch"
    symmetric_graph: bool = False
    split: tuple = (0.6, 0.2, 0.2)
    grad_clip: float | None = None

    def __post_init__(self):
        self.split = tuple(float(f) for f in self.split)
        self.validate()

    def validate(self) -> None:
        for name in ("embedding_dim", "batch_size", "hidden_width", "window", "max_epochs", "early_stop_patience"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ConfigError(f"k must be a non-negative integer, got {self.k!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.graph_refresh not in ("per-epoch", "per-batch"):
            raise ConfigError(f"graph_refresh must be 'per-epoch' or 'per-batch', got {self.graph_refresh!r}")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigError(f"grad_clip must be positive or null, got {self.grad_clip!r}")
        if len(self.split) != 3 or min(self.split) <= 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split must be three positive fractions summing to 1, got {self.split}")

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["split"] = list(self.split)
        return doc

    @classmethod
    def from_dict(cls, doc: dict, base: "TrainConfig | None" = None) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        merged = (base or cls()).to_dict()
        merged.update(doc)
        return cls(**merged)

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(doc)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class Checkpoint:
    config: TrainConfig
    Z: np.ndarray
    params: ModelParams
    adjacency: np.ndarray
    stats: NormalizationStats
    target: int
    input_tags: tuple
    epoch: int = 0
    val_mse: float = float("nan")

    @property
    def target_tag(self) -> str:
        return self.stats.tags[self.target]

    @property
    def n_variables(self) -> int:
        return len(self.stats.tags)

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "config": self.config.to_dict(),
            "target": {"index": int(self.target), "tag": self.target_tag},
            "input_tags": list(self.input_tags),
            "normalization": self.stats.to_dict(),
            "variable_tags": list(self.stats.tags),  # column order; dict keys get sorted
            "normalization_fitted_on": self.stats.fitted_on,
            "best_epoch": int(self.epoch),
            "val_mse": float(self.val_mse),
            "adjacency": self.adjacency.astype(int).tolist(),
            "params": {"Z": self.Z.tolist(), **{k: v.tolist() for k, v in self.params.as_dict().items()}},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "Checkpoint":
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError(f"unsupported checkpoint format {doc.get('format')!r}")
        arrays = {k: np.array(v, dtype=np.float64) for k, v in doc["params"].items()}
        stats = NormalizationStats.from_dict(
            doc["normalization"], doc.get("normalization_fitted_on", "train"), order=doc["variable_tags"]
        )
        return cls(
            config=TrainConfig.from_dict(doc["config"]),
            Z=arrays.pop("Z"),
            params=ModelParams(**{k: arrays[k] for k in PARAM_NAMES}),
            adjacency=np.array(doc["adjacency"], dtype=np.int8),
            stats=stats,
            target=int(doc["target"]["index"]),
            input_tags=tuple(doc["input_tags"]),
            epoch=int(doc["best_epoch"]),
            val_mse=float(doc["val_mse"]),
        )

    @classmethod
    def load(cls, path) -> "Checkpoint":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"checkpoint not found: {path}")
        return cls.from_dict(json.loads(path.read_text()))

    def predict_normalized(self, x, batch_size: int | None = None) -> np.ndarray:
        return predict(self.Z, x, self.params, self.adjacency, batch_size=batch_size)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list = field(default_factory=list)
    stopped_early: bool = False


# --------------------------------------------------------------------------
# data preparation

def resolve_target(ds: ProcessDataset, target) -> int:
    if isinstance(target, str):
        return ds.index_of(target)
    target = int(target)
    if not 0 <= target < ds.D:
        raise DataError(f"target index {target} outside [0, {ds.D})")
    return target


def prepare(ds: ProcessDataset, cfg: TrainConfig, target: int):
    """Fit normalisation on the training rows and build chronological splits."""
    n_samples = ds.T - cfg.window
    if n_samples < 3:
        raise DataError(f"{ds.T} rows are too few for window {cfg.window}")
    n_train, _, _ = split_sizes(n_samples, cfg.split)
    # training windows end at t = w .. w + n_train - 1
    stats = fit_normalizer(ds, range(0, cfg.window + n_train), fitted_on="train")
    windows = make_windows(apply_normalizer(ds, stats), target, cfg.window)
    train_w, val_w, test_w = split_chronological(windows, cfg.split)
    return stats, train_w, val_w, test_w


def windows_for(ds: ProcessDataset, ckpt: Checkpoint) -> Windows:
    """Normalise ``ds`` with the checkpoint's stats and window it for inference."""
    if ds.D != ckpt.n_variables:
        raise ShapeError(f"expected {ckpt.n_variables} variables, found {ds.D}")
    if tuple(ds.tags) != tuple(ckpt.stats.tags):
        log.warning("column tags differ from the checkpoint; matching by position")
    return make_windows(apply_normalizer(ds, ckpt.stats), ckpt.target, ckpt.config.window)


def select_split(windows: Windows, ckpt: Checkpoint, split: str) -> Windows:
    if split == "all":
        return windows
    parts = dict(zip(("train", "val", "test"), split_chronological(windows, ckpt.config.split)))
    if split not in parts:
        raise ConfigError(f"unknown split {split!r}; use train, val, test or all")
    return parts[split]


# --------------------------------------------------------------------------
# training loop

def _validation_mse(Z, params, adj, val: Windows) -> float:
    return mse_loss(val.y, predict(Z, val.x, params, adj))


def _graph(Z, cfg: TrainConfig):
    return learn_graph(Z, cfg.k, symmetric=cfg.symmetric_graph)[1]


def _batch_slices(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def fit(train_w: Windows, val_w: Windows, cfg: TrainConfig, stats: NormalizationStats, target: int) -> TrainResult:
    """Train on pre-built windows; returns the best-validation checkpoint."""
    n_nodes, w = train_w.n_nodes, train_w.window
    if w != cfg.window:
        raise ShapeError(f"windows have length {w}, config says {cfg.window}")
    if cfg.k > n_nodes - 1:
        raise ConfigError(f"k={cfg.k} exceeds the {n_nodes - 1} candidates available per node")
    if len(train_w) == 0 or len(val_w) == 0:
        raise DataError("training and validation sets must be non-empty")

    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    Z = init_embeddings(n_nodes, cfg.embedding_dim, seed=seeds[0]).Z
    params = init_params(n_nodes, cfg.embedding_dim, w, cfg.hidden_width, seed=seeds[1])
    rng = np.random.default_rng(seeds[2])
    state = {"Z": Z, **params.as_dict()}
    adam = AdamState()

    def snapshot(epoch: int, val: float) -> Checkpoint:
        return Checkpoint(
            config=cfg, Z=Z.copy(), params=params.copy(), adjacency=_graph(Z, cfg).copy(),
            stats=stats, target=target,
            input_tags=tuple(t for i, t in enumerate(stats.tags) if i != target),
            epoch=epoch, val_mse=val,
        )

    batches = _batch_slices(len(train_w), cfg.batch_size)
    history = []
    best, best_val, since_best = None, np.inf, 0
    start = time.perf_counter()
    stopped_early = False
    for epoch in range(1, cfg.max_epochs + 1):
        adj = _graph(Z, cfg)
        total = 0.0
        for b, sl in enumerate(rng.permutation(len(batches))):
            sl = batches[sl]
            if cfg.graph_refresh == "per-batch":
                adj = _graph(Z, cfg)
            x, y = train_w.x[sl], train_w.y[sl]
            trace = forward(Z, x, params, adj, dropout=cfg.dropout, training=True, rng=rng)
            loss = mse_loss(y, trace.y_hat)
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite training loss at epoch {epoch}, batch {b}")
            grads = backward(trace, y, params, Z)
            if cfg.grad_clip is not None:
                grads = clip_by_global_norm(grads, cfg.grad_clip)
            adam_step(state, grads, adam, cfg.learning_rate)
            total += loss * len(y)
        train_mse = total / len(train_w)
        val_mse = _validation_mse(Z, params, _graph(Z, cfg), val_w)
        if not np.isfinite(val_mse):
            raise NonFiniteError(f"non-finite validation loss at epoch {epoch}")
        history.append({
            "epoch": epoch, "train_mse": train_mse, "val_mse": val_mse,
            "lr": cfg.learning_rate, "wall_time": time.perf_counter() - start,
        })
        log.debug("epoch %d train %.6g val %.6g", epoch, train_mse, val_mse)
        if val_mse < best_val:
            best, best_val, since_best = snapshot(epoch, val_mse), val_mse, 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                stopped_early = True
                break
    return TrainResult(best, history, stopped_early)


def train(ds: ProcessDataset, cfg: TrainConfig, target) -> TrainResult:
    target = resolve_target(ds, target)
    stats, train_w, val_w, _ = prepare(ds, cfg, target)
    return fit(train_w, val_w, cfg, stats, target)


def write_history(history: list, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


# --------------------------------------------------------------------------
# evaluation

@dataclass
class Predictions:
    t_index: np.ndarray
    y_true: np.ndarray
    y_hat: np.ndarray
    y_hat_normalized: np.ndarray

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            fh.write("t_index,y_true,y_hat\n")
            for t, yt, yh in zip(self.t_index, self.y_true, self.y_hat):
                fh.write(f"{int(t)},{float(yt)!r},{float(yh)!r}\n")


def predict_windows(ckpt: Checkpoint, samples: Windows, batch_size: int | None = None) -> Predictions:
    if samples.x.shape[1:] != (ckpt.Z.shape[0], ckpt.config.window):
        raise ShapeError(
            f"windows of shape {samples.x.shape[1:]} do not match checkpoint "
            f"({ckpt.Z.shape[0]} sensors, window {ckpt.config.window})"
        )
    y_hat_n = ckpt.predict_normalized(samples.x, batch_size=batch_size)
    return Predictions(
        t_index=samples.t_index.copy(),
        y_true=ckpt.stats.denormalize(samples.y, ckpt.target),
        y_hat=ckpt.stats.denormalize(y_hat_n, ckpt.target),
        y_hat_normalized=y_hat_n,
    )


def evaluate(ckpt: Checkpoint, samples: Windows, batch_size: int | None = None):
    """Dropout-free predictions in sample order and the metrics on raw units."""
    if len(samples) == 0:
        raise DataError("cannot evaluate on zero samples")
    preds = predict_windows(ckpt, samples, batch_size)
    return metrics.report(preds.y_true, preds.y_hat), preds
