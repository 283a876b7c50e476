"""Graph-attention soft sensing with a learned sensor graph.

Sensors become graph nodes with learnable embeddings; a top-k cosine
similarity graph over the embeddings decides which sensors attend to which,
and a graph-attention layer turns sliding windows of process data into a
prediction of a held-out target variable.

Typical use::

    from kans import load_csv, TrainConfig, train, evaluate, prepare

    ds = load_csv("process.csv")
    cfg = TrainConfig(window=85)
    result = train(ds, cfg, target="PT501")
    _, _, _, test = prepare(ds, cfg, result.checkpoint.target)
    report, preds = evaluate(result.checkpoint, test)
"""

__version__ = "0.1.0"

from .data import (
    NormalizationStats,
    ProcessDataset,
    VariableMeta,
    WindowSample,
    Windows,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    make_windows,
    split_chronological,
)
from .discovery import (
    DiscoveryBundle,
    attention_matrix,
    build_bundle,
    data_correlation,
    embedding_correlation,
    export_bundle,
    sensor_attention_scores,
)
from .errors import ConfigError, DataError, DegenerateVariableError, KansError, NonFiniteError, ShapeError
from .gradients import backward
from .graph import EmbeddingTable, cosine_similarity_matrix, init_embeddings, neighbors, topk_adjacency
from .metrics import MetricsReport, mape, nmae, nrmse, r2
from .model import ForwardTrace, ModelParams, forward, init_params, mse_loss
from .optim import AdamState, adam_step
from .synth import SynthSpec, generate
from .training import Checkpoint, TrainConfig, TrainResult, evaluate, fit, prepare, train
