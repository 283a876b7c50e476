"""
Which sensors does the model listen to?
=======================================

Three matrices come out of a trained model: raw-data correlation, embedding
correlation and window-averaged attention. The attention each sensor receives,
weighted by how much the receiving node matters to the prediction, ranks the
sensors.
"""

import tempfile

import numpy as np

from kans import SynthSpec, TrainConfig, build_bundle, export_bundle, generate, train
from kans.training import select_split, windows_for

ds, truth = generate(SynthSpec(seed=3))
cfg = TrainConfig(
    embedding_dim=16, window=10, hidden_width=32, k=3, dropout=0.0, batch_size=8,
    learning_rate=0.002, max_epochs=200, early_stop_patience=200, graph_refresh="per-batch", seed=3,
)
ckpt = train(ds, cfg, "Y").checkpoint
test_w = select_split(windows_for(ds, ckpt), ckpt, "test")

bundle = build_bundle(ckpt, ds, test_w)
print("true drivers:", truth["driver_tags"])
print("top sensors :", bundle.manifest["top_attention_sensors"])
print("scores:", {k: round(v, 3) for k, v in bundle.manifest["sensor_attention_scores"].items()})
print("data correlation:\n", np.round(bundle.data_corr, 2))

with tempfile.TemporaryDirectory() as out:
    for path in export_bundle(bundle, out):
        print("wrote", path.name)
