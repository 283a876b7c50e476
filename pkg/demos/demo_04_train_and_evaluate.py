"""
Training a soft sensor
======================

A reduced configuration trains in a few seconds on the synthetic process.
Metrics are reported in the target's raw units.
"""

from kans import TrainConfig, evaluate, generate, prepare, SynthSpec, train

ds, truth = generate(SynthSpec(seed=0))
cfg = TrainConfig(
    embedding_dim=16, window=10, hidden_width=32, k=3, dropout=0.0,
    batch_size=8, learning_rate=0.002, max_epochs=200, early_stop_patience=200,
    graph_refresh="per-batch",
)
result = train(ds, cfg, "Y")
ckpt = result.checkpoint
print(f"best epoch {ckpt.epoch} of {len(result.history)}, val mse {ckpt.val_mse:.3g}")

_, train_w, _, test_w = prepare(ds, cfg, ckpt.target)
for name, part in [("train", train_w), ("test", test_w)]:
    rep, _ = evaluate(ckpt, part)
    print(f"{name:5s} {rep.summary()}")

# every 25th epoch of the loss curve
for row in result.history[::25]:
    print(row["epoch"], round(row["train_mse"], 6), round(row["val_mse"], 6))
