"""
The command-line workflow
=========================

The same steps through the ``kans`` entry point: generate data, train,
evaluate, predict and export the discovery matrices.
"""

import tempfile
from pathlib import Path

from kans.cli import main

reduced = ["--embedding-dim", "16", "--window", "10", "--hidden-width", "32", "--k", "3",
           "--dropout", "0", "--batch-size", "8", "--learning-rate", "0.002",
           "--max-epochs", "50", "--graph-refresh", "per-batch"]

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    data = tmp / "synth.csv"
    main(["--seed", "0", "gen-synth", "--out", str(data)])
    main(["--seed", "0", "train", "--data", str(data), "--target", "Y", "--out", str(tmp / "run"), *reduced])
    ckpt = str(tmp / "run" / "checkpoint.json")
    main(["evaluate", "--checkpoint", ckpt, "--data", str(data), "--out", str(tmp / "eval")])
    main(["predict", "--checkpoint", ckpt, "--data", str(data), "--out", str(tmp / "pred.csv")])
    main(["discover", "--checkpoint", ckpt, "--data", str(data), "--out", str(tmp / "discover")])
    print((tmp / "eval" / "metrics.json").read_text())
