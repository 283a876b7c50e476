"""Command-line entry point: ``kans {gen-synth,train,evaluate,predict,discover,table}``.

Exit codes: 0 success, 1 internal error, 2 input not found, 3 shape or
configuration mismatch.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import load_csv
from .discovery import build_bundle, export_bundle
from .errors import KansError
from .graph import cosine_similarity_matrix, export_graph
from .metrics import append_csv_row
from .synth import SynthSpec, write_synthetic
from .training import (
    Checkpoint,
    TrainConfig,
    evaluate,
    resolve_target,
    select_split,
    train,
    windows_for,
    write_history,
)

EXIT_OK, EXIT_INTERNAL, EXIT_NOT_FOUND, EXIT_MISMATCH = 0, 1, 2, 3

log = logging.getLogger("kans")

# CLI flag -> TrainConfig field
CONFIG_FLAGS = {
    "embedding_dim": int,
    "batch_size": int,
    "hidden_width": int,
    "dropout": float,
    "learning_rate": float,
    "window": int,
    "max_epochs": int,
    "early_stop_patience": int,
    "k": int,
    "graph_refresh": str,
    "grad_clip": float,
}


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        flags = argparse.ArgumentParser(add_help=False)
        flags.add_argument("--seed", type=int, default=default, help="random seed")
        flags.add_argument("--config", type=Path, default=default, help="JSON config document")
        flags.add_argument("--threads", type=int, default=default, help="BLAS thread limit")
        flags.add_argument("-v", "--verbose", action="store_true",
                           default=False if default is None else default)
        return flags

    # sub-commands must not reset values given before the command name
    common = global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="kans", description=__doc__.splitlines()[0],
                                     parents=[global_flags(None)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", parents=[common], help="write a synthetic process dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n-sensors", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--drivers", type=_ints)
    p.add_argument("--lag", type=int)
    p.add_argument("--kind", choices=["linear", "nonlinear"])
    p.add_argument("--setpoint-period", type=int)
    p.add_argument("--coupling", type=float)

    p = sub.add_parser("train", parents=[common], help="train a soft sensor")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--target", required=True, help="target column tag")
    p.add_argument("--out", type=Path, default=Path("kans-run"))
    for name, kind in CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None)
    p.add_argument("--patience", dest="early_stop_patience", type=int, default=None)
    p.add_argument("--symmetric-graph", action="store_true", default=None)
    p.add_argument("--split", type=_floats, default=None, help="train,val,test fractions")

    for name, helptext in [("evaluate", "report metrics"), ("predict", "write predictions"),
                           ("discover", "export knowledge-discovery matrices")]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--checkpoint", type=Path, required=True)
        p.add_argument("--data", type=Path, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--split", default="all" if name == "predict" else "test",
                       choices=["train", "val", "test", "all"])
        p.add_argument("--batch-size", type=int, default=None)
        if name == "evaluate":
            p.add_argument("--model-name", default="KANS")

    p = sub.add_parser("table", parents=[common], help="run the six MFP key-variable settings")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    for name, kind in CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None)
    return parser


# --------------------------------------------------------------------------

def resolve_config(args) -> TrainConfig:
    """Built-in defaults < config file < command-line flags."""
    cfg = TrainConfig()
    if args.config is not None:
        if not args.config.is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg = TrainConfig.from_json(args.config)
    overrides = {name: getattr(args, name) for name in CONFIG_FLAGS if getattr(args, name, None) is not None}
    if getattr(args, "early_stop_patience", None) is not None:
        overrides["early_stop_patience"] = args.early_stop_patience
    if getattr(args, "symmetric_graph", None):
        overrides["symmetric_graph"] = True
    if getattr(args, "split", None) is not None and not isinstance(args.split, str):
        overrides["split"] = args.split
    if args.seed is not None:
        overrides["seed"] = args.seed
    return TrainConfig.from_dict(overrides, base=cfg)


def write_manifest(out_dir: Path, args, config_doc: dict | None, inputs: list, outputs: list, started: float) -> None:
    """Append one run record to ``out_dir/runs.jsonl``."""
    record = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config_hash": hashlib.sha256(json.dumps(config_doc, sort_keys=True).encode()).hexdigest()[:16]
        if config_doc is not None else None,
        "seed": args.seed if config_doc is None else config_doc.get("seed"),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_time": round(time.perf_counter() - started, 6),
        "versions": {"kans": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "runs.jsonl").open("a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def cmd_gen_synth(args, started):
    doc = {}
    if args.config is not None:
        if not args.config.is_file():
            raise FileNotFoundError(f"generator config not found: {args.config}")
        doc = json.loads(args.config.read_text())
    for field in ("n_sensors", "length", "noise", "drivers", "lag", "kind", "setpoint_period", "coupling"):
        value = getattr(args, field)
        if value is not None:
            doc[field] = value
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SynthSpec.from_dict(doc)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    csv_path, truth_path = write_synthetic(spec, args.out)
    print(f"wrote {csv_path} ({spec.length} x {spec.n_sensors + 1}) and {truth_path}")
    write_manifest(args.out.parent, args, dataclasses.asdict(spec), [], [csv_path, truth_path], started)


def target_column(ds, name: str) -> int:
    """Column for ``--target``: a header tag, an MFP catalogue tag, or a 0-based index."""
    if name in ds.tags:
        return ds.index_of(name)
    from .mfp import MFP_VARIABLES

    numbers = [num for num, tag, _, _ in MFP_VARIABLES if tag == name]
    if len(numbers) == 1 and ds.D >= len(MFP_VARIABLES):
        return numbers[0] - 1
    if name.isdigit():
        return resolve_target(ds, int(name))
    return ds.index_of(name)  # raises with the list of known tags


def cmd_train(args, started):
    cfg = resolve_config(args)
    ds = load_csv(args.data)
    target = target_column(ds, args.target)
    result = train(ds, cfg, target)
    ckpt = result.checkpoint
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "checkpoint": out / "checkpoint.json",
        "history": out / "history.csv",
        "normalization": out / "normalization.json",
        "graph": out / "graph.json",
        "similarity": out / "similarity.csv",
    }
    ckpt.save(paths["checkpoint"])
    write_history(result.history, paths["history"])
    ckpt.stats.save(paths["normalization"])
    export_graph(cosine_similarity_matrix(ckpt.Z), ckpt.adjacency, cfg.k, paths["graph"],
                 paths["similarity"], tags=ckpt.input_tags)
    last = result.history[-1]
    print(f"trained {len(result.history)} epochs; best epoch {ckpt.epoch} "
          f"val_mse {ckpt.val_mse:.6g}; final train_mse {last['train_mse']:.6g}")
    write_manifest(out, args, cfg.to_dict(), [args.data], list(paths.values()), started)


def _load_pair(args):
    ckpt = Checkpoint.load(args.checkpoint)
    ds = load_csv(args.data)
    samples = select_split(windows_for(ds, ckpt), ckpt, args.split)
    return ckpt, ds, samples


def cmd_evaluate(args, started):
    ckpt, _, samples = _load_pair(args)
    rep, _ = evaluate(ckpt, samples, batch_size=args.batch_size)
    args.out.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = args.out / "metrics.json", args.out / "metrics.csv"
    rep.to_json(json_path)
    if csv_path.exists():
        csv_path.unlink()
    append_csv_row(csv_path, rep, ckpt.target_tag, args.model_name)
    print(f"{ckpt.target_tag} [{args.split}] {rep.summary()}")
    write_manifest(args.out, args, ckpt.config.to_dict(), [args.checkpoint, args.data], [json_path, csv_path], started)


def cmd_predict(args, started):
    from .training import predict_windows

    ckpt, _, samples = _load_pair(args)
    preds = predict_windows(ckpt, samples, batch_size=args.batch_size)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    preds.to_csv(args.out)
    print(f"wrote {len(preds.y_hat)} predictions to {args.out}")
    write_manifest(args.out.parent, args, ckpt.config.to_dict(), [args.checkpoint, args.data], [args.out], started)


def cmd_discover(args, started):
    ckpt, ds, samples = _load_pair(args)
    bundle = build_bundle(ckpt, ds, samples, split=args.split)
    written = export_bundle(bundle, args.out)
    top = bundle.manifest["top_attention_sensors"]
    print(f"wrote {len(written)} files to {args.out}; top attention sensors: {', '.join(top)}")
    write_manifest(args.out, args, ckpt.config.to_dict(), [args.checkpoint, args.data], written, started)


def cmd_table(args, started):
    from .mfp import run_table

    cfg = resolve_config(args)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    run_table(args.data, args.out, cfg)
    print(f"wrote comparison table to {args.out}")
    write_manifest(args.out.parent, args, cfg.to_dict(), [args.data], [args.out], started)


COMMANDS = {
    "gen-synth": cmd_gen_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "discover": cmd_discover,
    "table": cmd_table,
}


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        with _thread_limit(args.threads):
            COMMANDS[args.command](args, started)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (KansError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
