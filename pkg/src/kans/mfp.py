"""Cranfield multiphase-flow (MFP) variable catalogue and comparison harness.

Variable numbers follow the facility's published variable list; variable
``v`` is expected in the ``v``-th column (1-based) of the CSV unless an
explicit ``columns`` mapping is given.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .data import ProcessDataset, VariableMeta, load_csv
from .training import TrainConfig, evaluate, prepare, train

# (number, location tag, description, unit)
MFP_VARIABLES = [
    (1, "PT312", "Air delivery pressure", "MPa"),
    (2, "PT401", "Pressure in the bottom of the riser", "MPa"),
    (3, "PT408", "Pressure in top of the riser", "MPa"),
    (4, "PT403", "Pressure in top separator", "MPa"),
    (5, "PT501", "Pressure in 3 phase separator", "MPa"),
    (6, "PT408", "Diff. pressure (PT401-PT408)", "MPa"),
    (7, "PT403", "Differential pressure over VC404", "MPa"),
    (8, "FT305", "Flow rate input air", "Sm3/s"),
    (9, "FT104", "Flow rate input water", "kg/s"),
    (10, "FT407", "Flow rate top riser", "kg/s"),
    (11, "LI405", "Level top separator", "m"),
    (12, "FT406", "Flow rate top separator output", "kg/s"),
    (13, "FT407", "Density top riser", "kg/m3"),
    (14, "FT406", "Density top separator output", "kg/m3"),
    (15, "FT104", "Density water input", "kg/m3"),
    (16, "FT407", "Temperature top riser", "degC"),
    (17, "FT406", "Temperature top separator output", "degC"),
    (18, "FT104", "Temperature water input", "degC"),
    (19, "LI504", "Level gas-liquid 3 phase separator", "%"),
    (20, "VC501", "Position of valve", "%"),
    (21, "VC302", "Position of valve VC302", "%"),
    (22, "VC101", "Position of valve VC101", "%"),
    (23, "PO1", "Water pump current", "A"),
]
KEY_VARIABLES = (5, 8, 15, 16, 19, 20)

# KANS row of the published comparison: (NRMSE %, R2, NMAE %, MAPE)
REPORTED_KANS = {
    5: (2.685, 0.952, 1.702, 0.208),
    8: (2.426, 0.992, 1.735, 1.496),
    15: (5.159, 0.969, 4.068, 0.016),
    16: (2.213, 0.995, 1.521, 0.763),
    19: (3.304, 0.993, 2.423, 1.591),
    20: (3.604, 0.954, 2.240, 1.061),
}

METRIC_COLUMNS = ("NRMSE", "R2", "NMAE", "MAPE")


def variable_meta(number: int) -> VariableMeta:
    for num, tag, desc, unit in MFP_VARIABLES:
        if num == number:
            return VariableMeta(num, tag, desc, unit)
    raise KeyError(f"no MFP variable numbered {number}")


def load_mfp(path) -> ProcessDataset:
    """Load an MFP CSV, attaching catalogue metadata to the first 23 columns."""
    ds = load_csv(path)
    meta = []
    for i, m in enumerate(ds.variable_meta):
        if i < len(MFP_VARIABLES):
            num, _, desc, unit = MFP_VARIABLES[i]
            meta.append(VariableMeta(num, m.tag, desc, unit))
        else:
            meta.append(m)
    return ProcessDataset(ds.values, tuple(meta), ds.sample_rate_hz)


def run_table(data_path, out_path, cfg: TrainConfig | None = None, variables=KEY_VARIABLES,
              columns: dict | None = None) -> list[dict]:
    """Train and test one model per key variable and write a comparison table.

    The output CSV has one row per method (``KANS (this run)`` and the
    published ``KANS (reported)``) and four metric columns per variable.
    """
    cfg = cfg or TrainConfig()
    ds = load_mfp(data_path)
    ours = {}
    for v in variables:
        target = (columns or {}).get(v, v - 1)
        result = train(ds, cfg, target)
        _, _, _, test_w = prepare(ds, cfg, result.checkpoint.target)
        rep, _ = evaluate(result.checkpoint, test_w)
        ours[v] = (rep.nrmse, rep.r2, rep.nmae, rep.mape)

    header = ["Methods"] + [f"Variable {v} {m}" for v in variables for m in METRIC_COLUMNS]
    rows = [
        {"Methods": "KANS (this run)", **_cells(ours, variables)},
        {"Methods": "KANS (reported)", **_cells(REPORTED_KANS, variables)},
    ]
    with Path(out_path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def _cells(values: dict, variables) -> dict:
    out = {}
    for v in variables:
        for name, val in zip(METRIC_COLUMNS, values[v]):
            out[f"Variable {v} {name}"] = f"{val:.3f}"
    return out
