"""Regression metrics for soft-sensor evaluation.

``nrmse`` and ``nmae`` return fractions of the ground-truth range; reports
scale them by 100. ``mape`` returns a percentage.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError

MAPE_EPS = 1e-8


def _pair(y, y_hat, min_len: int = 1):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    if y.size < min_len:
        raise DataError(f"need at least {min_len} samples, got {y.size}")
    return y, y_hat


def _range(y) -> float:
    span = float(y.max() - y.min())
    if span <= 0.0:
        raise DataError("ground truth is constant; range-normalised metrics are undefined")
    return span


def nrmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat, 2)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)) / _range(y))


def nmae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat, 2)
    return float(np.mean(np.abs(y - y_hat)) / _range(y))


def r2(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat, 2)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DataError("ground truth is constant; R^2 is undefined")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


def mape_detail(y, y_hat, eps: float = MAPE_EPS) -> tuple[float, int]:
    """MAPE in percent over samples with ``|y| > eps``, and the excluded count."""
    y, y_hat = _pair(y, y_hat, 1)
    keep = np.abs(y) > eps
    excluded = int(y.size - keep.sum())
    if not keep.any():
        raise DataError("every sample has |y| <= eps; MAPE is undefined")
    return float(100.0 * np.mean(np.abs((y[keep] - y_hat[keep]) / y[keep]))), excluded


def mape(y, y_hat, eps: float = MAPE_EPS) -> float:
    return mape_detail(y, y_hat, eps)[0]


@dataclass
class MetricsReport:
    nrmse: float
    r2: float
    nmae: float
    mape: float
    n_samples: int
    y_min: float
    y_max: float
    y_mean: float
    mape_excluded: int = 0
    units: dict = field(default_factory=lambda: {"nrmse": "percent", "nmae": "percent", "mape": "percent", "r2": "ratio"})

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def summary(self) -> str:
        return (
            f"NRMSE {self.nrmse:.3f}%  R2 {self.r2:.4f}  NMAE {self.nmae:.3f}%  "
            f"MAPE {self.mape:.3f}%  (n={self.n_samples})"
        )


CSV_FIELDS = ["target", "model", "nrmse", "r2", "nmae", "mape", "n_samples", "mape_excluded"]


def append_csv_row(path, report: MetricsReport, target: str, model: str = "KANS") -> None:
    """Append one ``(target, model)`` row, writing the header for a new file."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new:
            writer.writeheader()
        row = {k: v for k, v in report.to_dict().items() if k in CSV_FIELDS}
        writer.writerow({"target": target, "model": model, **row})


def report(y, y_hat, eps: float = MAPE_EPS) -> MetricsReport:
    y, y_hat = _pair(y, y_hat, 2)
    m, excluded = mape_detail(y, y_hat, eps)
    return MetricsReport(
        nrmse=100.0 * nrmse(y, y_hat),
        r2=r2(y, y_hat),
        nmae=100.0 * nmae(y, y_hat),
        mape=m,
        n_samples=int(y.size),
        y_min=float(y.min()),
        y_max=float(y.max()),
        y_mean=float(y.mean()),
        mape_excluded=excluded,
    )
