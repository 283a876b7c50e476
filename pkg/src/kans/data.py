"""Loading, min-max normalisation and sliding-window construction.

A dataset is a ``T x D`` matrix of readings with one column per process
variable. One column is held out as the soft-sensing target; the remaining
``N = D - 1`` columns become graph nodes, each contributing a window of ``w``
consecutive readings.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, DegenerateVariableError, ShapeError

DEGENERATE_RANGE = 1e-12


@dataclass(frozen=True)
class VariableMeta:
    id: int
    tag: str
    description: str = ""
    unit: str = ""


@dataclass(frozen=True)
class ProcessDataset:
    """Immutable ``T x D`` matrix of sensor readings plus per-variable metadata."""

    values: np.ndarray
    variable_meta: tuple[VariableMeta, ...]
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"values must be a T x D matrix, got shape {values.shape}")
        if len(self.variable_meta) != values.shape[1]:
            raise ShapeError(
                f"{len(self.variable_meta)} metadata entries for {values.shape[1]} columns"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"missing or non-finite value at row {bad[0] + 1}, column {bad[1]}")
        if self.sample_rate_hz <= 0:
            raise DataError("sample_rate_hz must be positive")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_meta", tuple(self.variable_meta))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]

    @property
    def tags(self) -> list[str]:
        return [m.tag for m in self.variable_meta]

    def index_of(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise DataError(f"unknown variable tag {tag!r}; known tags: {self.tags}") from None

    def with_values(self, values: np.ndarray) -> "ProcessDataset":
        return ProcessDataset(values, self.variable_meta, self.sample_rate_hz)


def default_meta(tags: Sequence[str]) -> list[VariableMeta]:
    return [VariableMeta(id=i + 1, tag=t) for i, t in enumerate(tags)]


def load_csv(path, meta: Sequence[VariableMeta] | None = None, sample_rate_hz: float = 1.0) -> ProcessDataset:
    """Read a comma-separated file with one header row of variable tags.

    Rows are kept in file order (time order). Rows containing an empty cell
    are rejected rather than imputed. Row numbers in error messages count
    data rows from 1, excluding the header.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"{path}: duplicate column tags {dupes}")
        if meta is not None and len(meta) != len(header):
            raise ShapeError(
                f"{path}: header has {len(header)} columns but metadata describes {len(meta)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for col, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"{path}: missing value at row {lineno}, column {col} ({header[col]})")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: cannot parse {cell!r} at row {lineno}, column {col} ({header[col]})"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value at row {lineno}, column {col} ({header[col]})")
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: zero data rows")
    if meta is None:
        meta = default_meta(header)
    return ProcessDataset(np.array(rows, dtype=np.float64), tuple(meta), sample_rate_hz)


def write_csv(ds: ProcessDataset, path, fmt: str = "%.12g") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(ds.tags) + "\n")
        np.savetxt(fh, ds.values, delimiter=",", fmt=fmt)


# --------------------------------------------------------------------------
# normalisation

@dataclass(frozen=True)
class NormalizationStats:
    minimum: np.ndarray
    maximum: np.ndarray
    tags: tuple[str, ...]
    fitted_on: str = "train"

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def normalize(self, values: np.ndarray, column: int | None = None) -> np.ndarray:
        if column is None:
            return (values - self.minimum) / self.span
        return (values - self.minimum[column]) / self.span[column]

    def denormalize(self, values: np.ndarray, column: int | None = None) -> np.ndarray:
        if column is None:
            return values * self.span + self.minimum
        return values * self.span[column] + self.minimum[column]

    def to_dict(self) -> dict:
        return {
            tag: {"min": float(lo), "max": float(hi)}
            for tag, lo, hi in zip(self.tags, self.minimum, self.maximum)
        }

    @classmethod
    def from_dict(cls, doc: dict, fitted_on: str = "train", order=None) -> "NormalizationStats":
        """Rebuild from ``to_dict`` output; ``order`` fixes the column order explicitly."""
        tags = tuple(doc) if order is None else tuple(order)
        if set(tags) != set(doc):
            raise DataError("normalisation tags do not match the requested column order")
        return cls(
            np.array([doc[t]["min"] for t in tags], dtype=np.float64),
            np.array([doc[t]["max"] for t in tags], dtype=np.float64),
            tags,
            fitted_on,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "NormalizationStats":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _as_range(rows, T: int) -> range:
    if isinstance(rows, slice):
        rows = range(*rows.indices(T))
    elif isinstance(rows, tuple):
        rows = range(*rows)
    if not isinstance(rows, range) or rows.step != 1:
        raise DataError("rows must be a contiguous range")
    if len(rows) == 0:
        raise DataError("empty row range")
    if rows.start < 0 or rows.stop > T:
        raise DataError(f"row range [{rows.start}, {rows.stop}) outside [0, {T})")
    return rows


def fit_normalizer(ds: ProcessDataset, rows=None, fitted_on: str = "train") -> NormalizationStats:
    """Per-variable min/max over ``rows`` only (defaults to every row)."""
    rows = _as_range(range(ds.T) if rows is None else rows, ds.T)
    block = ds.values[rows.start:rows.stop]
    lo, hi = block.min(axis=0), block.max(axis=0)
    flat = np.flatnonzero(hi - lo < DEGENERATE_RANGE)
    if flat.size:
        names = [ds.tags[i] for i in flat]
        raise DegenerateVariableError(
            f"degenerate (constant) variables on rows [{rows.start}, {rows.stop}): {names}", names
        )
    return NormalizationStats(lo, hi, tuple(ds.tags), f"{fitted_on}[{rows.start}:{rows.stop}]")


def apply_normalizer(ds: ProcessDataset, stats: NormalizationStats) -> ProcessDataset:
    """Map every value to ``(v - min) / (max - min)``; no clipping."""
    if stats.minimum.shape != (ds.D,):
        raise ShapeError(f"stats cover {stats.minimum.shape[0]} variables, dataset has {ds.D}")
    return ds.with_values(stats.normalize(ds.values))


# --------------------------------------------------------------------------
# windows

@dataclass(frozen=True)
class WindowSample:
    x: np.ndarray
    y: float
    t_index: int


@dataclass(frozen=True)
class Windows:
    """A sequence of window samples stored as stacked arrays.

    ``x`` has shape ``(S, N, w)``; ``y`` and ``t_index`` have shape ``(S,)``.
    Integer indexing yields a :class:`WindowSample`; slicing yields another
    ``Windows`` sharing the same buffers.
    """

    x: np.ndarray
    y: np.ndarray
    t_index: np.ndarray
    target: int = -1
    inputs: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return self.y.shape[0]

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Windows(self.x[item], self.y[item], self.t_index[item], self.target, self.inputs)
        if isinstance(item, (np.ndarray, list)):
            item = np.asarray(item)
            return Windows(self.x[item], self.y[item], self.t_index[item], self.target, self.inputs)
        return WindowSample(self.x[item], float(self.y[item]), int(self.t_index[item]))

    def __iter__(self) -> Iterator[WindowSample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_nodes(self) -> int:
        return self.x.shape[1]

    @property
    def window(self) -> int:
        return self.x.shape[2]


def make_windows(ds: ProcessDataset, target: int, w: int) -> Windows:
    """Sliding windows ending at ``t = w, ..., T - 1`` (``T - w`` samples).

    The input for end-time ``t`` covers rows ``t - w + 1 .. t`` of every
    non-target variable; the label is the target's value at ``t``.
    """
    if not 0 <= target < ds.D:
        raise DataError(f"target index {target} outside [0, {ds.D})")
    if w < 1 or w >= ds.T:
        raise DataError(f"window size {w} must satisfy 1 <= w < T = {ds.T}")
    inputs = tuple(i for i in range(ds.D) if i != target)
    src = np.ascontiguousarray(ds.values[:, inputs].T)  # (N, T)
    view = np.lib.stride_tricks.sliding_window_view(src, w, axis=1)  # (N, T-w+1, w)
    x = np.ascontiguousarray(view[:, 1:, :].transpose(1, 0, 2))
    t_index = np.arange(w, ds.T)
    y = ds.values[w:, target].copy()
    return Windows(x, y, t_index, target, inputs)


def split_sizes(n: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise DataError(f"split fractions must be three positive numbers, got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"split fractions must sum to 1, got {sum(fractions)!r}")
    n_train = int(round(n * fractions[0]))
    n_val = int(round(n * fractions[1]))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) <= 0:
        raise DataError(f"{n} samples give an empty split with fractions {tuple(fractions)}")
    return n_train, n_val, n_test


def split_chronological(samples, fractions=(0.6, 0.2, 0.2)):
    """Contiguous, time-ordered train/val/test split (no shuffling)."""
    n_train, n_val, _ = split_sizes(len(samples), fractions)
    return samples[:n_train], samples[n_train:n_train + n_val], samples[n_train + n_val:]
