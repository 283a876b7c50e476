"""Synthetic multivariate processes with a known target-driver structure.

Each sensor is a stationary AR(1) process riding on a piecewise-constant
set-point schedule. The target is a lagged function of a chosen subset of
sensors (the drivers) plus Gaussian noise, so the ground-truth dependency
structure is known exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import ProcessDataset, VariableMeta, write_csv
from .errors import ConfigError


@dataclass
class SynthSpec:
    n_sensors: int = 6
    length: int = 600
    noise: float = 0.01
    drivers: tuple = (1, 2)
    lag: int = 3
    kind: str = "linear"
    seed: int = 0
    ar_coef: float = 0.9
    setpoint_period: int = 50
    coupling: float = 0.0
    coefficients: tuple | None = None
    target_tag: str = "Y"

    def __post_init__(self):
        self.drivers = tuple(int(d) for d in self.drivers)
        if self.coefficients is not None:
            self.coefficients = tuple(float(c) for c in self.coefficients)
        self.validate()

    def validate(self) -> None:
        if self.n_sensors < 2:
            raise ConfigError(f"n_sensors must be >= 2, got {self.n_sensors}")
        if self.length < 2:
            raise ConfigError(f"length must be >= 2, got {self.length}")
        if self.noise < 0:
            raise ConfigError(f"noise must be non-negative, got {self.noise}")
        if not self.drivers:
            raise ConfigError("at least one driver sensor is required")
        if len(set(self.drivers)) != len(self.drivers):
            raise ConfigError(f"duplicate drivers {self.drivers}")
        for d in self.drivers:
            if not 0 <= d < self.n_sensors:
                raise ConfigError(f"driver {d} outside [0, {self.n_sensors})")
        if not 0 <= self.lag < self.length:
            raise ConfigError(f"lag must lie in [0, length), got {self.lag}")
        if self.kind not in ("linear", "nonlinear"):
            raise ConfigError(f"kind must be 'linear' or 'nonlinear', got {self.kind!r}")
        if not 0 <= self.ar_coef < 1:
            raise ConfigError(f"ar_coef must lie in [0, 1), got {self.ar_coef}")
        if not 0 <= self.coupling <= 1:
            raise ConfigError(f"coupling must lie in [0, 1], got {self.coupling}")
        if self.setpoint_period < 1:
            raise ConfigError("setpoint_period must be positive")
        if self.coefficients is not None and len(self.coefficients) != len(self.drivers):
            raise ConfigError("one coefficient per driver is required")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthSpec":
        known = set(cls.__dataclass_fields__)
        for key in doc:
            if key not in known:
                raise ConfigError(f"unknown synthetic-spec key {key!r}")
        return cls(**doc)

    @property
    def sensor_tags(self) -> list[str]:
        return [f"S{i}" for i in range(self.n_sensors)]


def generate(spec: SynthSpec) -> tuple[ProcessDataset, dict]:
    """Return the dataset (sensors then target column) and its ground-truth record."""
    rng = np.random.default_rng(spec.seed)
    T, n = spec.length, spec.n_sensors

    # one extra column is the latent process shared by the drivers
    n_segments = -(-T // spec.setpoint_period)
    levels = rng.uniform(-1.0, 1.0, size=(n_segments, n + 1))
    setpoints = np.repeat(levels, spec.setpoint_period, axis=0)[:T]

    innov = rng.normal(0.0, np.sqrt(1.0 - spec.ar_coef ** 2), size=(T, n + 1))
    ar = np.empty((T, n + 1))
    ar[0] = innov[0] / np.sqrt(1.0 - spec.ar_coef ** 2)  # stationary unit variance
    for t in range(1, T):
        ar[t] = spec.ar_coef * ar[t - 1] + innov[t]
    signals = setpoints + 0.5 * ar
    sensors, shared = signals[:, :n].copy(), signals[:, n]
    drivers = list(spec.drivers)
    sensors[:, drivers] = (1.0 - spec.coupling) * sensors[:, drivers] + spec.coupling * shared[:, None]

    if spec.coefficients is None:
        signs = rng.choice([-1.0, 1.0], size=len(spec.drivers))
        coefs = signs * rng.uniform(0.5, 1.5, size=len(spec.drivers))
    else:
        coefs = np.asarray(spec.coefficients)

    lagged = np.empty((T, len(spec.drivers)))
    for c, d in enumerate(spec.drivers):
        src = sensors[:, d]
        lagged[:, c] = np.concatenate([np.full(spec.lag, src[0]), src[:T - spec.lag]])
    if spec.kind == "linear":
        clean = lagged @ coefs
    else:
        clean = np.tanh(lagged) @ coefs + 0.25 * (lagged[:, 0] * lagged[:, -1])
    target = clean + spec.noise * clean.std() * rng.normal(size=T)

    tags = spec.sensor_tags + [spec.target_tag]
    meta = [VariableMeta(i + 1, t, "synthetic sensor") for i, t in enumerate(spec.sensor_tags)]
    meta.append(VariableMeta(n + 1, spec.target_tag, "synthetic target"))
    ds = ProcessDataset(np.column_stack([sensors, target]), tuple(meta))
    truth = {
        "target": spec.target_tag,
        "target_index": n,
        "drivers": list(spec.drivers),
        "driver_tags": [tags[d] for d in spec.drivers],
        "coefficients": [float(c) for c in coefs],
        "lag": spec.lag,
        "kind": spec.kind,
        "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()},
    }
    return ds, truth


def write_synthetic(spec: SynthSpec, out) -> tuple[Path, Path]:
    """Write ``out`` as CSV and ``<out stem>.truth.json`` beside it."""
    out = Path(out)
    ds, truth = generate(spec)
    write_csv(ds, out)
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return out, truth_path
