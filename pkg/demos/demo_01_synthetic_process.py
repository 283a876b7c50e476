"""
A synthetic process with known drivers
======================================

Sensors follow set-point schedules with AR(1) noise on top. The target is a
lagged linear mix of two of them, so we know which sensors matter.
"""

import numpy as np

from kans import SynthSpec, generate, make_windows, split_chronological
from kans.data import apply_normalizer, fit_normalizer

spec = SynthSpec(n_sensors=6, length=600, drivers=(1, 2), lag=3, seed=0)
ds, truth = generate(spec)
print(ds.tags, ds.values.shape)
print("drivers:", truth["driver_tags"], "coefficients:", np.round(truth["coefficients"], 3))

# windows of 10 steps; the target column is left out of the inputs
w = 10
raw = make_windows(ds, ds.index_of("Y"), w)
print(len(raw), "windows of shape", raw.x.shape[1:])

# min-max statistics come from the training rows only
n_train = len(split_chronological(list(range(len(raw))))[0])
stats = fit_normalizer(ds, range(0, w + n_train))
windows = make_windows(apply_normalizer(ds, stats), ds.index_of("Y"), w)
train, val, test = split_chronological(windows)
print("train/val/test:", len(train), len(val), len(test))
print("test targets fall outside [0, 1]?", bool((test.y < 0).any() or (test.y > 1).any()))
