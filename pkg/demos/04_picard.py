"""Local existence by fixed-point iteration.

The Picard map is iterated on a time window [0, T0].  Successive differences
W^j shrink geometrically once T0 is small enough; bisect_window halves T0
until every ratio after the first one stays below 1/2.

Run: python3 demos/04_picard.py
"""

import numpy as np

from chemns import ModelParams, PicardConfig, SpectralGrid, bisect_window
from chemns.initial import random_bandlimited
from chemns.model import linear, saturating

grid = SpectralGrid((16, 16))
state0 = random_bandlimited(grid, seed=5, k_max=3, amplitude=0.3)
params = ModelParams(1.0, saturating(1.0), linear(1.0), np.stack([grid.zeros(), 0.1 + grid.zeros()]))

T0, _, report = bisect_window(state0, params, PicardConfig(8.0, n_time_nodes=33))
print(f"contracting window T0 = {T0:g} after bisection, converged: {report.converged}")
print(f"{'j':>3} {'sup W':>12} {'ratio':>8}")
for j, w in enumerate(report.W_history, 1):
    ratio = report.contraction_ratios[j - 2] if j >= 2 else float("nan")
    print(f"{j:3d} {w:12.3e} {ratio:8.3f}")
