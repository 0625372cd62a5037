"""Large-time decay of the oxygen concentration.

With n and c started as separated small bumps on a large box, ||c(t)||_2
settles onto a power law in (1 + t).  The fitted exponent is compared with the
reference rate for the heat kernel in the chosen dimension.

Run: python3 demos/03_decay.py
"""

import numpy as np

from chemns import DiagnosticsConfig, ModelParams, SpectralGrid, StepperConfig, fit_decay, run
from chemns.model import State, linear, saturating
from chemns.oracle import periodic_gaussian

L, N = 50.0, 64
grid = SpectralGrid((N, N), (L, L))
centre = np.array([L / 2, L / 2])
n0 = 0.1 * periodic_gaussian(grid, (0.0, L / 2), 2.0)
c0 = periodic_gaussian(grid, tuple(centre), 2.0)
state0 = State(grid, n0, c0, grid.vector_zeros())
params = ModelParams(1.0, saturating(1.0), linear(1.0), grid.vector_zeros())

result = run(state0, params, StepperConfig(0.25, 40.0), diagnostics=DiagnosticsConfig(norms=("c:L2",)))
t = [r.t for r in result.records]
v = [r.norms["c:L2"] for r in result.records]
fit = fit_decay(t, v, (5.0, 40.0), selector="c:L2", alpha=1.0, dim=2)
print(f"fitted exponent {fit.exponent:.4f} on t in [5, 40], reference {fit.reference}")
print(f"relative error {fit.relative_error:.3%}, fit residual {fit.residual:.2e}")
