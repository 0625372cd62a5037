"""Named initial-data presets.

Random data is drawn from numpy's ``Philox`` counter-based bit generator
keyed by the integer seed (``np.random.Generator(np.random.Philox(key=seed))``).
Each field is filled by ``standard_normal(grid.shape)`` in the fixed order
``n, c, u_1, ..., u_d``, low-pass filtered to ``max_i |m_i| <= k_max``, and
rescaled so its largest absolute value is 1.  Then

    n = amplitude (1 + g_n / 2),   c = amplitude (1 + g_c / 2),   u = amplitude P g_u

with ``P`` the Leray projection, so ``n`` and ``c`` stay strictly positive.
"""

import numpy as np

from .errors import ConfigurationError
from .model import State
from .oracle import periodic_gaussian
from .spectral import leray_project

__all__ = ["gaussian_blob", "taylor_green", "random_bandlimited", "PRESETS"]


def gaussian_blob(grid, n_amplitude=1.0, c_amplitude=1.0, width=1.0, center=None, c_center=None):
    """Periodised Gaussians ``A exp(-|x - x0|^2 / (2 width^2))`` for ``n`` and ``c``; ``u = 0``.

    ``center`` defaults to the middle of the box; ``c_center`` to ``center``.
    """
    if not width > 0:
        raise ConfigurationError("gaussian-blob width must be > 0")
    if center is None:
        center = tuple(L / 2 for L in grid.box_lengths)
    if c_center is None:
        c_center = center
    for name, ctr in (("center", center), ("c_center", c_center)):
        if len(ctr) != grid.dim:
            raise ConfigurationError(f"gaussian-blob {name} needs {grid.dim} coordinates")
    if n_amplitude < 0 or c_amplitude < 0:
        raise ConfigurationError("gaussian-blob amplitudes must be >= 0")
    var = width**2
    n = n_amplitude * periodic_gaussian(grid, center, var)
    c = c_amplitude * periodic_gaussian(grid, c_center, var)
    return State(grid, n, c, grid.vector_zeros())


def taylor_green(grid, epsilon=1.0, n_level=1.0, c_level=1.0):
    """Taylor-Green vortex of amplitude ``epsilon`` with uniform ``n`` and ``c``.

    2D: ``u = eps (sin x cos y, -cos x sin y)``; 3D adds a factor ``cos z`` to
    both in-plane components.  Coordinates are scaled by ``2 pi / L``.
    """
    xs = [2 * np.pi / L * xi for xi, L in zip(grid.coords(), grid.box_lengths)]
    u = grid.vector_zeros()
    u[0] = np.sin(xs[0]) * np.cos(xs[1])
    u[1] = -np.cos(xs[0]) * np.sin(xs[1])
    if grid.dim == 3:
        u[0] *= np.cos(xs[2])
        u[1] *= np.cos(xs[2])
    u *= epsilon
    n = np.full(grid.shape, float(n_level))
    c = np.full(grid.shape, float(c_level))
    return State(grid, n, c, u)


def _bandlimited(grid, rng, k_max):
    g = rng.standard_normal(grid.shape)
    gh = grid.forward(g)
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for axis, m in enumerate(grid.mode_indices):
        shape = [1] * grid.dim
        shape[axis] = m.size
        keep &= (np.abs(m) <= k_max).reshape(shape)
    g = grid.inverse(gh * keep)
    peak = np.abs(g).max()
    return g / peak if peak > 0 else g


def random_bandlimited(grid, seed=0, k_max=4, amplitude=1.0):
    """Seeded random data with modes ``max_i |m_i| <= k_max`` (see module docstring)."""
    if k_max < 1:
        raise ConfigurationError("k_max must be >= 1")
    if amplitude < 0:
        raise ConfigurationError("amplitude must be >= 0")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    gn = _bandlimited(grid, rng, k_max)
    gc = _bandlimited(grid, rng, k_max)
    gu = np.stack([_bandlimited(grid, rng, k_max) for _ in range(grid.dim)])
    n = amplitude * (1 + 0.5 * gn)
    c = amplitude * (1 + 0.5 * gc)
    u = amplitude * leray_project(grid, gu)
    return State(grid, n, c, u)


PRESETS = {
    "gaussian-blob": gaussian_blob,
    "taylor-green": taylor_green,
    "random-bandlimited": random_bandlimited,
}
