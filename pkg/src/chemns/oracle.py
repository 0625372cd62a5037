"""Brute-force references for the test suite and the ``validate`` command.

None of these share code paths with the fast operators: the DFT here is a
materialised matrix, derivatives are finite differences, and heat solutions
are written down in closed form.
"""

import numpy as np

from .errors import DomainError

__all__ = [
    "DenseSpectralOracle",
    "dense_frac_laplacian",
    "fd_derivative",
    "exact_heat",
    "periodic_gaussian",
    "first_offending_mode",
]

MAX_ORACLE_POINTS = 16


def _dft_matrix(n):
    """Unitary DFT matrix ``F[m, j] = exp(-2 pi i m j / n) / sqrt(n)``."""
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def _signed_modes(n):
    m = np.arange(n)
    return np.where(m <= n // 2, m, m - n)


class DenseSpectralOracle:
    """Per-axis dense DFT matrices and the full multiplier diagonal.

    Limited to 16 points per axis.  The transform is applied as a sequence of
    dense matrix products along each axis, which is the same linear map as
    the Kronecker product of the axis matrices.
    """

    def __init__(self, sizes, box_lengths):
        sizes = tuple(int(n) for n in sizes)
        if any(n > MAX_ORACLE_POINTS for n in sizes):
            raise DomainError(
                f"dense oracle refuses grids above {MAX_ORACLE_POINTS} points per axis, got {sizes}"
            )
        self.sizes = sizes
        self.box_lengths = tuple(float(L) for L in box_lengths)
        self.matrices = [_dft_matrix(n) for n in sizes]
        ks = [2 * np.pi / L * _signed_modes(n) for n, L in zip(sizes, self.box_lengths)]
        grids = np.meshgrid(*ks, indexing="ij")
        self.ksq = sum(k**2 for k in grids)

    @classmethod
    def for_grid(cls, grid):
        return cls(grid.sizes, grid.box_lengths)

    def unitarity_error(self):
        return max(np.abs(F.conj().T @ F - np.eye(F.shape[0])).max() for F in self.matrices)

    def _apply(self, f, mats):
        out = np.asarray(f, dtype=complex)
        for axis, F in enumerate(mats):
            out = np.moveaxis(np.tensordot(F, out, axes=([1], [axis])), 0, axis)
        return out

    def forward(self, f):
        return self._apply(f, self.matrices)

    def inverse(self, fhat):
        return self._apply(fhat, [F.conj().T for F in self.matrices])

    def multiplier(self, s):
        diag = np.zeros_like(self.ksq)
        nz = self.ksq > 0
        diag[nz] = self.ksq[nz] ** s
        return diag

    def frac_laplacian(self, f, s):
        return self.inverse(self.multiplier(s) * self.forward(f)).real


def dense_frac_laplacian(grid, f, s):
    """``(-Lap)^s f`` through dense DFT matrices (grids up to 16 points per axis)."""
    if not s >= 0:
        raise DomainError(f"fractional order must be >= 0, got {s}")
    return DenseSpectralOracle.for_grid(grid).frac_laplacian(f, s)


def fd_derivative(grid, f, axis, order=1):
    """Fourth-order centred periodic finite difference of ``f`` along ``axis``.

    ``order`` is the derivative order, 1 or 2.
    """
    h = grid.spacing[axis]

    def sh(k):
        return np.roll(f, -k, axis=axis)

    if order == 1:
        return (-sh(2) + 8 * sh(1) - 8 * sh(-1) + sh(-2)) / (12 * h)
    if order == 2:
        return (-sh(2) + 16 * sh(1) - 30 * f + 16 * sh(-1) - sh(-2)) / (12 * h * h)
    raise DomainError(f"fd_derivative supports order 1 or 2, got {order}")


def exact_heat(grid, descriptor, s, t):
    """Exact solution of ``w_t = -(-Lap)^s w`` at time ``t``.

    ``descriptor`` is either

    * ``{"mode": (m1, m2[, m3]), "amplitude": a, "phase": p}`` for
      ``a cos(k.x + p)`` with integer mode numbers (exact for any ``s``), or
    * ``{"gaussians": [(mass, center, variance), ...]}`` for a sum of
      periodised Gaussians (``s = 1`` only; variance grows by ``2t``).

    An empty descriptor (or ``None``) is the zero field.
    """
    x = grid.coords()
    if not descriptor:
        return np.zeros(grid.shape)
    if "mode" in descriptor:
        m = np.asarray(descriptor["mode"], dtype=float)
        k = 2 * np.pi * m / np.asarray(grid.box_lengths)
        ksq = float(np.sum(k**2))
        decay = np.exp(-(ksq**s) * t) if ksq > 0 else 1.0
        phase = sum(ki * xi for ki, xi in zip(k, x)) + descriptor.get("phase", 0.0)
        return descriptor.get("amplitude", 1.0) * decay * np.cos(phase)
    if "gaussians" in descriptor:
        if s != 1:
            raise DomainError("Gaussian descriptors are exact only for s = 1")
        out = np.zeros(grid.shape)
        for mass, center, var in descriptor["gaussians"]:
            v = var + 2 * t
            norm = mass / (2 * np.pi * v) ** (grid.dim / 2)
            out += norm * periodic_gaussian(grid, center, v)
        return out
    raise DomainError(f"unrecognised heat descriptor {descriptor!r}")


def periodic_gaussian(grid, center, variance, images=3):
    """``sum over periodic images of exp(-|x - c|^2 / (2 variance))``."""
    x = grid.coords()
    total = np.ones(grid.shape)
    for xi, ci, L in zip(x, center, grid.box_lengths):
        acc = np.zeros_like(xi)
        for j in range(-images, images + 1):
            acc = acc + np.exp(-((xi - ci + j * L) ** 2) / (2 * variance))
        total = total * acc
    return total


def first_offending_mode(grid, fast, reference, rtol):
    """Signed mode index of the largest coefficient mismatch above ``rtol``, or None.

    The tolerance is relative to the largest reference coefficient.
    """
    a = grid.forward(np.asarray(fast, dtype=float))
    b = grid.forward(np.asarray(reference, dtype=float))
    diff = np.abs(a - b)
    scale = max(float(np.abs(b).max()), 1e-300)
    if diff.max() <= rtol * scale:
        return None
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return tuple(int(m[i]) for m, i in zip(grid.mode_indices, idx))
