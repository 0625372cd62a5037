"""Periodic spectral machinery: grid, transforms, Fourier multipliers and norms.

Conventions
-----------
Physical scalar fields are real arrays of shape ``grid.shape`` indexed
``[ix, iy(, iz)]``; vector fields carry a leading component axis,
``(dim,) + grid.shape``.  Spectral coefficients use the real-to-complex layout
(half spectrum along the last axis) and are normalised so that

    f(x) = sum_k fhat_k exp(i k.x),     ||f||_2^2 = vol * sum_k |fhat_k|^2,

i.e. ``fhat = rfftn(f) / N_total``.  The Hermitian half layout is an internal
detail; ``grid.weights`` holds the multiplicity of every stored mode.
"""

import os
from fractions import Fraction

import numpy as np
import scipy.fft

from .errors import ConfigurationError, DomainError

__all__ = [
    "SpectralGrid",
    "fft_forward",
    "fft_inverse",
    "frac_laplacian",
    "gradient",
    "divergence",
    "laplacian",
    "leray_project",
    "dealias",
    "lp_norm",
    "hs_norm",
    "hs_inhom",
    "inner",
    "gn_theta",
    "DegenerateInterpolation",
    "InfeasibleInterpolation",
]


def _default_workers():
    try:
        return max(1, int(os.environ.get("CHEMNS_THREADS", "1")))
    except ValueError:
        return 1


def _frozen(a):
    a.setflags(write=False)
    return a


class SpectralGrid:
    """Uniform periodic grid on the box ``prod_i [0, L_i)``.

    Immutable after construction; all derived arrays are read-only, so one
    grid can be shared between threads and simulations.
    """

    def __init__(self, sizes, box_lengths=None, workers=None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {len(sizes)}")
        for n in sizes:
            if n < 8 or n % 2:
                raise ConfigurationError(f"grid sizes must be even and >= 8, got {sizes}")
        if box_lengths is None:
            box_lengths = (2 * np.pi,) * len(sizes)
        elif np.isscalar(box_lengths):
            box_lengths = (float(box_lengths),) * len(sizes)
        box_lengths = tuple(float(L) for L in box_lengths)
        if len(box_lengths) != len(sizes):
            raise ConfigurationError("box_lengths and sizes differ in length")
        if not all(np.isfinite(L) and L > 0 for L in box_lengths):
            raise ConfigurationError(f"box lengths must be positive, got {box_lengths}")

        self.sizes = sizes
        self.box_lengths = box_lengths
        self.workers = _default_workers() if workers is None else int(workers)
        self.dim = len(sizes)
        self.shape = sizes
        self.spectral_shape = sizes[:-1] + (sizes[-1] // 2 + 1,)
        self.spacing = tuple(L / n for L, n in zip(box_lengths, sizes))
        self.cell_volume = float(np.prod(self.spacing))
        self.volume = float(np.prod(box_lengths))
        self.npoints = int(np.prod(sizes))

        d = self.dim
        ints, waves, dwaves, masks = [], [], [], []
        for axis, (n, L) in enumerate(zip(sizes, box_lengths)):
            if axis == d - 1:
                m = np.arange(n // 2 + 1)
            else:
                m = np.fft.ifftshift(np.arange(-(n // 2), n // 2))
            shape = [1] * d
            shape[axis] = m.size
            scale = 2 * np.pi / L
            k = (m * scale).reshape(shape)
            kd = np.where(np.abs(m) == n // 2, 0, m) * scale
            ints.append(_frozen(m.copy()))
            waves.append(_frozen(k))
            dwaves.append(_frozen(kd.reshape(shape)))
            # 2/3 rule; a mode sitting exactly on N/3 is dropped so that
            # aliases of quadratic products never land on a retained mode
            masks.append((3 * np.abs(m) < n).reshape(shape))
        self.mode_indices = tuple(ints)
        self.k = tuple(waves)
        self.k_deriv = tuple(dwaves)
        self.k2 = _frozen(sum(k**2 for k in waves))
        self.kmag = _frozen(np.sqrt(self.k2))
        self.kd2 = _frozen(sum(k**2 for k in dwaves))
        mask = masks[0]
        for mk in masks[1:]:
            mask = mask & mk
        self.dealias_mask = _frozen(np.broadcast_to(mask, self.spectral_shape).copy())

        last = sizes[-1]
        w = np.full(self.spectral_shape[-1], 2.0)
        w[0] = 1.0
        w[last // 2] = 1.0
        self.weights = _frozen(np.broadcast_to(w, self.spectral_shape).copy())

    def __repr__(self):
        return f"SpectralGrid(sizes={self.sizes}, box_lengths={self.box_lengths})"

    def __eq__(self, other):
        if not isinstance(other, SpectralGrid):
            return NotImplemented
        return self.sizes == other.sizes and self.box_lengths == other.box_lengths

    def __hash__(self):
        return hash((self.sizes, self.box_lengths))

    def coords(self):
        """Node coordinates as a tuple of broadcastable arrays (``indexing='ij'``)."""
        axes = [np.arange(n) * h for n, h in zip(self.sizes, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def frac_multiplier(self, s):
        """``|k|^{2s}`` with the zero mode set to 0."""
        with np.errstate(divide="ignore"):
            mult = np.where(self.k2 > 0, self.k2 ** s, 0.0) if s != 1 else self.k2.copy()
        mult[(0,) * self.dim] = 0.0
        return mult

    def zeros(self):
        return np.zeros(self.shape)

    def vector_zeros(self):
        return np.zeros((self.dim,) + self.shape)

    # -- transforms -----------------------------------------------------

    def _check(self, f, what="field"):
        f = np.asarray(f)
        if f.shape[-self.dim:] != self.shape:
            raise ConfigurationError(
                f"{what} has shape {f.shape}, grid expects trailing shape {self.shape}"
            )
        return f

    def forward(self, f):
        f = self._check(f)
        axes = tuple(range(-self.dim, 0))
        return scipy.fft.rfftn(f, axes=axes, workers=self.workers) / self.npoints

    def inverse(self, fhat):
        fhat = np.asarray(fhat)
        if fhat.shape[-self.dim:] != self.spectral_shape:
            raise ConfigurationError(
                f"coefficients have shape {fhat.shape}, grid expects {self.spectral_shape}"
            )
        axes = tuple(range(-self.dim, 0))
        return scipy.fft.irfftn(fhat * self.npoints, s=self.shape, axes=axes, workers=self.workers)


def fft_forward(grid, f):
    """Normalised spectral coefficients of the real field ``f``."""
    return grid.forward(f)


def fft_inverse(grid, coeffs):
    """Real field whose coefficients are ``coeffs`` (Hermitian half layout)."""
    return grid.inverse(coeffs)


def frac_laplacian(grid, f, s):
    """Apply ``(-Laplacian)^s`` through the multiplier ``|k|^{2s}``."""
    if not s >= 0:
        raise DomainError(f"fractional order must be >= 0, got {s}")
    return grid.inverse(grid.frac_multiplier(s) * grid.forward(f))


def gradient(grid, f):
    fh = grid.forward(f)
    return np.stack([grid.inverse(1j * kd * fh) for kd in grid.k_deriv])


def divergence(grid, v):
    v = grid._check(v, "vector field")
    acc = sum(1j * kd * grid.forward(vi) for kd, vi in zip(grid.k_deriv, v))
    return grid.inverse(acc)


def laplacian(grid, f):
    return -frac_laplacian(grid, f, 1)


def leray_hat(grid, vhat):
    """Leray projection in spectral space; the zero mode passes through."""
    kd = grid.k_deriv
    kdotv = sum(k * vc for k, vc in zip(kd, vhat))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(grid.kd2 > 0, kdotv / np.where(grid.kd2 > 0, grid.kd2, 1.0), 0.0)
    return np.stack([vc - k * ratio for k, vc in zip(kd, vhat)])


def leray_project(grid, v):
    """Project ``v`` onto divergence-free fields (``P = I - grad Lap^{-1} div``)."""
    v = grid._check(v, "vector field")
    vh = np.stack([grid.forward(vi) for vi in v])
    ph = leray_hat(grid, vh)
    return np.stack([grid.inverse(c) for c in ph])


def dealias(grid, coeffs):
    """Zero every mode outside the 2/3-rule mask."""
    return np.where(grid.dealias_mask, coeffs, 0)


def _pointwise_magnitude(grid, f):
    f = np.asarray(f, dtype=float)
    if f.ndim == grid.dim:
        return np.abs(f)
    lead = f.reshape((-1,) + grid.shape)
    return np.sqrt(np.sum(lead**2, axis=0))


def lp_norm(grid, f, p):
    """Rectangle-rule ``L^p`` norm; ``p = inf`` is the grid maximum.

    Vector and tensor fields (leading component axes) use the pointwise
    Euclidean/Frobenius magnitude.
    """
    if not p >= 1:
        raise DomainError(f"L^p norm needs p >= 1, got {p}")
    a = _pointwise_magnitude(grid, f)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * grid.cell_volume))
    amax = a.max()
    if amax == 0:
        return 0.0
    # scale first so large p does not overflow
    return float(amax * (np.sum((a / amax) ** p) * grid.cell_volume) ** (1.0 / p))


def _hs_squared(grid, f, s):
    f = np.asarray(f, dtype=float)
    comps = f.reshape((-1,) + grid.shape)
    with np.errstate(divide="ignore"):
        mult = np.where(grid.k2 > 0, grid.k2 ** s if s != 0 else 1.0, 0.0)
    total = 0.0
    for fc in comps:
        fh = grid.forward(fc)
        total += np.sum(grid.weights * mult * (fh.real**2 + fh.imag**2))
    return float(total * grid.volume)


def hs_norm(grid, f, s):
    """Homogeneous Sobolev norm ``(vol * sum |k|^{2s} |fhat_k|^2)^{1/2}``.

    The zero mode is excluded for every ``s``, so negative orders are finite.
    These are torus (lattice-sum) norms.
    """
    return float(np.sqrt(_hs_squared(grid, f, s)))


def hs_inhom(grid, f, s):
    """``(||f||_2^2 + ||f||_{H^s-dot}^2)^{1/2}``."""
    return float(np.sqrt(lp_norm(grid, f, 2) ** 2 + _hs_squared(grid, f, s)))


def inner(grid, f, g):
    """``L^2`` inner product by quadrature (sums over component axes too)."""
    return float(np.sum(np.asarray(f) * np.asarray(g)) * grid.cell_volume)


class DegenerateInterpolation(DomainError):
    """Both interpolation endpoints carry the same scaling; theta is undetermined."""


class InfeasibleInterpolation(DomainError):
    """The scaling balance has no solution with theta in [0, 1]."""

    def __init__(self, message, theta):
        super().__init__(message)
        self.theta = theta


def _recip(x):
    if np.isinf(x):
        return Fraction(0)
    return 1 / Fraction(x)


def gn_theta(sigma, p, a, m, s, r, dim=3):
    """Interpolation exponent of the Gagliardo-Nirenberg inequality

        ||Lambda^sigma u||_p <= C ||Lambda^a u||_m^theta ||Lambda^s u||_r^(1-theta)

    from the balance ``1/p - sigma/d = theta (1/m - a/d) + (1-theta)(1/r - s/d)``.
    Arithmetic is exact on the binary values passed in.

    Raises DegenerateInterpolation when both endpoints scale identically and
    InfeasibleInterpolation when the solution leaves [0, 1].
    """
    d = Fraction(dim)
    lhs = _recip(p) - Fraction(sigma) / d
    low = _recip(m) - Fraction(a) / d
    high = _recip(r) - Fraction(s) / d
    if low == high:
        raise DegenerateInterpolation("interpolation endpoints have equal scaling")
    if not sigma < s:
        raise DomainError(f"need sigma < s, got sigma={sigma}, s={s}")
    theta = (lhs - high) / (low - high)
    if not 0 <= theta <= 1:
        raise InfeasibleInterpolation(f"theta = {float(theta)} outside [0, 1]", float(theta))
    return float(theta)
