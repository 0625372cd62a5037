"""Right-hand sides of the chemotaxis / fractional Navier-Stokes system.

    n_t + u.grad n = Lap n - div(chi(c) n grad c)
    c_t + u.grad c = Lap c - n f(c)
    u_t + u.grad u + grad P = -(-Lap)^alpha u - n grad(phi),   div u = 0

The ``rhs_*`` functions return only the non-dissipative parts; dissipation
is handled exactly by the time stepper.  Advection is written in divergence
form (``div(u n)``, ``div(u c)``, ``div(u (x) u)``), which is equivalent
under ``div u = 0`` and makes the zero mode of every transport term vanish
identically.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, EvaluationError, HypothesisError
from .spectral import leray_hat

__all__ = [
    "Response",
    "linear",
    "saturating",
    "constant",
    "polynomial",
    "table",
    "parse_response",
    "ModelParams",
    "State",
    "rhs_n",
    "rhs_c",
    "rhs_u",
    "recover_pressure",
    "tendencies_hat",
]

# sampling density for the structural checks and for S_{f,chi}
N_SAMPLES = 10_000


class Response:
    """Scalar function of the oxygen concentration with two derivatives.

    ``resp(s)`` evaluates the function, ``resp(s, order=k)`` its k-th
    derivative.  ``spec`` is the canonical text form accepted by
    :func:`parse_response`.
    """

    def __init__(self, spec, funcs, domain=None):
        self.spec = spec
        self._funcs = funcs
        self.domain = domain

    def __repr__(self):
        return f"Response({self.spec!r})"

    def __eq__(self, other):
        return isinstance(other, Response) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)

    def __call__(self, s, order=0):
        s = np.asarray(s, dtype=float)
        if self.domain is not None:
            lo, hi = self.domain
            slack = 1e-8 * (hi - lo)
            smin, smax = float(s.min()), float(s.max())
            if smin < lo - slack or smax > hi + slack:
                raise EvaluationError(
                    f"{self.spec}: argument range [{smin:.6g}, {smax:.6g}] "
                    f"outside tabulated domain [{lo:.6g}, {hi:.6g}]"
                )
            s = np.clip(s, lo, hi)
        return self._funcs[order](s)


def _const(value):
    return lambda s: np.full(np.shape(s), float(value))


def linear(scale=1.0):
    scale = float(scale)
    return Response(f"linear {scale!r}", (lambda s: scale * s, _const(scale), _const(0.0)))


def saturating(scale=1.0):
    """``scale * s / (1 + s)``."""
    scale = float(scale)
    return Response(
        f"saturating {scale!r}",
        (
            lambda s: scale * s / (1.0 + s),
            lambda s: scale / (1.0 + s) ** 2,
            lambda s: -2.0 * scale / (1.0 + s) ** 3,
        ),
    )


def constant(value=1.0):
    value = float(value)
    return Response(f"constant {value!r}", (_const(value), _const(0.0), _const(0.0)))


def polynomial(coeffs):
    """Polynomial with coefficients in increasing degree."""
    coeffs = [float(a) for a in coeffs]
    p = Polynomial(coeffs)
    dp, ddp = p.deriv(1), p.deriv(2)
    spec = "poly " + ",".join(repr(a) for a in coeffs)
    return Response(spec, (p, dp, ddp))


def table(knots, values):
    """Natural cubic spline through ``(knots, values)``; defined on the knot range only."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    if knots.ndim != 1 or knots.size < 3 or knots.shape != values.shape:
        raise ConfigurationError("table needs >= 3 matching knots and values")
    if np.any(np.diff(knots) <= 0):
        raise ConfigurationError("table knots must be strictly increasing")
    spline = CubicSpline(knots, values, bc_type="natural")
    spec = "table " + ",".join(f"{float(x)!r}:{float(y)!r}" for x, y in zip(knots, values))
    return Response(
        spec,
        (spline, spline.derivative(1), spline.derivative(2)),
        domain=(float(knots[0]), float(knots[-1])),
    )


def parse_response(text):
    """Build a :class:`Response` from its text form.

    ``linear A``, ``saturating A``, ``constant A``, ``poly a0,a1,...`` or
    ``table x0:y0,x1:y1,...``.  A bare preset name uses coefficient 1.
    """
    parts = text.strip().split(None, 1)
    if not parts:
        raise ConfigurationError("empty function spec")
    kind = parts[0].lower()
    arg = parts[1].strip() if len(parts) > 1 else ""
    try:
        if kind in ("linear", "saturating", "constant"):
            value = float(arg) if arg else 1.0
            return {"linear": linear, "saturating": saturating, "constant": constant}[kind](value)
        if kind == "poly":
            return polynomial([float(a) for a in arg.split(",")])
        if kind == "table":
            pairs = [item.split(":") for item in arg.split(",")]
            return table([float(x) for x, _ in pairs], [float(y) for _, y in pairs])
    except ValueError as exc:
        raise ConfigurationError(f"bad function spec {text!r}: {exc}") from None
    raise ConfigurationError(f"unknown function kind {kind!r} in {text!r}")


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Coefficients of the system.

    ``grad_phi`` is the potential gradient itself (shape ``(dim,) + grid.shape``);
    a linear potential such as gravity has a periodic gradient but no periodic
    potential.  Diffusivities default to 1; zero switches diffusion off, which
    is only meant for tests.
    """

    alpha: float
    chi: Response
    f: Response
    grad_phi: np.ndarray
    kappa_n: float = 1.0
    kappa_c: float = 1.0

    def admissibility(self, c_max):
        """Flags for each structural assumption, sampled on ``[0, c_max]``."""
        s = np.linspace(0.0, max(float(c_max), 0.0), N_SAMPLES)
        try:
            fs = self.f(s)
            f0 = float(self.f(np.array([0.0]))[0])
            chi_ok = all(np.all(np.isfinite(self.chi(s, k))) for k in range(3))
        except EvaluationError:
            fs, f0, chi_ok = np.array([-1.0]), np.nan, False
        return {
            "alpha > 1/2": self.alpha > 0.5,
            "f(0) = 0": abs(f0) <= 1e-14,
            "f >= 0": bool(np.all(fs >= -1e-14)),
            "chi in W^{2,inf}": chi_ok,
            "grad_phi finite": bool(np.all(np.isfinite(self.grad_phi))),
            "kappas >= 0": self.kappa_n >= 0 and self.kappa_c >= 0,
        }

    def validate(self, c_max=1.0):
        failed = [name for name, ok in self.admissibility(c_max).items() if not ok]
        if failed:
            raise HypothesisError("model assumptions violated: " + ", ".join(failed))
        return self

    def s_fchi(self, c_max):
        """``sup_{0<=s<=c_max} |f|+|f'|+|chi|+|chi'|+|chi''|`` by dense sampling."""
        s = np.linspace(0.0, max(float(c_max), 0.0), N_SAMPLES)
        total = (
            np.abs(self.f(s))
            + np.abs(self.f(s, 1))
            + np.abs(self.chi(s))
            + np.abs(self.chi(s, 1))
            + np.abs(self.chi(s, 2))
        )
        return float(total.max())


@dataclass(eq=False)
class State:
    """Bacteria density ``n``, oxygen ``c`` and velocity ``u`` at time ``t``."""

    grid: object
    n: np.ndarray
    c: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        g = self.grid
        self.n = np.asarray(self.n, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.n.shape != g.shape or self.c.shape != g.shape:
            raise ConfigurationError(f"n, c must have shape {g.shape}")
        if self.u.shape != (g.dim,) + g.shape:
            raise ConfigurationError(f"u must have shape {(g.dim,) + g.shape}")

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(grid, grid.zeros(), grid.zeros(), grid.vector_zeros(), t)

    def copy(self):
        return replace(self, n=self.n.copy(), c=self.c.copy(), u=self.u.copy())

    def to_hat(self):
        g = self.grid
        return g.forward(self.n), g.forward(self.c), g.forward(self.u)

    @classmethod
    def from_hat(cls, grid, n_hat, c_hat, u_hat, t):
        return cls(grid, grid.inverse(n_hat), grid.inverse(c_hat), grid.inverse(u_hat), t)


def _div_hat(grid, flux_hat):
    return sum(1j * kd * fc for kd, fc in zip(grid.k_deriv, flux_hat))


def tendencies_hat(grid, params, n_hat, c_hat, u_hat, parts="ncu", physical=None):
    """Spectral non-dissipative tendencies of ``(n, c, u)``.

    Every product is formed in physical space and dealiased by the 2/3 rule
    before differentiation.  ``physical`` may carry ``(n, c, u)`` already in
    physical space to save three inverse transforms.  Returns a dict keyed by
    the requested ``parts``.
    """
    mask = grid.dealias_mask.astype(float)
    if physical is None:
        n, c, u = grid.inverse(n_hat), grid.inverse(c_hat), grid.inverse(u_hat)
    else:
        n, c, u = physical
    out = {}
    if "n" in parts:
        grad_c = grid.inverse(np.stack([1j * kd * c_hat for kd in grid.k_deriv]))
        flux = u * n + params.chi(c) * n * grad_c
        out["n"] = -mask * _div_hat(grid, grid.forward(flux))
    if "c" in parts:
        adv = grid.forward(u * c)
        out["c"] = -mask * (_div_hat(grid, adv) + grid.forward(n * params.f(c)))
    if "u" in parts:
        d = grid.dim
        acc = [grid.forward(n * params.grad_phi[i]) for i in range(d)]
        for i in range(d):
            for j in range(i, d):
                uu = grid.forward(u[i] * u[j])
                acc[i] = acc[i] + 1j * grid.k_deriv[j] * uu
                if j != i:
                    acc[j] = acc[j] + 1j * grid.k_deriv[i] * uu
        out["u"] = leray_hat(grid, -mask * np.stack(acc))
    return out


def rhs_n(state, params):
    """``-u.grad n - div(chi(c) n grad c)``."""
    g = state.grid
    n_hat, c_hat, u_hat = state.to_hat()
    res = tendencies_hat(g, params, n_hat, c_hat, u_hat, "n", (state.n, state.c, state.u))
    return g.inverse(res["n"])


def rhs_c(state, params):
    """``-u.grad c - n f(c)``."""
    g = state.grid
    n_hat, c_hat, u_hat = state.to_hat()
    res = tendencies_hat(g, params, n_hat, c_hat, u_hat, "c", (state.n, state.c, state.u))
    return g.inverse(res["c"])


def rhs_u(state, params):
    """Leray projection of ``-u.grad u - n grad(phi)``; the pressure never appears."""
    g = state.grid
    n_hat, c_hat, u_hat = state.to_hat()
    res = tendencies_hat(g, params, n_hat, c_hat, u_hat, "u", (state.n, state.c, state.u))
    return g.inverse(res["u"])


def recover_pressure(state, params):
    """Zero-mean pressure from ``Lap P = -grad u : grad u - div(n grad phi)``.

    Computed as ``Lap^{-1} div g`` with ``g = -div(u (x) u) - n grad(phi)``
    (dealiased like the momentum tendency), so ``grad P`` is exactly the
    gradient part of ``g``.
    """
    g = state.grid
    d = g.dim
    u = state.u
    mask = g.dealias_mask.astype(float)
    acc = [g.forward(state.n * params.grad_phi[i]) for i in range(d)]
    for i in range(d):
        for j in range(d):
            acc[i] = acc[i] + 1j * g.k_deriv[j] * g.forward(u[i] * u[j])
    forcing = -mask * np.stack(acc)
    div_hat = _div_hat(g, forcing)
    kd2 = g.kd2
    p_hat = np.where(kd2 > 0, -div_hat / np.where(kd2 > 0, kd2, 1.0), 0.0)
    return g.inverse(p_hat)
