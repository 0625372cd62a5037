"""Picard iteration for the system on a short window ``[0, T0]``.

Starting from the zero trajectory, iterate ``j + 1`` solves the *linear*
problems

    n_t - Lap n = -u^j.grad n^j - div(chi(c^j) n^j grad c^j)
    c_t - Lap c = -u^j.grad c^j - n^j f(c^j)
    u_t + (-Lap)^alpha u + grad P = -u^j.grad u^j - n^j grad(phi),   div u = 0

with the initial data of the full problem.  The forcing is evaluated on the
stored previous iterate at ``n_time_nodes`` equally spaced nodes and
interpolated linearly in time; against that piecewise-linear forcing the
diagonal linear problems are integrated exactly.

Convergence is measured with

    W^j(t) = ||n^j - n^{j-1}||_2^2 + ||c^j - c^{j-1}||_{H^1}^2 + ||u^j - u^{j-1}||_2^2

and the iteration stops once ``sup_t W^{j+1} <= tol``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .model import State, tendencies_hat
from .spectral import leray_hat

__all__ = ["PicardConfig", "PicardReport", "picard_solve", "bisect_window", "phi1", "phi2"]


@dataclass(frozen=True)
class PicardConfig:
    T0: float
    n_time_nodes: int = 33
    max_iters: int = 30
    tol: float = 1e-9
    contraction_report: bool = True

    def __post_init__(self):
        if not self.T0 > 0:
            raise ConfigurationError("T0 must be > 0")
        if self.n_time_nodes < 16:
            raise ConfigurationError("n_time_nodes must be >= 16")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")


@dataclass
class PicardReport:
    iters: int = 0
    W_history: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    converged: bool = False
    T0: float = None

    def contracts(self, bound=0.5, start=2):
        """True when every ratio ``W^{j+1}/W^j`` with ``j >= start`` is ``<= bound``.

        ``contraction_ratios[i]`` is ``W^{i+2}/W^{i+1}``.
        """
        return all(r <= bound for r in self.contraction_ratios[start - 1 :])


def phi1(z):
    """``(e^z - 1)/z`` with the removable singularity filled in."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2, np.expm1(zs) / zs)


def phi2(z):
    """``(e^z - 1 - z)/z^2``; Taylor series near 0 avoids cancellation."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    series = 1 / 2 + z / 6 + z**2 / 24 + z**3 / 120 + z**4 / 720
    return np.where(small, series, (np.expm1(zs) - zs) / zs**2)


class _LinearPropagator:
    """Exact propagation of ``w' = -lam w + F(t)`` with F linear on each interval."""

    def __init__(self, lam, h):
        z = -lam * h
        self.E = np.exp(z)
        p1, p2 = phi1(z), phi2(z)
        self.a = h * (p1 - p2)
        self.b = h * p2

    def __call__(self, w, f0, f1):
        return self.E * w + self.a * f0 + self.b * f1


def _w_functional(grid, new, old):
    """W at every node, by Parseval."""
    wts = grid.weights * grid.volume
    one_k2 = 1.0 + grid.k2
    out = []
    for (n1, c1, u1), (n0, c0, u0) in zip(new, old):
        dn, dc, du = n1 - n0, c1 - c0, u1 - u0
        w = np.sum(wts * np.abs(dn) ** 2)
        w += np.sum(wts * one_k2 * np.abs(dc) ** 2)
        w += np.sum(wts * np.abs(du) ** 2)
        out.append(float(w))
    return np.array(out)


def picard_solve(state0, params, cfg):
    """Run the Picard iteration on ``[0, cfg.T0]``.

    Returns ``(trajectory, report)`` where ``trajectory`` is the list of
    states of the last iterate at the time nodes.
    """
    g = state0.grid
    M = cfg.n_time_nodes
    times = np.linspace(0.0, cfg.T0, M)
    h = times[1] - times[0]
    props = (
        _LinearPropagator(params.kappa_n * g.k2, h),
        _LinearPropagator(params.kappa_c * g.k2, h),
        _LinearPropagator(g.frac_multiplier(params.alpha), h),
    )
    w0 = state0.to_hat()
    w0 = (w0[0], w0[1], leray_hat(g, w0[2]))
    zero = (np.zeros_like(w0[0]), np.zeros_like(w0[1]), np.zeros_like(w0[2]))
    current = [zero] * M
    report = PicardReport(T0=cfg.T0)
    first = True

    for _ in range(cfg.max_iters):
        if first:
            forcing = [zero] * M
        else:
            forcing = []
            for nh, ch, uh in current:
                t = tendencies_hat(g, params, nh, ch, uh)
                forcing.append((t["n"], t["c"], t["u"]))
        new = [w0]
        for m in range(M - 1):
            w = new[-1]
            f0, f1 = forcing[m], forcing[m + 1]
            new.append(tuple(prop(w[i], f0[i], f1[i]) for i, prop in enumerate(props)))
        W = _w_functional(g, new, current)
        sup_w = float(W.max())
        if report.W_history and report.W_history[-1] > 0:
            report.contraction_ratios.append(sup_w / report.W_history[-1])
        report.W_history.append(sup_w)
        report.iters += 1
        current = new
        first = False
        if sup_w <= cfg.tol:
            report.converged = True
            break

    trajectory = [State.from_hat(g, nh, ch, uh, float(t)) for (nh, ch, uh), t in zip(current, times)]
    return trajectory, report


def bisect_window(state0, params, cfg, bound=0.5, start=2, max_halvings=20, refinements=4):
    """Find a window on which the iteration converges with every ratio
    ``W^{j+1}/W^j`` (``j >= start``) at most ``bound``.

    ``cfg.T0`` is the upper limit.  The window is halved until the condition
    holds, then refined by bisection between the last failing and first
    passing lengths.  Returns ``(T0, trajectory, report)`` for the largest
    passing window found, or raises RuntimeError.
    """
    def attempt(T):
        traj, rep = picard_solve(state0, params, replace(cfg, T0=T))
        return rep.converged and rep.contracts(bound, start), traj, rep

    hi, T = None, cfg.T0
    for _ in range(max_halvings + 1):
        ok, traj, rep = attempt(T)
        if ok:
            break
        hi, T = T, T / 2
    else:
        raise RuntimeError("no contractive window found")
    best = (T, traj, rep)
    lo = T
    if hi is not None:
        for _ in range(refinements):
            mid = 0.5 * (lo + hi)
            ok, traj, rep = attempt(mid)
            if ok:
                lo, best = mid, (mid, traj, rep)
            else:
                hi = mid
    return best
