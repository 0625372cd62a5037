"""Integrating-factor IMEX time stepping with adaptive, rejecting step control.

The dissipative operators are diagonal in Fourier space and are integrated
exactly: over a step ``dt`` every mode of ``n`` and ``c`` is multiplied by
``exp(-kappa |k|^2 dt)`` and every mode of ``u`` by ``exp(-|k|^{2 alpha} dt)``.
Nonlinear terms are explicit (Euler or midpoint RK2 on the integrating-factor
variables).

A step whose result breaks positivity, the maximum principle for ``c``,
incompressibility or finiteness is rejected and retried with ``dt/2``; after
``max_dt_halvings`` consecutive rejections :class:`SuspectedSingularity` is
raised.  That is the discrete stand-in for reaching a maximal existence time.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import EnergyMonitor, accumulate, initial_record
from .errors import ConfigurationError, SuspectedSingularity
from .model import State, tendencies_hat
from .spectral import leray_hat

__all__ = ["StepperConfig", "Stepper", "RunResult", "run", "IF_RK2", "IF_EULER"]

log = logging.getLogger(__name__)

IF_RK2 = "if-rk2"
IF_EULER = "if-euler"


@dataclass(frozen=True)
class StepperConfig:
    dt_init: float
    t_end: float
    cfl: float = 0.4
    scheme: str = IF_RK2
    max_dt_halvings: int = 10
    eps_pos: float = 1e-8
    div_tol: float = 1e-10
    check_invariants: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.lower())
        if not self.dt_init > 0:
            raise ConfigurationError("dt_init must be > 0")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError("cfl must lie in (0, 1]")
        if not self.t_end >= 0:
            raise ConfigurationError("t_end must be >= 0")
        if self.scheme not in (IF_RK2, IF_EULER):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.max_dt_halvings < 0:
            raise ConfigurationError("max_dt_halvings must be >= 0")


class Stepper:
    """Advances states of one grid/parameter set.

    The first state passed to :meth:`step` (or ``reference``) fixes the
    invariant bounds: ``n >= min(0, min n0) - eps*max|n0|`` and
    ``min(0, min c0) - eps*max|c0| <= c <= max|c0| (1 + eps)``.
    """

    def __init__(self, grid, params, cfg, reference=None):
        self.grid = grid
        self.params = params
        self.cfg = cfg
        self.lam_n = params.kappa_n * grid.k2
        self.lam_c = params.kappa_c * grid.k2
        self.lam_u = grid.frac_multiplier(params.alpha)
        self._factors = {}
        self.dt_prev = None
        self.bounds = None
        self.s_fchi = None
        if reference is not None:
            self.set_reference(reference)

    def set_reference(self, state0):
        eps = self.cfg.eps_pos
        nmax = float(np.abs(state0.n).max())
        cmax = float(np.abs(state0.c).max())
        self.bounds = (
            min(0.0, float(state0.n.min())) - eps * nmax,
            min(0.0, float(state0.c.min())) - eps * cmax,
            cmax * (1 + eps),
        )
        self.s_fchi = self.params.s_fchi(max(float(state0.c.max()), 0.0))

    def factors(self, dt):
        if dt not in self._factors:
            if len(self._factors) > 8:
                self._factors.clear()
            self._factors[dt] = (
                np.exp(-self.lam_n * dt),
                np.exp(-self.lam_c * dt),
                np.exp(-self.lam_u * dt),
            )
        return self._factors[dt]

    def cfl_dt(self, state):
        """``cfl * h / max(1, ||u||_inf + S ||grad c||_inf)``."""
        g = self.grid
        ch = g.forward(state.c)
        grad_c = g.inverse(np.stack([1j * kd * ch for kd in g.k_deriv]))
        speed = np.sqrt(np.sum(state.u**2, axis=0)).max()
        speed += self.s_fchi * np.sqrt(np.sum(grad_c**2, axis=0)).max()
        return self.cfg.cfl * min(g.spacing) / max(1.0, float(speed))

    def advance(self, state, dt):
        """One integrating-factor step of size ``dt`` without any checks."""
        g, p = self.grid, self.params
        nh, ch, uh = state.to_hat()
        En, Ec, Eu = self.factors(dt)
        N0 = tendencies_hat(g, p, nh, ch, uh, physical=(state.n, state.c, state.u))
        if self.cfg.scheme == IF_EULER:
            nh1 = En * (nh + dt * N0["n"])
            ch1 = Ec * (ch + dt * N0["c"])
            uh1 = Eu * (uh + dt * N0["u"])
        else:
            Hn, Hc, Hu = self.factors(0.5 * dt)
            N1 = tendencies_hat(
                g,
                p,
                Hn * (nh + 0.5 * dt * N0["n"]),
                Hc * (ch + 0.5 * dt * N0["c"]),
                Hu * (uh + 0.5 * dt * N0["u"]),
            )
            nh1 = En * nh + dt * Hn * N1["n"]
            ch1 = Ec * ch + dt * Hc * N1["c"]
            uh1 = Eu * uh + dt * Hu * N1["u"]
        uh1 = leray_hat(g, uh1)
        return State.from_hat(g, nh1, ch1, uh1, state.t + dt)

    def violations(self, state):
        """Names of the invariants ``state`` breaks (empty when acceptable)."""
        out = []
        if not all(np.all(np.isfinite(a)) for a in (state.n, state.c, state.u)):
            return ["finite"]
        n_floor, c_floor, c_ceil = self.bounds
        if state.n.min() < n_floor:
            out.append("n >= 0")
        if state.c.min() < c_floor or state.c.max() > c_ceil:
            out.append("0 <= c <= ||c0||_inf")
        g = self.grid
        uh = np.stack([g.forward(ui) for ui in state.u])
        div = sum(1j * kd * uc for kd, uc in zip(g.k_deriv, uh))
        div2 = np.sum(g.weights * np.abs(div) ** 2)
        h1 = np.sum(g.weights * g.k2 * np.abs(uh) ** 2)
        if div2 > self.cfg.div_tol**2 * h1:
            out.append("div u = 0")
        return out

    def step(self, state, t_limit=None):
        """Take one accepted step, halving ``dt`` on invariant violations.

        Returns ``(new_state, dt, rejections)``.
        """
        if self.bounds is None:
            self.set_reference(state)
        cfg = self.cfg
        dt = min(cfg.dt_init, self.cfl_dt(state))
        if self.dt_prev is not None:
            dt = min(dt, 2 * self.dt_prev)
        unclipped = dt
        if t_limit is not None:
            remaining = t_limit - state.t
            # merge a sliver left over from rounding into this step
            if dt >= remaining or remaining - dt < 1e-9 * dt:
                dt = remaining
        rejections = 0
        while True:
            new = self.advance(state, dt)
            bad = self.violations(new) if cfg.check_invariants else []
            if not bad:
                break
            rejections += 1
            log.debug("t=%.6g dt=%.3g rejected: %s", state.t, dt, ", ".join(bad))
            if rejections > cfg.max_dt_halvings:
                raise SuspectedSingularity(
                    f"suspected singularity at t={state.t:.6g}: step rejected "
                    f"{rejections} times (last dt={dt:.3g}; violated: {', '.join(bad)})",
                    state=state,
                )
            dt *= 0.5
        if t_limit is not None and new.t != t_limit and dt == t_limit - state.t:
            new.t = t_limit
        if rejections == 0 and dt < unclipped:
            self.dt_prev = unclipped
        else:
            self.dt_prev = dt
        return new, dt, rejections


@dataclass
class RunResult:
    final_state: State
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0


def run(state0, params, cfg, diagnostics=None, hooks=(), monitor=True):
    """Integrate from ``state0`` to ``cfg.t_end``.

    ``diagnostics`` (a :class:`~chemns.diagnostics.DiagnosticsConfig`) turns
    on records every ``diagnostics.cadence`` accepted steps (always including
    the first and last state).  Each hook is called as ``hook(state, record)``
    after every accepted step, ``record`` being None between records.
    With ``monitor`` the energy monitors run at every record and failing
    verdicts are collected in ``RunResult.failures``.

    A suspected singularity is re-raised with the latest record attached.
    """
    grid = state0.grid
    stepper = Stepper(grid, params, cfg, reference=state0)
    result = RunResult(final_state=state0)
    rec = initial_record(state0, diagnostics, params) if diagnostics is not None else None
    if rec is not None:
        result.records.append(rec)
    mon = EnergyMonitor(state0, params, eps_pos=cfg.eps_pos) if (monitor and diagnostics) else None
    cadence = diagnostics.cadence if diagnostics is not None else 1
    state = state0
    t_end = cfg.t_end
    for hook in hooks:
        hook(state, rec)
    while t_end - state.t > 1e-14 * max(1.0, abs(t_end)):
        try:
            state, dt, rej = stepper.step(state, t_limit=t_end)
        except SuspectedSingularity as exc:
            if diagnostics is not None:
                exc.record = rec
            raise
        result.accepted += 1
        result.rejected += rej
        last = t_end - state.t <= 1e-14 * max(1.0, abs(t_end))
        new_rec = None
        if diagnostics is not None and (result.accepted % cadence == 0 or last):
            rec = new_rec = accumulate(rec, state, diagnostics, params)
            result.records.append(rec)
            if mon is not None:
                for v in mon.check(state):
                    if not v.passed:
                        result.failures.append((state.t, v))
        for hook in hooks:
            hook(state, new_rec)
    result.final_state = state
    return result
