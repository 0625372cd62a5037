"""Periodic pseudo-spectral solver for chemotaxis coupled to Navier-Stokes flow
with fractional dissipation, with diagnostics for regularity criteria."""

from .diagnostics import (
    CriterionSpec,
    DecayFit,
    DiagnosticsConfig,
    DiagnosticsRecord,
    EnergyMonitor,
    NormSpec,
    bootstrap_exponent,
    bootstrap_quantity,
    check_pairs,
    fit_decay,
    reference_exponent,
)
from .errors import (
    ChemNSError,
    ConfigurationError,
    DomainError,
    EvaluationError,
    HypothesisError,
    SnapshotError,
    SuspectedSingularity,
    TheoremOutOfRange,
)
from .model import ModelParams, Response, State, recover_pressure, rhs_c, rhs_n, rhs_u
from .picard import PicardConfig, PicardReport, bisect_window, picard_solve
from .spectral import (
    SpectralGrid,
    dealias,
    divergence,
    fft_forward,
    fft_inverse,
    frac_laplacian,
    gn_theta,
    gradient,
    hs_norm,
    laplacian,
    leray_project,
    lp_norm,
)
from .timestep import RunResult, Stepper, StepperConfig, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
