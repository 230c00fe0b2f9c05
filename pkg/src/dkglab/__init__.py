"""Blow-up toolkit for a weakly coupled damped/undamped semilinear wave
system in one space dimension.

Four layers: special-function kernels (modified and classical Bessel
evaluations), exact linear solution operators with Duhamel forcing, a
finite-difference simulator with blow-up detection on the characteristic
line, and the slicing-sequence machinery producing constructive lifespan
upper bounds, plus an experiment harness with a CLI.
"""

from .bessel import (
    BesselEvalConfig,
    bessel_i0,
    bessel_i1,
    bessel_j0,
    bessel_j1,
    i1_over_z,
    j1_over_z,
)
from .errors import ConvergenceError, DomainError, GridConfigError, ValidationError
from .kernels import (
    DampingRegime,
    LinearParams,
    Profile,
    QuadratureConfig,
    SourceFn,
    apply_dS_dt,
    apply_S,
    classify_regime,
    mu,
    pde_residual,
    poly_bump,
    quad_gl,
    solve_linear_ivp,
)
from .sequences import (
    CriticalSequences,
    FrameConstants,
    SubcriticalSequences,
    critical_sequences,
    default_frame_constants,
    lifespan_bound,
    lower_bound_envelope,
    subcritical_sequences,
    theta,
    verify_closed_forms,
)
from .simulate import (
    BlowupPolicy,
    BlowupReport,
    CharacteristicTrace,
    InitialDataSpec,
    ModelParams,
    NumericsConfig,
    Trajectory,
    detect_blowup,
    first_lower_bound_check,
    make_initial_data,
    simulate,
)
from .stepping import BACKEND

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "BesselEvalConfig",
    "bessel_i0",
    "bessel_i1",
    "bessel_j0",
    "bessel_j1",
    "i1_over_z",
    "j1_over_z",
    "ConvergenceError",
    "DomainError",
    "GridConfigError",
    "ValidationError",
    "DampingRegime",
    "LinearParams",
    "Profile",
    "QuadratureConfig",
    "SourceFn",
    "apply_S",
    "apply_dS_dt",
    "classify_regime",
    "mu",
    "pde_residual",
    "poly_bump",
    "quad_gl",
    "solve_linear_ivp",
    "CriticalSequences",
    "FrameConstants",
    "SubcriticalSequences",
    "critical_sequences",
    "default_frame_constants",
    "lifespan_bound",
    "lower_bound_envelope",
    "subcritical_sequences",
    "theta",
    "verify_closed_forms",
    "BlowupPolicy",
    "BlowupReport",
    "CharacteristicTrace",
    "InitialDataSpec",
    "ModelParams",
    "NumericsConfig",
    "Trajectory",
    "detect_blowup",
    "first_lower_bound_check",
    "make_initial_data",
    "simulate",
]
