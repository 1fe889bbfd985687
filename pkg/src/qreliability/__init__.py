"""
Reliability, sensitivity and systematic error of a spin-1/2 magnetometer.

A spin-up particle crosses a region of transverse field ``Bx``, precesses,
and is read out by a Stern-Gerlach magnet.  The closed-form pipeline lives in
:mod:`~qreliability.scattering`, :mod:`~qreliability.sterngerlach` and
:mod:`~qreliability.reliability`; :mod:`~qreliability.histories` and
:mod:`~qreliability.oracle` provide independent checks.
"""
from .model import (
    DomainError,
    GaussianPacket,
    ModelParams,
    NumericError,
    SpinorPacket,
    free_width,
    half_line_mass,
    precession_angle,
    transit_time,
)
from .scattering import (
    ScatteringCoefficients,
    barrier_coefficients,
    channel_coefficients,
    ideal_populations,
    invert_reading,
    momentum_averaged_transmission,
    scatter_spinor,
    scattering_state,
)
from .sterngerlach import (
    SgOutcome,
    gaussian_overlap,
    linear_kick,
    overlap_integral,
    sg_evolve,
    sg_projection_reliability,
)
from .reliability import (
    DegenerateRegimeError,
    FitError,
    FitResult,
    InsufficientDataError,
    ReliabilityReport,
    applicability_min_field,
    error_derivative,
    measurement_pipeline,
    relation_fit,
    scaling_fit,
    sensitivity,
    sweep,
)
from .histories import (
    History,
    HistoryFamily,
    InconsistentFamilyError,
    check_consistency,
    history_inner_product,
    history_weight,
    survival_and_lifetime,
)

__version__ = "0.1.0"
