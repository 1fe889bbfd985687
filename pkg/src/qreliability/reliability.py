"""
Reliability of the full sensing pipeline, its systematic error and
sensitivity, and the regressions that relate them.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.special import erf, erfc

from .model import DomainError, ModelParams, NumericError, half_line_mass
from .scattering import scatter_spinor
from .sterngerlach import sg_entry_packet, sg_evolve

__all__ = [
    "ReliabilityReport",
    "FitResult",
    "FitError",
    "InsufficientDataError",
    "DegenerateRegimeError",
    "READINGS",
    "SCALING_TARGETS",
    "measurement_pipeline",
    "reading",
    "sensitivity",
    "default_step",
    "error_derivative",
    "applicability_min_field",
    "characteristic_length",
    "near_ideal",
    "relation_fit",
    "scaling_fit",
    "sweep",
]

READINGS = ("beta_tilde", "B_measured")
SCALING_TARGETS = {"first_order": 1.0, "second_order": 0.5}


class FitError(ValueError):
    """The regression is undefined for the supplied data."""


class InsufficientDataError(FitError):
    """Too few usable points survive the regime filter."""


class DegenerateRegimeError(ArithmeticError):
    """The requested derivative is undefined in this regime (reading at a
    boundary of the population simplex)."""


@dataclass(frozen=True)
class ReliabilityReport:
    R: float
    alpha_tilde: float
    beta_tilde: float
    B_measured: float
    delta_B: float
    sensitivity: float
    config: tuple  # (k0, b, Bx)
    transmitted: float = 1.0
    degenerate: bool = False

    @property
    def k0(self) -> float:
        return self.config[0]

    @property
    def b(self) -> float:
        return self.config[1]

    @property
    def Bx(self) -> float:
        return self.config[2]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    n_excluded: int = 0
    y_range: float = math.nan
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def intercept_fraction(self) -> float:
        """``|intercept|`` relative to the spread of the fitted ordinate."""
        return abs(self.intercept) / self.y_range


def _readout(params: ModelParams):
    spinor = scatter_spinor(params)
    outcome = sg_evolve(spinor, params.f, params.t2, params)
    return spinor, outcome


def reading(params: ModelParams, which: str = "beta_tilde") -> float:
    """The apparatus reading for a true field ``params.Bx``."""
    if which not in READINGS:
        raise DomainError(f"reading must be one of {READINGS} (got {which!r})")
    _, out = _readout(params)
    return out.beta_tilde if which == "beta_tilde" else out.B_measured


def default_step(Bx: float) -> float:
    return max(1e-6, 1e-6 * Bx)


def _check_step(Bx: float, h: float):
    if not h > 0:
        raise DomainError(f"step h must be > 0 (got {h!r})")
    if h < 1e3 * sys.float_info.epsilon * Bx:
        raise NumericError(f"step h={h!r} underflows relative to Bx={Bx!r}")
    if Bx - h < 0:
        raise DomainError(f"Bx - h must be >= 0 (Bx={Bx!r}, h={h!r})")


def sensitivity(
    params: ModelParams, h: float | None = None, which: str = "beta_tilde"
) -> float:
    """Central-difference derivative of the reading with respect to Bx."""
    Bx = params.Bx
    h = default_step(Bx) if h is None else h
    _check_step(Bx, h)
    up = reading(params.with_(Bx=Bx + h), which)
    down = reading(params.with_(Bx=Bx - h), which)
    return (up - down) / (2 * h)


def measurement_pipeline(
    params: ModelParams, h: float | None = None, which: str = "beta_tilde"
) -> ReliabilityReport:
    """Scatter, separate and read out one configuration.

    ``R`` is the probability that the spin is transmitted and then lands in
    its designated half plane.  At ``Bx < h`` the reading is flat by symmetry
    and the sensitivity is reported as 0 with ``degenerate=True``.
    """
    spinor, out = _readout(params)
    R = abs(spinor.up_coeff) ** 2 * half_line_mass(out.packet_up, "positive") + abs(
        spinor.down_coeff
    ) ** 2 * half_line_mass(out.packet_down, "negative")
    step = default_step(params.Bx) if h is None else h
    if params.Bx < step:
        S, degenerate = 0.0, True
    else:
        S, degenerate = sensitivity(params, step, which), False
    return ReliabilityReport(
        R=R,
        alpha_tilde=out.alpha_tilde,
        beta_tilde=out.beta_tilde,
        B_measured=out.B_measured,
        delta_B=out.B_measured - params.Bx,
        sensitivity=S,
        config=(params.k0, params.b, params.Bx),
        transmitted=spinor.weight,
        degenerate=degenerate,
    )


def error_derivative(params: ModelParams, h: float | None = None, beta_floor: float = 1e-300) -> float:
    """``d(delta_B)/dBx`` from the populations and their derivatives.

    Raises :class:`DegenerateRegimeError` when ``beta_tilde`` vanishes, where
    the inversion has a square-root singularity.
    """
    Bx = params.Bx
    h = default_step(Bx) if h is None else h
    _check_step(Bx, h)
    _, out = _readout(params)
    al, be = out.alpha_tilde, out.beta_tilde
    if be <= beta_floor:
        raise DegenerateRegimeError("beta_tilde vanishes; the error derivative is singular")
    _, o_up = _readout(params.with_(Bx=Bx + h))
    _, o_dn = _readout(params.with_(Bx=Bx - h))
    dal = (o_up.alpha_tilde - o_dn.alpha_tilde) / (2 * h)
    dbe = (o_up.beta_tilde - o_dn.beta_tilde) / (2 * h)
    scale = params.hbar / params.t1
    return scale * math.sqrt(be / al) * (al * dbe - be * dal) / (2 * be * (be + al)) - 1


def characteristic_length(params: ModelParams) -> float:
    """Length scale ``sqrt(2) hbar k0 / (f m w1)`` of the separation, with
    ``w1 = |s1| / sigma`` the real spread of the z packet entering the magnet."""
    s1 = sg_entry_packet(params).width_sq
    w1 = abs(s1) / params.sigma
    return math.sqrt(2) * params.hbar * params.k0 / (params.f * params.m * w1)


def applicability_min_field(params: ModelParams, literal_erf: bool = False) -> float:
    """Smallest field for which reliability tracks the error.

    ``sqrt(erfc(b / b0))``; ``literal_erf=True`` returns ``sqrt(erf(b / b0))``
    instead, which grows with ``b``.
    """
    ratio = params.b / characteristic_length(params)
    return math.sqrt(float(erf(ratio) if literal_erf else erfc(ratio)))


def near_ideal(report: ReliabilityReport, R_min: float = 0.95, rel_error: float = 0.1) -> bool:
    if report.Bx <= 0:
        return False
    return report.R > R_min and abs(report.delta_B) / report.Bx < rel_error


def _linear_fit(x, y, n_excluded=0) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError("degenerate abscissa: need at least two distinct x values")
    res = stats.linregress(x, y)
    return FitResult(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue**2),
        n_points=int(x.size),
        n_excluded=n_excluded,
        y_range=float(np.ptp(y)),
        extra={"x": x, "y": y},
    )


def relation_fit(
    reports: Sequence[ReliabilityReport],
    min_points: int = 10,
    filter_near_ideal: bool = True,
) -> FitResult:
    """Least squares of ``1 - R`` against ``S |delta_B|``.

    Points outside the near-ideal regime (R > 0.95, |delta_B|/Bx < 0.1) are
    dropped and counted in ``n_excluded``.
    """
    kept = [r for r in reports if near_ideal(r)] if filter_near_ideal else list(reports)
    if len(kept) < min_points:
        raise InsufficientDataError(
            f"{len(kept)} near-ideal points (< {min_points}) out of {len(reports)}"
        )
    x = [abs(r.sensitivity * r.delta_B) for r in kept]
    y = [1 - r.R for r in kept]
    return _linear_fit(x, y, n_excluded=len(reports) - len(kept))


def scaling_fit(reports: Sequence[ReliabilityReport], regime: str = "first_order") -> FitResult:
    """Log-log fit of ``|delta_B|`` against ``1 - R``.

    The slope is expected near 1 where the first-order term dominates and
    near 1/2 as ``Bx -> 0``; the target is stored in ``extra['target']``.
    """
    if regime not in SCALING_TARGETS:
        raise DomainError(f"regime must be one of {tuple(SCALING_TARGETS)} (got {regime!r})")
    ordered = sorted(reports, key=lambda r: 1 - r.R)
    loss = np.array([1 - r.R for r in ordered])
    err = np.array([abs(r.delta_B) for r in ordered])
    if np.any(loss <= 0) or np.any(err <= 0):
        raise DomainError("scaling fit needs 1 - R > 0 and |delta_B| > 0 for every report")
    fit = _linear_fit(np.log(loss), np.log(err))
    fit.extra["target"] = SCALING_TARGETS[regime]
    return fit


def sweep(
    base: ModelParams,
    k0_values: Iterable[float] | None = None,
    b_values: Iterable[float] | None = None,
    Bx_values: Iterable[float] | None = None,
    which: str = "beta_tilde",
) -> list[ReliabilityReport]:
    """Pipeline over a grid; ``k0`` outermost, then ``b``, then ``Bx``."""
    k0s = [base.k0] if k0_values is None else list(k0_values)
    bs = [base.b] if b_values is None else list(b_values)
    Bxs = [base.Bx] if Bx_values is None else list(Bx_values)
    return [
        measurement_pipeline(base.with_(k0=float(k0), b=float(b), Bx=float(Bx)), which=which)
        for k0 in k0s
        for b in bs
        for Bx in Bxs
    ]
