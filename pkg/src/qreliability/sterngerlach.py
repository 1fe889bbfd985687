"""
Stern-Gerlach readout under the linear gradient ``H = p^2/2m - f z sigma_z``.

The evolution factorises exactly (momentum kick, translation and a global
phase), so a Gaussian input stays Gaussian: spin-up drifts to
``+f t^2 / 2m`` with wavenumber ``+f t / hbar``, spin-down mirrors it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .model import (
    DomainError,
    GaussianPacket,
    ModelParams,
    SpinorPacket,
    free_width,
    half_line_mass,
)
from .scattering import invert_reading

__all__ = [
    "SgOutcome",
    "linear_kick",
    "sg_evolve",
    "overlap_integral",
    "gaussian_overlap",
    "sg_projection_reliability",
]


@dataclass(frozen=True)
class SgOutcome:
    alpha_tilde: float
    beta_tilde: float
    packet_up: GaussianPacket
    packet_down: GaussianPacket
    B_measured: float
    c1: complex = 1.0
    c2: complex = 0.0

    @property
    def weight(self) -> float:
        return abs(self.c1) ** 2 + abs(self.c2) ** 2


def linear_kick(
    packet: GaussianPacket, force: float, t: float, m: float = 1.0, hbar: float = 1.0
) -> GaussianPacket:
    """Exact evolution of a Gaussian in the potential ``-force * z``."""
    if t < 0:
        raise DomainError(f"t must be >= 0 (got {t!r})")
    free = packet.evolve_free(t, m, hbar)
    shift = force * t**2 / (2 * m)
    dk = force * t / hbar
    # exp(i dk z) e^{-i F^2 t^3 / 6 m hbar} rewritten around the new center
    dphase = dk * (free.center + shift) - force**2 * t**3 / (6 * m * hbar)
    return replace(
        free,
        center=free.center + shift,
        wavenumber=free.wavenumber + dk,
        phase=free.phase + dphase,
    )


def sg_evolve(
    spinor: SpinorPacket, f: float, t2: float, params: ModelParams
) -> SgOutcome:
    """Separate the spinor for time ``t2`` and read half-plane populations."""
    if t2 < 0:
        raise DomainError(f"t2 must be >= 0 (got {t2!r})")
    m, hbar = params.m, params.hbar
    up = linear_kick(spinor.z_packet_up.normalized(), +f, t2, m, hbar)
    down = linear_kick(spinor.z_packet_down.normalized(), -f, t2, m, hbar)
    w_up = abs(spinor.up_coeff) ** 2
    w_down = abs(spinor.down_coeff) ** 2
    alpha = w_up * half_line_mass(up, "positive") + w_down * half_line_mass(down, "positive")
    beta = w_up * half_line_mass(up, "negative") + w_down * half_line_mass(down, "negative")
    return SgOutcome(
        alpha_tilde=alpha,
        beta_tilde=beta,
        packet_up=up,
        packet_down=down,
        B_measured=invert_reading(alpha, beta, params),
        c1=spinor.up_coeff,
        c2=spinor.down_coeff,
    )


def gaussian_overlap(p1: GaussianPacket, p2: GaussianPacket) -> complex:
    """``<p1|p2>`` in closed form, amplitudes and phases included."""
    A1 = 1 / (4 * p1.width_sq.conjugate())
    A2 = 1 / (4 * p2.width_sq)
    d1, d2 = p1.center, p2.center
    k1, k2 = p1.wavenumber, p2.wavenumber
    # exponent of conj(psi1) psi2 is -a z^2 + b z + c
    a = A1 + A2
    b = 2 * A1 * d1 + 2 * A2 * d2 - 1j * k1 + 1j * k2
    c = -A1 * d1**2 - A2 * d2**2 + 1j * k1 * d1 - 1j * k2 * d2
    log_int = b * b / (4 * a) + c + 0.5 * math.log(math.pi) - 0.5 * cmath.log(a)
    return p1.prefactor().conjugate() * p2.prefactor() * cmath.exp(log_int)


def overlap_integral(p1: GaussianPacket, p2: GaussianPacket) -> float:
    """``|<p1|p2>|`` for two packets."""
    return abs(gaussian_overlap(p1, p2))


def sg_projection_reliability(p_up: GaussianPacket, p_down: GaussianPacket) -> float:
    """Reliability of the SG stage alone: spin-up found above ``z = 0`` plus
    spin-down found below it, for the packets as given.

    With unit-norm packets this runs from 1 (identical packets centred on
    the boundary, one half from each) to 2 (complete separation).  Scale the
    amplitudes by ``1/sqrt(2)`` to get a probability for an equal spin
    superposition.
    """
    return half_line_mass(p_up, "positive") + half_line_mass(p_down, "negative")


def sg_entry_packet(params: ModelParams) -> GaussianPacket:
    """The z packet entering the magnet (free evolution over ``t1``)."""
    return GaussianPacket(
        0.0, 0.0, free_width(params.sigma**2, params.t1, params.m, params.hbar)
    )
