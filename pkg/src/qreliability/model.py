"""
Shared physical model: parameters, complex-width Gaussian packets and the
closed-form integrals over them.

A packet with complex width-squared ``s`` is

    psi(z) = A exp(i phase) N(s) exp[-(z - d)^2 / (4 s) + i k (z - d)],

with ``N(s) = (2 pi)^(-1/4) Re(s)^(1/4) / sqrt(s)``, which is the free
propagator's normalisation for ``s = sigma^2 + i hbar t / (2 m)``.  Its
probability density is a normal distribution with mean ``d`` and variance
``|s|^2 / Re(s)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

from scipy.special import erfc

__all__ = [
    "DomainError",
    "NumericError",
    "ModelParams",
    "GaussianPacket",
    "SpinorPacket",
    "free_width",
    "transit_time",
    "half_line_mass",
    "precession_angle",
]


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(ArithmeticError):
    """A numerical procedure could not deliver the requested accuracy."""


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and apparatus geometry.

    Defaults reproduce the reference configuration: hbar = m = 1, field
    region of width ``a = 3``, packet width ``sigma = 0.5``, SG gradient
    ``f = 1``, SG length ``b = 35``, incident wavenumber ``k0 = 5`` and a
    measured field ``Bx = 2``.
    """

    hbar: float = 1.0
    m: float = 1.0
    a: float = 3.0
    sigma: float = 0.5
    f: float = 1.0
    x0: float = -10.0
    b: float = 35.0
    k0: float = 5.0
    Bx: float = 2.0

    def __post_init__(self):
        for name in ("hbar", "m", "a", "sigma", "f", "k0", "b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0 (got {value!r})")
        if not (math.isfinite(self.Bx) and self.Bx >= 0):
            raise DomainError(f"Bx must be >= 0 (got {self.Bx!r})")
        if not (math.isfinite(self.x0) and self.x0 + 5 * self.sigma < 0):
            raise DomainError(
                f"x0 + 5*sigma must be < 0 (got x0={self.x0!r}, sigma={self.sigma!r})"
            )

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def energy(self) -> float:
        """Kinetic energy of the carrier wavenumber."""
        return (self.hbar * self.k0) ** 2 / (2 * self.m)

    @property
    def t1(self) -> float:
        """Time spent crossing the measured field."""
        return transit_time(self.a, self.k0, self.m, self.hbar)

    @property
    def t2(self) -> float:
        """Time spent inside the Stern-Gerlach magnet."""
        return transit_time(self.b, self.k0, self.m, self.hbar)


def free_width(s0: complex, t: float, m: float = 1.0, hbar: float = 1.0) -> complex:
    """Complex width-squared after free evolution for time ``t``."""
    return complex(s0) + 1j * hbar * t / (2 * m)


def transit_time(L: float, k0: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """Time for the group velocity ``hbar k0 / m`` to cover length ``L``."""
    return L * m / (hbar * k0)


def precession_angle(Bx: float, params: ModelParams) -> float:
    """Spin rotation angle ``Bx t1 / hbar`` of the ideal process."""
    return Bx * params.t1 / params.hbar


@dataclass(frozen=True)
class GaussianPacket:
    center: float
    wavenumber: float
    width_sq: complex
    phase: float = 0.0
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "width_sq", complex(self.width_sq))
        if not self.width_sq.real > 0:
            raise DomainError(f"Re(width_sq) must be > 0 (got {self.width_sq!r})")

    @classmethod
    def initial(cls, center: float, wavenumber: float, sigma: float) -> "GaussianPacket":
        return cls(center, wavenumber, complex(sigma**2))

    @property
    def variance(self) -> float:
        """Variance of the position density."""
        s = self.width_sq
        return abs(s) ** 2 / s.real

    @property
    def norm_sq(self) -> float:
        return abs(self.amplitude) ** 2

    def normalized(self) -> "GaussianPacket":
        return replace(self, amplitude=1.0, phase=0.0)

    def evolve_free(self, t: float, m: float = 1.0, hbar: float = 1.0) -> "GaussianPacket":
        """Free evolution for time ``t`` (center moves at the group velocity)."""
        v = hbar * self.wavenumber / m
        # group motion at constant k contributes -hbar k^2 t / (2m) + k v t
        dphase = hbar * self.wavenumber**2 * t / (2 * m)
        return replace(
            self,
            center=self.center + v * t,
            width_sq=free_width(self.width_sq, t, m, hbar),
            phase=self.phase + dphase,
        )

    def prefactor(self) -> complex:
        s = self.width_sq
        return (
            self.amplitude
            * cmath.exp(1j * self.phase)
            * (2 * math.pi) ** -0.25
            * s.real**0.25
            / cmath.sqrt(s)
        )

    def __call__(self, z):
        """Evaluate the wavefunction on a scalar or numpy array."""
        import numpy as np

        dz = np.asarray(z) - self.center
        return self.prefactor() * np.exp(
            -dz**2 / (4 * self.width_sq) + 1j * self.wavenumber * dz
        )

    def density(self, z):
        import numpy as np

        return np.abs(self(z)) ** 2


@dataclass(frozen=True)
class SpinorPacket:
    """Transmitted spinor ``(c1 |up> psi_up + c2 |down> psi_down) x psi_x``.

    The amplitudes are not renormalised after discarding the reflected part,
    so ``|c1|^2 + |c2|^2`` is the transmitted probability.
    """

    up_coeff: complex
    down_coeff: complex
    z_packet_up: GaussianPacket
    z_packet_down: GaussianPacket
    x_packet: GaussianPacket
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        total = self.weight
        if total > 1 + 1e-12:
            raise DomainError(f"|c1|^2 + |c2|^2 = {total!r} exceeds 1")

    @property
    def weight(self) -> float:
        return abs(self.up_coeff) ** 2 + abs(self.down_coeff) ** 2


def half_line_mass(packet: GaussianPacket, side: str = "positive") -> float:
    """Probability of the packet on ``z > 0`` (``positive``) or ``z < 0``.

    Uses ``erfc`` directly on both sides so that neither tail loses
    relative accuracy to cancellation.
    """
    u = packet.center / math.sqrt(2 * packet.variance)
    if side == "positive":
        p = 0.5 * erfc(-u)
    elif side == "negative":
        p = 0.5 * erfc(u)
    else:
        raise DomainError(f"side must be 'positive' or 'negative' (got {side!r})")
    return packet.norm_sq * float(p)
