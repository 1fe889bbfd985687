"""
Spin-1/2 packet scattering on the square field region ``0 < x < a``.

In the sigma_x eigenbasis ``|+->`` the field acts as a scalar potential
``+Bx`` (barrier, channel ``plus``) or ``-Bx`` (well, channel ``minus``), so
each channel is an ordinary square-potential problem.  Multiple internal
reflections are not resolved as separate events; the closed forms below
already sum them.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import (
    DomainError,
    GaussianPacket,
    ModelParams,
    NumericError,
    SpinorPacket,
    precession_angle,
)

__all__ = [
    "ScatteringCoefficients",
    "IdealReading",
    "barrier_coefficients",
    "channel_coefficients",
    "ideal_populations",
    "invert_reading",
    "scatter_spinor",
    "momentum_averaged_transmission",
    "momentum_averaged_spin_transmission",
    "scattering_state",
    "TAYLOR_THRESHOLD",
]

# below this |q a| the closed form is replaced by its expansion in (q a)^2
TAYLOR_THRESHOLD = 1e-4

CHANNEL_SIGN = {"plus": 1.0, "minus": -1.0}


@dataclass(frozen=True)
class ScatteringCoefficients:
    T: complex
    R: complex
    M1: complex
    M2: complex
    q: complex
    channel: str
    k: float = math.nan

    @property
    def transmission(self) -> float:
        return abs(self.T) ** 2

    @property
    def reflection(self) -> float:
        return abs(self.R) ** 2


@dataclass(frozen=True)
class IdealReading:
    alpha: float
    beta: float


def _wavenumber_inside(k: float, V: float, m: float, hbar: float) -> complex:
    q = cmath.sqrt(complex(k * k - 2 * m * V / hbar**2))
    # principal sqrt already gives Im(q) >= 0; keep it explicit for -0.0 imag parts
    if q.imag < 0:
        q = -q
    return q


def barrier_coefficients(
    k0: float, V: float, a: float, m: float = 1.0, hbar: float = 1.0
) -> ScatteringCoefficients:
    """T, R and interior amplitudes for a plane wave ``e^{i k0 x}`` on a
    square potential of height ``V`` (negative for a well) on ``[0, a]``.

    Amplitudes are referenced as ``T e^{ikx}`` for ``x > a``,
    ``e^{ikx} + R e^{-ikx}`` for ``x < 0`` and
    ``M1 e^{iqx} + M2 e^{-iqx}`` inside.
    """
    if not k0 > 0:
        raise DomainError(f"k0 must be > 0 (got {k0!r})")
    if not a > 0:
        raise DomainError(f"a must be > 0 (got {a!r})")
    k = float(k0)
    channel = "plus" if V >= 0 else "minus"
    q = _wavenumber_inside(k, V, m, hbar)
    qa = q * a
    if abs(qa) < TAYLOR_THRESHOLD:
        u2 = qa * qa
        cos_qa = 1 - u2 / 2
        sinc_qa = 1 - u2 / 6
        T = cmath.exp(-1j * k * a) / (cos_qa - 1j * (k * k + q * q) * a / (2 * k) * sinc_qa)
        R = -1j * T * cmath.exp(1j * k * a) * (k * k - q * q) * a * sinc_qa / (2 * k)
    else:
        e2 = cmath.exp(2j * qa)
        den = (k + q) ** 2 - (k - q) ** 2 * e2
        T = 4 * k * q * cmath.exp(1j * (q - k) * a) / den
        R = (k * k - q * q) * (1 - e2) / den
    if q != 0:
        e2 = cmath.exp(2j * qa)
        den = (k + q) ** 2 - (k - q) ** 2 * e2
        M1 = 2 * k * (k + q) / den
        M2 = -2 * k * (k - q) * e2 / den
    else:
        M1 = M2 = complex(math.inf, math.inf)
    return ScatteringCoefficients(T, R, M1, M2, q, channel, k)


def channel_coefficients(params: ModelParams, channel: str, k: float | None = None):
    """Coefficients of the ``plus`` (V = +Bx) or ``minus`` (V = -Bx) channel."""
    try:
        sign = CHANNEL_SIGN[channel]
    except KeyError:
        raise DomainError(f"channel must be 'plus' or 'minus' (got {channel!r})") from None
    k = params.k0 if k is None else k
    c = barrier_coefficients(k, sign * params.Bx, params.a, params.m, params.hbar)
    if c.channel != channel:
        # Bx = 0: both channels are the same free problem
        c = ScatteringCoefficients(c.T, c.R, c.M1, c.M2, c.q, channel, c.k)
    return c


def ideal_populations(Bx: float, params: ModelParams) -> IdealReading:
    """Spin populations after pure precession ``exp(-i Bx sigma_x t1 / hbar)``."""
    if Bx < 0:
        raise DomainError(f"Bx must be >= 0 (got {Bx!r})")
    theta = precession_angle(Bx, params)
    return IdealReading(math.cos(theta) ** 2, math.sin(theta) ** 2)


def invert_reading(alpha: float, beta: float, params: ModelParams) -> float:
    """Field inferred from a population pair by inverting the ideal process.

    Only the ratio ``beta / alpha`` enters, so sub-normalised readings give
    the same answer as renormalised ones.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0; reading saturated (alpha={alpha!r})")
    if beta < 0:
        raise DomainError(f"beta must be >= 0 (got {beta!r})")
    return math.atan(math.sqrt(beta / alpha)) * params.hbar / params.t1


def scatter_spinor(params: ModelParams) -> SpinorPacket:
    """Transmitted part of ``|up> psi_x0 psi_z0`` after the field region."""
    tp = channel_coefficients(params, "plus").T
    tm = channel_coefficients(params, "minus").T
    z0 = GaussianPacket.initial(0.0, 0.0, params.sigma)
    z1 = z0.evolve_free(params.t1, params.m, params.hbar)
    x1 = GaussianPacket.initial(params.x0, params.k0, params.sigma).evolve_free(
        params.t1, params.m, params.hbar
    )
    return SpinorPacket(
        up_coeff=(tp + tm) / 2,
        down_coeff=(tp - tm) / 2,
        z_packet_up=z1,
        z_packet_down=z1,
        x_packet=x1,
        extra={"T_plus": tp, "T_minus": tm},
    )


def momentum_density(k, params: ModelParams):
    """``|phi(k)|^2`` of the initial x packet."""
    s = params.sigma
    return math.sqrt(2 / math.pi) * s * np.exp(-2 * s**2 * (np.asarray(k) - params.k0) ** 2)


def momentum_averaged_transmission(
    params: ModelParams, channel: str, tol: float = 1e-12
) -> float:
    """Transmitted probability of the finite-width packet in one channel.

    Integrates ``|phi(k)|^2 |T_k|^2`` over ``k0 +- 8 / (2 sigma)``;
    components with ``k <= 0`` move away from the field and never transmit.
    """
    sign = CHANNEL_SIGN.get(channel)
    if sign is None:
        raise DomainError(f"channel must be 'plus' or 'minus' (got {channel!r})")
    V = sign * params.Bx
    half = 8 / (2 * params.sigma)
    lo = max(params.k0 - half, 0.0)
    hi = params.k0 + half

    def integrand(k):
        if k <= 0:
            return 0.0
        c = barrier_coefficients(k, V, params.a, params.m, params.hbar)
        return momentum_density(k, params) * abs(c.T) ** 2

    breaks = []
    if V > 0:
        kc = math.sqrt(2 * params.m * V) / params.hbar
        if lo < kc < hi:
            breaks.append(kc)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                integrand, lo, hi, points=breaks or None, limit=500,
                epsabs=tol, epsrel=tol,
            )
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"transmission quadrature did not converge: {exc}") from exc
    if err > 1e3 * tol:
        raise NumericError(f"transmission quadrature residual {err:.3g} exceeds tolerance")
    return val


def momentum_averaged_spin_transmission(params: ModelParams, tol: float = 1e-12) -> tuple[float, float]:
    """Transmitted spin-up and spin-down probabilities of the finite packet.

    Averages ``|T+ +- T-|^2 / 4`` over the momentum distribution.  Unlike the
    plane-wave ``|c1|^2, |c2|^2`` this accounts for the spread of precession
    angles across momentum components, which matters when ``sigma`` is small.
    """
    half = 8 / (2 * params.sigma)
    lo = max(params.k0 - half, 0.0)
    hi = params.k0 + half
    kc = math.sqrt(2 * params.m * params.Bx) / params.hbar
    breaks = [kc] if lo < kc < hi else None

    def amplitude(k, sign):
        if k <= 0:
            return 0.0
        tp = barrier_coefficients(k, params.Bx, params.a, params.m, params.hbar).T
        tm = barrier_coefficients(k, -params.Bx, params.a, params.m, params.hbar).T
        return momentum_density(k, params) * abs(tp + sign * tm) ** 2 / 4

    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for sign in (1, -1):
            try:
                val, err = integrate.quad(
                    amplitude, lo, hi, args=(sign,), points=breaks, limit=500, epsabs=tol, epsrel=tol
                )
            except integrate.IntegrationWarning as exc:
                raise NumericError(f"spin transmission quadrature did not converge: {exc}") from exc
            out.append(val)
    return out[0], out[1]


def _sinc(u: np.ndarray) -> np.ndarray:
    """``sin(u) / u`` for complex ``u``, with the series near 0."""
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    return np.where(small, 1 - u * u / 6, np.sin(safe) / safe)


def scattering_state(k: float, params: ModelParams, channel: str):
    """Stationary scattering state for incident ``e^{ikx}`` in one channel.

    Returns a vectorised callable of ``x``.  Inside the field region it uses
    ``(1 + R) cos(qx) + i k (1 - R) x sinc(qx)``, which equals
    ``M1 e^{iqx} + M2 e^{-iqx}`` and stays finite as ``q -> 0``.
    """
    if not k > 0:
        raise DomainError(f"k must be > 0 (got {k!r})")
    c = channel_coefficients(params, channel, k=k)
    a, q, T, R = params.a, c.q, c.T, c.R

    def phi(x):
        x = np.asarray(x, dtype=float)
        qx = np.asarray(q * x, dtype=complex)
        inside = (1 + R) * np.cos(qx) + 1j * k * (1 - R) * x * _sinc(qx)
        return np.where(
            x < 0,
            np.exp(1j * k * x) + R * np.exp(-1j * k * x),
            np.where(x > a, T * np.exp(1j * k * x), inside),
        )

    phi.coefficients = c
    return phi
