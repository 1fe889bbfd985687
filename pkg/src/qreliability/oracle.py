"""
Brute-force reference dynamics on a uniform grid.

Crank-Nicolson with the three-point Laplacian is unconditionally stable and
exactly unitary for a Hermitian grid Hamiltonian.  Because the step operator
is a function of the (time-independent) grid Hamiltonian, asymptotic
scattering probabilities do not depend on ``dt`` at all, only on ``dz``;
``dt`` controls how faithfully packets move in time.

There are no absorbing boundaries.  Domains are sized so nothing reaches
the walls before the run ends, and :func:`propagate` aborts if it does.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh, lapack

from .histories import HistoryFamily, MAX_DIMENSION
from .model import DomainError, GaussianPacket, ModelParams
from .scattering import channel_coefficients
from .sterngerlach import sg_entry_packet, linear_kick

__all__ = [
    "BoundaryContaminationError",
    "NotReadyError",
    "GridState",
    "PotentialSpec",
    "uniform_grid",
    "propagate",
    "transmitted_probability",
    "half_line_probability",
    "scattering_run",
    "oracle_transmission",
    "oracle_spin_transmission",
    "oracle_sg_populations",
    "sinc_dvr_kinetic",
    "discretize_pipeline",
]


class BoundaryContaminationError(RuntimeError):
    """The wavefunction reached the edge of the grid."""


class NotReadyError(RuntimeError):
    """Probability is still flowing across the measurement boundary."""


def uniform_grid(lo: float, hi: float, dz: float) -> np.ndarray:
    """Grid with spacing ``dz`` that contains ``0`` and covers ``[lo, hi]``."""
    if not (dz > 0 and hi > lo):
        raise DomainError("need dz > 0 and hi > lo")
    i_lo = math.floor(lo / dz)
    i_hi = math.ceil(hi / dz)
    return dz * np.arange(i_lo, i_hi + 1, dtype=float)


@dataclass
class GridState:
    """Samples of a (possibly multi-component) wavefunction on a uniform grid.

    ``values`` has shape ``(n,)`` or ``(components, n)``.
    """

    x: np.ndarray
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[-1] != self.x.size:
            raise DomainError("values and grid lengths differ")

    @property
    def dz(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def components(self) -> np.ndarray:
        return np.atleast_2d(self.values)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dz)

    def copy(self) -> "GridState":
        return GridState(self.x.copy(), self.values.copy(), self.time)

    @classmethod
    def from_packet(cls, packet: GaussianPacket, x) -> "GridState":
        return cls(np.asarray(x, dtype=float), packet(np.asarray(x, dtype=float)))

    def mean(self, component: int = 0) -> float:
        rho = np.abs(self.components[component]) ** 2
        return float(np.sum(self.x * rho) / np.sum(rho))

    def variance(self, component: int = 0) -> float:
        rho = np.abs(self.components[component]) ** 2
        mu = np.sum(self.x * rho) / np.sum(rho)
        return float(np.sum((self.x - mu) ** 2 * rho) / np.sum(rho))

    def mean_wavenumber(self, component: int = 0) -> float:
        psi = self.components[component]
        dpsi = np.gradient(psi, self.dz)
        return float(np.sum(np.conj(psi) * dpsi).imag / np.sum(np.abs(psi) ** 2))

    def to_csv(self, path, component: int = 0):
        """Write ``x, re, im, abs2`` rows for one component (debugging aid)."""
        psi = self.components[component]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im", "abs2"])
            for xi, v in zip(self.x, psi):
                w.writerow([format(float(c), ".17g") for c in (xi, v.real, v.imag, abs(v) ** 2)])


@dataclass(frozen=True)
class PotentialSpec:
    """``square_barrier``/``square_well`` of ``height`` on ``extent``,
    ``linear`` potential ``height * x``, or ``custom`` sampled values."""

    kind: str
    height: float = 0.0
    extent: tuple = (0.0, 0.0)
    samples: np.ndarray | None = field(default=None, compare=False)

    KINDS = ("square_barrier", "square_well", "linear", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def square(cls, V: float, lo: float, hi: float) -> "PotentialSpec":
        kind = "square_barrier" if V >= 0 else "square_well"
        return cls(kind, abs(V), (lo, hi))

    @classmethod
    def linear(cls, gradient: float) -> "PotentialSpec":
        return cls("linear", gradient)

    def check_extent(self, x: np.ndarray):
        if self.kind not in ("square_barrier", "square_well"):
            return
        lo, hi = self.extent
        margin = 0.1 * (x[-1] - x[0])
        if lo - x[0] < margin or x[-1] - hi < margin:
            raise DomainError("potential must sit inside the grid with a 10% margin")

    def sample(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "custom":
            v = np.asarray(self.samples, dtype=float)
            if v.shape != x.shape:
                raise DomainError("custom samples do not match the grid")
            return v
        if self.kind == "linear":
            return self.height * x
        sign = 1.0 if self.kind == "square_barrier" else -1.0
        lo, hi = self.extent
        v = np.where((x > lo) & (x < hi), sign * self.height, 0.0)
        # edges that fall on grid points get the mean of both sides
        dz = x[1] - x[0]
        v[np.abs(x - lo) < 1e-9 * dz] = sign * self.height / 2
        v[np.abs(x - hi) < 1e-9 * dz] = sign * self.height / 2
        return v


class _CrankNicolson:
    """Factored ``1 + i dt H / 2 hbar`` for a tridiagonal grid Hamiltonian.

    Each step solves only on the window where ``|psi|`` exceeds ``cutoff``
    times its peak (plus padding); amplitudes outside are set to zero.  The
    implicit solve otherwise smears exponentially small tails over the whole
    grid, and arithmetic on the resulting subnormal numbers is very slow.
    """

    BLOCK = 512
    PAD = 256

    def __init__(self, V: np.ndarray, dz: float, dt: float, m: float, hbar: float, cutoff: float = 1e-20):
        n = V.size
        kin = hbar**2 / (2 * m * dz**2)
        self.n = n
        self.cutoff = cutoff
        c = 0.5j * dt / hbar
        self.rhs_diag = 1 - c * (2 * kin + V)
        self.rhs_off = c * kin
        self.lhs_diag = 1 + c * (2 * kin + V)
        self.lhs_off = -c * kin
        self._lu = {}

    def _factor(self, lo: int, hi: int):
        key = (lo, hi)
        if key not in self._lu:
            off = np.full(hi - lo - 1, self.lhs_off, dtype=complex)
            dl, d, du, du2, ipiv, info = lapack.zgttrf(off, self.lhs_diag[lo:hi], off.copy())
            if info != 0:
                raise np.linalg.LinAlgError(f"zgttrf failed with info={info}")
            self._lu = {key: (dl, d, du, du2, ipiv)}
        return self._lu[key]

    def window(self, psi: np.ndarray) -> tuple[int, int]:
        """Index range to solve on; zeroes ``psi`` outside it."""
        mag = np.abs(psi)
        live = np.flatnonzero(mag > self.cutoff * mag.max())
        B = self.BLOCK
        lo = max(0, (live[0] - self.PAD) // B * B)
        hi = min(self.n, -(-(live[-1] + 1 + self.PAD) // B) * B)
        psi[:lo] = 0
        psi[hi:] = 0
        return lo, hi

    def step(self, psi: np.ndarray, lo: int, hi: int):
        """Advance ``psi`` in place on ``[lo, hi)``."""
        seg = psi[lo:hi]
        b = self.rhs_diag[lo:hi] * seg
        b[:-1] += self.rhs_off * seg[1:]
        b[1:] += self.rhs_off * seg[:-1]
        sol, info = lapack.zgttrs(*self._factor(lo, hi), b)
        psi[lo:hi] = sol


def propagate(
    initial: GridState,
    potential: PotentialSpec | Sequence[PotentialSpec],
    dt: float,
    steps: int,
    m: float = 1.0,
    hbar: float = 1.0,
    edge_tol: float = 1e-6,
) -> GridState:
    """Crank-Nicolson time stepping.

    ``potential`` may be a sequence with one entry per component for
    spin-diagonal couplings.  Raises :class:`BoundaryContaminationError` if
    ``|psi|`` at either edge exceeds ``edge_tol``.
    """
    if not dt > 0:
        raise DomainError(f"dt must be > 0 (got {dt!r})")
    if steps < 0:
        raise DomainError(f"steps must be >= 0 (got {steps!r})")
    comps = initial.components.copy()
    pots = [potential] * len(comps) if isinstance(potential, PotentialSpec) else list(potential)
    if len(pots) != len(comps):
        raise DomainError(f"{len(pots)} potentials for {len(comps)} components")
    x, dz = initial.x, initial.dz
    for i, pot in enumerate(pots):
        pot.check_extent(x)
        cn = _CrankNicolson(pot.sample(x), dz, dt, m, hbar)
        psi = comps[i]
        for s in range(steps):
            # the padding covers several steps of packet motion
            if s % 8 == 0:
                lo, hi = cn.window(psi)
            cn.step(psi, lo, hi)
            if abs(psi[0]) > edge_tol or abs(psi[-1]) > edge_tol:
                raise BoundaryContaminationError(
                    f"component {i}: |psi| at the grid edge exceeds {edge_tol:g} "
                    f"after {s + 1} steps (t={initial.time + (s + 1) * dt:.4g}); enlarge the domain"
                )
        comps[i] = psi
    values = comps if initial.values.ndim == 2 else comps[0]
    return GridState(x, values, initial.time + steps * dt)


def half_line_probability(
    state: GridState, boundary: float, side: str = "positive", component: int | None = None
) -> float:
    """Mass beyond ``boundary``; a grid point sitting on it counts half."""
    comps = state.components if component is None else state.components[[component]]
    rho = np.sum(np.abs(comps) ** 2, axis=0)
    dz = state.dz
    on = np.abs(state.x - boundary) < 1e-9 * dz
    beyond = state.x > boundary if side == "positive" else state.x < boundary
    return float((np.sum(rho[beyond & ~on]) + 0.5 * np.sum(rho[on])) * dz)


def transmitted_probability(state: GridState, boundary: float, ready_tol: float = 1e-6) -> float:
    """Mass at ``x > boundary`` once the packet has cleared it."""
    rho = np.sum(np.abs(state.components) ** 2, axis=0)
    i = int(np.argmin(np.abs(state.x - boundary)))
    if rho[i] > ready_tol:
        raise NotReadyError(
            f"density {rho[i]:.3g} at x={state.x[i]:.4g} exceeds {ready_tol:g}; propagate longer"
        )
    return half_line_probability(state, boundary, "positive")


# ---------------------------------------------------------------------------
# reference runs for the pipeline stages


def _scattering_defaults(params: ModelParams, t_end: float | None, n_std: float = 7.0):
    if t_end is None:
        t_end = 12 * (params.a - params.x0) * params.m / (params.hbar * params.k0)
    k_hi = params.k0 + n_std / (2 * params.sigma)
    reach = params.hbar * k_hi * t_end / params.m
    lo = min(params.x0, -params.x0 - reach) - 10 * params.sigma
    hi = params.x0 + reach + 10 * params.sigma
    return t_end, lo, hi


def scattering_run(
    params: ModelParams,
    channel: str,
    dz: float = 0.02,
    dt: float = 0.01,
    t_end: float | None = None,
) -> GridState:
    """Propagate ``psi_x0 / sqrt(2)`` through one channel's potential."""
    t_end, lo, hi = _scattering_defaults(params, t_end)
    x = uniform_grid(lo, hi, dz)
    packet = GaussianPacket(params.x0, params.k0, params.sigma**2, amplitude=1 / math.sqrt(2))
    sign = 1.0 if channel == "plus" else -1.0
    if channel not in ("plus", "minus"):
        raise DomainError(f"channel must be 'plus' or 'minus' (got {channel!r})")
    pot = PotentialSpec.square(sign * params.Bx, 0.0, params.a)
    steps = int(math.ceil(t_end / dt))
    return propagate(GridState.from_packet(packet, x), pot, dt, steps, params.m, params.hbar)


def oracle_transmission(params: ModelParams, channel: str, **kw) -> float:
    """Grid estimate of one channel's transmitted probability."""
    state = scattering_run(params, channel, **kw)
    return 2 * transmitted_probability(state, params.a)


def oracle_spin_transmission(params: ModelParams, **kw) -> tuple[float, float]:
    """Transmitted spin-up and spin-down probabilities for ``|up>`` input.

    The channels are independent scalar problems; the spin components are
    recombined as ``(psi_+ +- psi_-) / sqrt(2)`` afterwards.
    """
    plus = scattering_run(params, "plus", **kw)
    minus = scattering_run(params, "minus", **kw)
    up = GridState(plus.x, (plus.values + minus.values) / math.sqrt(2), plus.time)
    down = GridState(plus.x, (plus.values - minus.values) / math.sqrt(2), plus.time)
    return transmitted_probability(up, params.a), transmitted_probability(down, params.a)


def oracle_sg_populations(
    params: ModelParams,
    c1: complex,
    c2: complex,
    dz: float = 0.02,
    dt: float | None = None,
    n_std: float = 12.0,
):
    """Half-plane populations from grid propagation of the z packets.

    The ``sigma``-wide packet first spreads freely for ``t1`` and then feels
    ``-f z`` (spin up) or ``+f z`` (spin down) for ``t2``.  ``dt`` defaults
    to ``dz^2 m / hbar``.  Returns ``(alpha, beta, state)`` where ``state``
    holds the two unit-norm spin components.
    """
    dt = dz**2 * params.m / params.hbar if dt is None else dt
    final = linear_kick(sg_entry_packet(params), params.f, params.t2, params.m, params.hbar)
    L = final.center + n_std * math.sqrt(final.variance)
    x = uniform_grid(-L, L, dz)
    z0 = GaussianPacket.initial(0.0, 0.0, params.sigma)
    start = GridState(x, np.vstack([z0(x), z0(x)]))
    free = PotentialSpec("custom", samples=np.zeros_like(x))
    s1 = propagate(start, free, dt, int(round(params.t1 / dt)), params.m, params.hbar)
    s2 = propagate(
        s1,
        [PotentialSpec.linear(-params.f), PotentialSpec.linear(params.f)],
        dt,
        int(round(params.t2 / dt)),
        params.m,
        params.hbar,
    )
    w1, w2 = abs(c1) ** 2, abs(c2) ** 2
    pu = half_line_probability(s2, 0.0, "positive", 0)
    pd = half_line_probability(s2, 0.0, "positive", 1)
    nu = half_line_probability(s2, 0.0, "negative", 0)
    nd = half_line_probability(s2, 0.0, "negative", 1)
    return w1 * pu + w2 * pd, w1 * nu + w2 * nd, s2


# ---------------------------------------------------------------------------
# finite-dimensional surrogate for the histories engine


def sinc_dvr_kinetic(n: int, dz: float, m: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """Kinetic energy matrix of the uniform-grid sinc DVR."""
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        T = 2.0 * (-1.0) ** d / d.astype(float) ** 2
    np.fill_diagonal(T, math.pi**2 / 3)
    return hbar**2 / (2 * m * dz**2) * T


def _expm_hermitian(H: np.ndarray, t: float, hbar: float) -> np.ndarray:
    w, v = eigh(H)
    return (v * np.exp(-1j * w * t / hbar)) @ v.conj().T


def discretize_pipeline(params: ModelParams, n: int = 512, n_std: float = 10.0):
    """Reliability family of the sensing process on ``flag x spin x z``.

    Because x and z separate, x is coarse-grained to a two-state flag: not
    transmitted (``x < a``) or transmitted (``x > a``, and later ``x > b``).
    ``U1`` applies each channel's 2x2 scattering matrix at ``k0`` to the flag
    together with free z spreading; ``U2`` is the spin-dependent linear
    potential on an ``n``-point sinc-DVR z grid.  Reflected amplitude never
    re-enters, so multiple reflections are truncated by construction.

    Returns ``(family, info)``; ``info`` holds the grid and the projectors.
    """
    if n > 2048:
        raise DomainError(f"n={n} exceeds the 2048-point cap")
    if n % 2:
        raise DomainError("n must be even so that z = 0 falls between grid points")
    dim = 4 * n
    if dim > MAX_DIMENSION:
        raise DomainError(f"dimension {dim} exceeds the cap of {MAX_DIMENSION}")
    m, hbar, f = params.m, params.hbar, params.f
    entry = sg_entry_packet(params)
    final = linear_kick(entry, f, params.t2, m, hbar)
    L = max(final.center + n_std * math.sqrt(final.variance), n_std * math.sqrt(entry.variance))
    dz = 2 * L / n
    z = (np.arange(n) - (n - 1) / 2) * dz
    k_needed = f * params.t2 / hbar + n_std / (2 * params.sigma)
    if k_needed > math.pi / dz:
        raise DomainError(
            f"grid too coarse: needs wavenumbers up to {k_needed:.3g} but resolves {math.pi / dz:.3g}"
        )

    T = sinc_dvr_kinetic(n, dz, m, hbar)
    u_free = _expm_hermitian(T, params.t1, hbar)
    u_up = _expm_hermitian(T - f * np.diag(z), params.t2, hbar)
    u_down = _expm_hermitian(T + f * np.diag(z), params.t2, hbar)

    # flag (0: x < a, 1: transmitted) x spin (0: up, 1: down)
    s_matrix = np.zeros((4, 4), dtype=complex)
    for channel, w in (("plus", np.array([1, 1]) / math.sqrt(2)), ("minus", np.array([1, -1]) / math.sqrt(2))):
        c = channel_coefficients(params, channel)
        S_c = np.array([[c.R, -np.conj(c.T)], [c.T, np.conj(c.R)]])
        s_matrix += np.kron(S_c, np.outer(w, w))
    U1 = np.kron(s_matrix, u_free)
    U2 = np.kron(np.eye(2), np.kron(np.diag([1, 0]), u_up) + np.kron(np.diag([0, 1]), u_down))

    through = np.diag([0.0, 1.0])
    E1 = np.kron(through, np.eye(2 * n))
    up_side = np.concatenate([(z > 0), (z < 0)]).astype(float)
    E2 = np.kron(through, np.diag(up_side))

    z0 = GaussianPacket.initial(0.0, 0.0, params.sigma)(z) * math.sqrt(dz)
    z0 /= np.linalg.norm(z0)
    psi0 = np.kron(np.array([1.0, 0.0, 0.0, 0.0]), z0).astype(complex)

    fam = HistoryFamily.reliability_family(psi0, [U1, U2], [E1, E2], validate=False)
    info = {"z": z, "dz": dz, "E1": E1, "E2": E2, "U1": U1, "U2": U2, "psi0": psi0}
    return fam, info
