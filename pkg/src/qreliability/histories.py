"""
Finite-dimensional consistent histories.

A history is an initial density operator, a schedule of unitaries
``U_1..U_n`` and one projector per time slot.  Its chain operator is
``C = Y_n U_n ... Y_1 U_1`` and two histories on the same schedule have
decoherence functional ``D(a, b) = Tr[C_a rho C_b^dagger]``; ``D(a, a)`` is
the weight.  The reliability family consists of the failure histories
``F_k = E_1 ... E_{k-1} E_k^perp I ... I`` and the survival history
``R_n = E_1 ... E_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DomainError

__all__ = [
    "MAX_DIMENSION",
    "History",
    "HistoryFamily",
    "ConsistencyReport",
    "SurvivalResult",
    "InconsistentFamilyError",
    "chain_operator",
    "history_weight",
    "history_inner_product",
    "check_consistency",
    "survival_and_lifetime",
    "as_density",
]

MAX_DIMENSION = 4096
_ATOL = 1e-12


class InconsistentFamilyError(RuntimeError):
    """Weights of an inconsistent family are not probabilities."""


def as_density(state) -> np.ndarray:
    """Density matrix from a ket or pass a square matrix through."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def _is_diagonal(op: np.ndarray) -> bool:
    return np.count_nonzero(op - np.diag(np.diagonal(op))) == 0


def _left_apply(op: np.ndarray, mat: np.ndarray) -> np.ndarray:
    if _is_diagonal(op):
        return np.diagonal(op)[:, None] * mat
    return op @ mat


def _check_projector(P: np.ndarray, tol=_ATOL):
    if _is_diagonal(P):
        d = np.diagonal(P)
        ok = np.allclose(d * d, d, atol=tol) and np.allclose(d.imag, 0, atol=tol)
    else:
        ok = np.allclose(P @ P, P, atol=tol) and np.allclose(P, P.conj().T, atol=tol)
    if not ok:
        raise DomainError("projector must satisfy P^2 = P = P^dagger")


def _check_unitary(U: np.ndarray, tol=_ATOL):
    if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=tol):
        raise DomainError("unitary must satisfy U^dagger U = I")


@dataclass(eq=False)
class History:
    initial_state: np.ndarray
    projectors: list
    unitaries: list
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.initial_state = as_density(self.initial_state)
        self.projectors = [np.asarray(p, dtype=complex) for p in self.projectors]
        self.unitaries = [np.asarray(u, dtype=complex) for u in self.unitaries]
        d = self.initial_state.shape[0]
        if d > MAX_DIMENSION:
            raise DomainError(f"dimension {d} exceeds the cap of {MAX_DIMENSION}")
        if self.initial_state.shape != (d, d):
            raise DomainError("initial state must be a square density matrix")
        if len(self.projectors) != len(self.unitaries):
            raise DomainError(
                f"{len(self.projectors)} projectors for {len(self.unitaries)} unitaries"
            )
        for op in (*self.projectors, *self.unitaries):
            if op.shape != (d, d):
                raise DomainError(f"operator of shape {op.shape} on a {d}-dimensional space")
        if self.validate:
            for P in self.projectors:
                _check_projector(P)
            for U in self.unitaries:
                _check_unitary(U)

    @property
    def dimension(self) -> int:
        return self.initial_state.shape[0]

    def __len__(self):
        return len(self.projectors)


def chain_operator(h: History) -> np.ndarray:
    """``Y_n U_n ... Y_1 U_1`` as a dense matrix."""
    C = None
    for P, U in zip(h.projectors, h.unitaries):
        C = _left_apply(P, U if C is None else U @ C)
    if C is None:
        return np.eye(h.dimension, dtype=complex)
    return C


def history_weight(h: History) -> float:
    """Weight from the nested trace, without forming the chain operator."""
    rho = h.initial_state
    for P, U in zip(h.projectors, h.unitaries):
        rho = U @ rho @ U.conj().T
        rho = P @ rho @ P
    return float(np.trace(rho).real)


def _same_schedule(h1: History, h2: History) -> bool:
    if h1 is h2:
        return True
    if len(h1) != len(h2) or h1.dimension != h2.dimension:
        return False
    if not np.array_equal(h1.initial_state, h2.initial_state):
        return False
    return all(u1 is u2 or np.array_equal(u1, u2) for u1, u2 in zip(h1.unitaries, h2.unitaries))


def history_inner_product(h1: History, h2: History, _chains=None) -> complex:
    """``Tr[C_1 rho C_2^dagger]`` for histories on a common schedule."""
    if not _same_schedule(h1, h2):
        raise DomainError("histories must share the initial state and unitary schedule")
    C1, C2 = _chains if _chains is not None else (chain_operator(h1), chain_operator(h2))
    return complex(np.vdot(C2, C1 @ h1.initial_state))


@dataclass(eq=False)
class HistoryFamily:
    histories: list
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = [f"Y{i}" for i in range(len(self.histories))]
        first = self.histories[0]
        for h in self.histories[1:]:
            if not _same_schedule(first, h):
                raise DomainError("all histories in a family must share one schedule")

    @classmethod
    def reliability_family(
        cls, initial_state, unitaries: Sequence, reliable: Sequence, validate: bool = True
    ) -> "HistoryFamily":
        """Failure histories ``F_1..F_n`` followed by the survival history."""
        rho = as_density(initial_state)
        unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
        reliable = [np.asarray(e, dtype=complex) for e in reliable]
        d = rho.shape[0]
        if validate:
            for E in reliable:
                _check_projector(E)
            for U in unitaries:
                _check_unitary(U)
        identity = np.eye(d, dtype=complex)
        failures = [identity - E for E in reliable]
        n = len(reliable)
        histories, labels = [], []
        for k in range(n):
            slots = reliable[:k] + [failures[k]] + [identity] * (n - k - 1)
            histories.append(History(rho, slots, unitaries, validate=False))
            labels.append(f"F{k + 1}")
        histories.append(History(rho, list(reliable), unitaries, validate=False))
        labels.append(f"R{n}")
        fam = cls(histories, labels)
        fam.reliable = reliable
        return fam

    def __len__(self):
        return len(self.histories)

    def __iter__(self):
        return iter(self.histories)


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_violation: float
    weights: tuple = ()


@dataclass(frozen=True)
class SurvivalResult:
    R_of_t: list
    lifetime_pmf: list


def _gram(fam: HistoryFamily) -> np.ndarray:
    chains = [chain_operator(h) for h in fam]
    rho = fam.histories[0].initial_state
    left = [C @ rho for C in chains]
    n = len(chains)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = np.vdot(chains[j], left[i])
    return G


def check_consistency(fam: HistoryFamily, tol: float = 1e-8) -> ConsistencyReport:
    """Largest off-diagonal ``|<Y_a, Y_b>|`` compared with ``tol``."""
    if not tol > 0:
        raise DomainError(f"tol must be > 0 (got {tol!r})")
    G = _gram(fam)
    off = np.abs(G - np.diag(np.diagonal(G)))
    worst = float(off.max()) if len(fam) > 1 else 0.0
    return ConsistencyReport(worst <= tol, worst, tuple(np.diagonal(G).real))


def survival_and_lifetime(fam: HistoryFamily, tol: float = 1e-8) -> SurvivalResult:
    """Survival probability ``R(t_k)`` and lifetime distribution ``W(F_k)``.

    ``fam`` must come from :meth:`HistoryFamily.reliability_family`.  The
    survival curve at intermediate times uses the truncated families
    ``{F_1..F_k, R_k}``, each of which is checked for consistency.
    """
    report = check_consistency(fam, tol)
    if not report.consistent:
        raise InconsistentFamilyError(
            f"family violates consistency by {report.max_violation:.3g} > {tol:g}"
        )
    weights = report.weights
    n = len(fam) - 1
    lifetime = [float(w) for w in weights[:n]]
    rho = fam.histories[0].initial_state
    unitaries = fam.histories[0].unitaries
    reliable = getattr(fam, "reliable", None)
    if reliable is None:
        raise DomainError("family was not built by reliability_family")
    survival = []
    for k in range(1, n):
        h = History(rho, reliable[:k], unitaries[:k], validate=False)
        survival.append(history_weight(h))
    survival.append(float(weights[n]))
    return SurvivalResult(survival, lifetime)
