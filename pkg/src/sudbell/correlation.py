"""Classically correlated observable, bipartite states and correlation functions."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .sud_algebra import (
    GeneratorSet,
    ParameterVector,
    StructureConstants,
    adjoint_matrix_exp,
    build_generators,
    diagonal_projector_coeffs,
    unitary_from_params,
)

__all__ = [
    "CorrelationMatrix",
    "BipartiteState",
    "MeasurementConfig",
    "correlation_matrix",
    "correlation_weights",
    "correlation_observable",
    "observable_from_w_basis",
    "transformed_mu_tilde",
    "joint_probabilities",
    "joint_probabilities_from_unitaries",
    "correlation_value",
]


def correlation_weights(d: int, exact: bool = False):
    """``mu_ij = 1 - 2 ((i - j) mod d) / (d - 1)``, with the nonnegative residue.

    With ``exact=True`` a nested list of :class:`fractions.Fraction` is returned.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    d = int(d)
    if exact:
        return [[1 - Fraction(2 * ((i - j) % d), d - 1) for j in range(d)] for i in range(d)]
    i = np.arange(d)
    return 1.0 - 2.0 * ((i[:, None] - i[None, :]) % d) / (d - 1)


def _projector_coefficient_matrix(d: int) -> np.ndarray:
    """Row ``i`` holds the W coefficients of ``|i+1><i+1|``."""
    return np.array([diagonal_projector_coeffs(j, d)[1] for j in range(1, d + 1)])


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    d: int
    mu: np.ndarray
    mu_tilde: np.ndarray

    def padded_mu_tilde(self, gens: GeneratorSet) -> np.ndarray:
        """``mu_tilde`` embedded in the full ``(d**2-1)``-square generator index range."""
        out = np.zeros((gens.n, gens.n))
        w = gens.subset("W")
        out[np.ix_(w, w)] = self.mu_tilde
        return out


def correlation_matrix(d: int) -> CorrelationMatrix:
    mu = correlation_weights(d)
    # P_i = I/d + sum_l C[i, l] w_l; the identity parts drop out because
    # every row and column of mu sums to zero.
    C = _projector_coefficient_matrix(int(d))
    mu_tilde = C.T @ mu @ C
    return CorrelationMatrix(int(d), mu, mu_tilde)


def correlation_observable(mu: CorrelationMatrix) -> np.ndarray:
    """``E = sum_ij mu_ij |i><i| (x) |j><j|`` as a ``d**2``-square matrix."""
    return np.diag(mu.mu.reshape(-1)).astype(complex)


def observable_from_w_basis(mu: CorrelationMatrix, gens: Optional[GeneratorSet] = None) -> np.ndarray:
    """Assemble ``sum_kl mu_tilde_kl w_k (x) w_l``."""
    gens = gens if gens is not None else build_generators(mu.d)
    W = gens.generators[gens.subset("W")]
    return np.einsum("kl,kab,lcd->acbd", mu.mu_tilde, W, W).reshape(mu.d ** 2, mu.d ** 2)


def transformed_mu_tilde(mu: CorrelationMatrix, p, q, f: StructureConstants,
                         gens: Optional[GeneratorSet] = None) -> np.ndarray:
    """Generator-basis coefficients of ``U(p) (x) U(q) E U(p)^dag (x) U(q)^dag``.

    With ``U^dag s_j U = sum_k T_jk s_k`` the coefficient matrix is
    ``T(p) mu_tilde T(q)^T`` over the full generator index range.
    """
    gens = gens if gens is not None else build_generators(mu.d)
    Tp = adjoint_matrix_exp(p, f)
    Tq = adjoint_matrix_exp(q, f)
    return Tp @ mu.padded_mu_tilde(gens) @ Tq.T


class BipartiteState:
    """A state on ``C^d (x) C^d``, either pure or mixed.

    Pure states are stored as the ``d x d`` amplitude matrix ``psi[i, j]`` of
    ``sum_ij psi_ij |i>|j>``; mixed states as the ``d**2``-square density
    operator.  The density operator of a pure state is built on first use.
    """

    def __init__(self, d: int, psi: Optional[np.ndarray] = None, rho: Optional[np.ndarray] = None,
                 atol: float = 1e-10):
        if (psi is None) == (rho is None):
            raise ValueError("give exactly one of psi or rho")
        self.d = int(d)
        self._psi = None
        self._rho = None
        if psi is not None:
            psi = np.asarray(psi, dtype=complex)
            if psi.shape == (d * d,):
                psi = psi.reshape(d, d)
            if psi.shape != (d, d):
                raise ValueError(f"amplitude matrix must be {d}x{d}, got {psi.shape}")
            if abs(np.linalg.norm(psi) - 1.0) > atol:
                raise ValueError(f"pure state is not normalized (norm {np.linalg.norm(psi)})")
            self._psi = psi
        else:
            rho = np.asarray(rho, dtype=complex)
            if rho.shape != (d * d, d * d):
                raise ValueError(f"density operator must be {d*d}x{d*d}, got {rho.shape}")
            if np.max(np.abs(rho - rho.conj().T)) > atol:
                raise ValueError("density operator is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > atol:
                raise ValueError(f"density operator has trace {np.trace(rho).real}")
            if np.linalg.eigvalsh(rho).min() < -atol:
                raise ValueError("density operator is not positive semidefinite")
            self._rho = rho

    @classmethod
    def pure(cls, psi, d: Optional[int] = None) -> "BipartiteState":
        psi = np.asarray(psi)
        if d is None:
            d = psi.shape[0] if psi.ndim == 2 else int(round(np.sqrt(psi.size)))
        return cls(d, psi=psi)

    @classmethod
    def mixed(cls, rho) -> "BipartiteState":
        rho = np.asarray(rho)
        return cls(int(round(np.sqrt(rho.shape[0]))), rho=rho)

    @classmethod
    def maximally_entangled(cls, d: int) -> "BipartiteState":
        return cls(d, psi=np.eye(d) / np.sqrt(d))

    @classmethod
    def product(cls, a, b) -> "BipartiteState":
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(len(a), psi=np.outer(a / np.linalg.norm(a), b / np.linalg.norm(b)))

    @property
    def is_pure(self) -> bool:
        return self._psi is not None

    @property
    def psi(self) -> np.ndarray:
        if self._psi is None:
            raise AttributeError("mixed state has no amplitude matrix")
        return self._psi

    @property
    def rho(self) -> np.ndarray:
        if self._rho is None:
            v = self._psi.reshape(-1)
            self._rho = np.outer(v, v.conj())
        return self._rho

    def swapped(self) -> "BipartiteState":
        """The same state with the two subsystems exchanged."""
        if self.is_pure:
            return BipartiteState(self.d, psi=self._psi.T)
        d = self.d
        r = self._rho.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)
        return BipartiteState(d, rho=r)

    def reduced(self, side: int = 0) -> np.ndarray:
        d = self.d
        if self.is_pure:
            return self._psi @ self._psi.conj().T if side == 0 else self._psi.T @ self._psi.conj()
        r = self._rho.reshape(d, d, d, d)
        return np.einsum("ajbj->ab", r) if side == 0 else np.einsum("jajb->ab", r)

    def __repr__(self):
        kind = "pure" if self.is_pure else "mixed"
        return f"BipartiteState(d={self.d}, {kind})"


@dataclass(frozen=True)
class MeasurementConfig:
    """Parameter vectors of the four local settings ``A1, A2, B1, B2``."""

    A1: ParameterVector
    A2: ParameterVector
    B1: ParameterVector
    B2: ParameterVector

    LABELS = ("A1", "A2", "B1", "B2")

    def __post_init__(self):
        vecs = [self.A1, self.A2, self.B1, self.B2]
        if len({(v.d, v.mode) for v in vecs}) != 1:
            raise ValueError("all four parameter vectors must share d and mode")

    @property
    def d(self) -> int:
        return self.A1.d

    @property
    def mode(self) -> str:
        return self.A1.mode

    def __getitem__(self, label: str) -> ParameterVector:
        return getattr(self, label)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self[l].values for l in self.LABELS])

    @classmethod
    def from_vector(cls, x, d: int, mode: str = "reduced") -> "MeasurementConfig":
        x = np.asarray(x, dtype=float)
        parts = np.split(x, 4)
        return cls(*(ParameterVector(d, p, mode) for p in parts))

    def to_dict(self) -> dict:
        return {"d": self.d, "mode": self.mode, **{l: self[l].values.tolist() for l in self.LABELS}}


def joint_probabilities_from_unitaries(state: BipartiteState, U, V) -> np.ndarray:
    """``P_ij = <i|U^dag (x) <j|V^dag rho U|i> (x) V|j>``.

    ``U`` and ``V`` may carry a leading batch axis (broadcast together).
    """
    if state.is_pure:
        amp = np.swapaxes(np.conj(U), -1, -2) @ state.psi @ np.conj(V)
        return np.abs(amp) ** 2
    d = state.d
    r = state.rho.reshape(d, d, d, d)
    P = np.einsum("...ai,...bj,abce,...ci,...ej->...ij", np.conj(U), np.conj(V), r, U, V, optimize=True)
    return P.real


def _unitary(p, gens: GeneratorSet) -> np.ndarray:
    return unitary_from_params(p, gens)


def joint_probabilities(state: BipartiteState, p, q, gens: Optional[GeneratorSet] = None) -> np.ndarray:
    """Joint outcome distribution for settings ``p`` (first slot) and ``q`` (second slot)."""
    gens = gens if gens is not None else build_generators(state.d)
    if gens.d != state.d:
        raise ValueError(f"generators are for d={gens.d}, state for d={state.d}")
    return joint_probabilities_from_unitaries(state, _unitary(p, gens), _unitary(q, gens))


def correlation_value(state: BipartiteState, p, q, gens: Optional[GeneratorSet] = None,
                      mu: Optional[np.ndarray] = None) -> float:
    """``E(p, q) = sum_ij mu_ij P_ij(p, q)``; ``p`` always acts on the first slot."""
    mu = correlation_weights(state.d) if mu is None else mu
    return float(np.sum(mu * joint_probabilities(state, p, q, gens)))
