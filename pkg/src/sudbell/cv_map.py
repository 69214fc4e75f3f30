"""
Folding truncated continuous-variable states onto d-level systems.

Fock state ``|dm + k>`` is identified with ``|k>``: the map keeps the
coherences inside each block of ``d`` consecutive photon numbers and sums
the blocks.  It is a block partial trace, hence completely positive, and it
preserves the trace exactly whenever the truncation holds whole blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .correlation import BipartiteState
from .sud_algebra import BlochDecomposition, GeneratorSet, bloch_reconstruct, build_generators

__all__ = [
    "INFINITE_SQUEEZING",
    "CVState",
    "ChoiBlockMap",
    "default_truncation",
    "tmsv_state",
    "cp_map_single",
    "cp_map_two_mode",
    "tmsv_mapped_pure",
    "lifted_observable",
    "lifted_observable_check",
]

INFINITE_SQUEEZING = math.inf


@dataclass(frozen=True, eq=False)
class CVState:
    """A one- or two-mode state truncated to photon numbers ``< n_max``.

    ``data`` is the amplitude vector / matrix when ``pure`` is true, otherwise
    the density operator (``n_max``-square for one mode, ``n_max**2``-square
    for two modes).  ``deficit`` is the probability lost to truncation.
    """

    modes: int
    n_max: int
    data: np.ndarray
    pure: bool
    deficit: float = 0.0
    r: Optional[float] = None

    def __post_init__(self):
        if self.modes not in (1, 2):
            raise ValueError("only one- and two-mode states are supported")
        shape = (self.n_max,) * self.modes if self.pure else (self.n_max ** self.modes,) * 2
        if self.data.shape != shape:
            raise ValueError(f"expected data of shape {shape}, got {self.data.shape}")

    @property
    def norm(self) -> float:
        if self.pure:
            return float(np.sum(np.abs(self.data) ** 2))
        return float(np.trace(self.data).real)

    def renormalized(self) -> "CVState":
        n = self.norm
        data = self.data / np.sqrt(n) if self.pure else self.data / n
        return CVState(self.modes, self.n_max, data, self.pure, 0.0, self.r)

    def density(self) -> np.ndarray:
        if not self.pure:
            return self.data
        v = self.data.reshape(-1)
        return np.outer(v, v.conj())


def _block_count(n_max: int, d: int) -> int:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if n_max % d:
        raise ValueError(f"truncation n_max={n_max} is not a multiple of d={d}; "
                         "the map would leak trace")
    return n_max // d


@dataclass(frozen=True)
class ChoiBlockMap:
    """The modulo-``d`` folding map on a Fock space truncated at ``n_max``."""

    d: int
    n_max: int

    def __post_init__(self):
        _block_count(self.n_max, self.d)

    def choi(self) -> np.ndarray:
        """``R = sum_n sum_kl |k><l| (x) |dn+k><dn+l|`` on ``C^d (x) C^n_max``."""
        d, N = self.d, self.n_max
        R = np.zeros((d, N, d, N))
        for n in range(N // d):
            for k in range(d):
                for l in range(d):
                    R[k, d * n + k, l, d * n + l] = 1.0
        return R.reshape(d * N, d * N)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return cp_map_single(rho, self.d)

    def dual(self, omega: np.ndarray) -> np.ndarray:
        return lifted_observable(omega, self.n_max)


def default_truncation(r: float, d: int) -> int:
    """Block-complete truncation with a negligible TMSV tail for ``r <= 1.5``."""
    n = max(40, 20 * math.ceil(math.tanh(r) * 10))
    return d * math.ceil(n / d)


def tmsv_state(r: float, n_max: int) -> CVState:
    """Two-mode squeezed vacuum ``sum_n tanh(r)^n / cosh(r) |n, n>`` for ``n < n_max``."""
    if r < 0 or not math.isfinite(r):
        raise ValueError(f"squeezing must be finite and >= 0, got {r}")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = np.arange(n_max)
    c = np.tanh(r) ** n / np.cosh(r)
    # the tail is tanh^(2 n_max); 1 - sum|c|^2 would cancel catastrophically
    deficit = float(np.tanh(r) ** (2 * n_max))
    return CVState(2, n_max, np.diag(c).astype(complex), pure=True, deficit=deficit, r=float(r))


def cp_map_single(rho: Union[np.ndarray, CVState], d: int) -> np.ndarray:
    """``(rho_d)_{k k'} = sum_m rho_{dm+k, dm+k'}``."""
    if isinstance(rho, CVState):
        if rho.modes != 1:
            raise ValueError("cp_map_single needs a single-mode state")
        rho = rho.density()
    rho = np.asarray(rho)
    M = _block_count(rho.shape[0], d)
    return np.einsum("mamb->ab", rho.reshape(M, d, M, d))


def cp_map_two_mode(rho: Union[np.ndarray, CVState], d: int) -> np.ndarray:
    """``(rho_12)_{(k,l),(k',l')} = sum_mn rho_{(dm+k, dn+l),(dm+k', dn+l')}``.

    Pure two-mode :class:`CVState` inputs are folded from their amplitude
    matrix without forming the ``n_max**2``-square density operator.
    """
    if isinstance(rho, CVState):
        if rho.modes != 2:
            raise ValueError("cp_map_two_mode needs a two-mode state")
        if rho.pure:
            M = _block_count(rho.n_max, d)
            blocks = rho.data.reshape(M, d, M, d)
            out = np.einsum("manb,mcnd->abcd", blocks, blocks.conj(), optimize=True)
            return out.reshape(d * d, d * d)
        rho = rho.data
    rho = np.asarray(rho)
    N = int(round(math.sqrt(rho.shape[0])))
    if N * N != rho.shape[0] or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"not a two-mode density operator: shape {rho.shape}")
    M = _block_count(N, d)
    r = rho.reshape(M, d, M, d, M, d, M, d)
    return np.einsum("manbmcnd->abcd", r).reshape(d * d, d * d)


def tmsv_mapped_pure(r: float, d: int) -> BipartiteState:
    """Folded image of the two-mode squeezed vacuum, ``prop. sum_{n<d} tanh(r)^n |n, n>``.

    ``r = INFINITE_SQUEEZING`` gives the maximally entangled state exactly.
    """
    if r < 0:
        raise ValueError(f"squeezing must be >= 0, got {r}")
    if math.isinf(r):
        return BipartiteState.maximally_entangled(d)
    c = np.tanh(r) ** np.arange(d)
    return BipartiteState(d, psi=np.diag(c / np.linalg.norm(c)))


def lifted_observable(omega: np.ndarray, n_max: int) -> np.ndarray:
    """Block-diagonal repetition of a ``d``-level observable over ``n_max`` Fock states."""
    omega = np.asarray(omega)
    return np.kron(np.eye(_block_count(n_max, omega.shape[0])), omega)


def lifted_observable_check(a: BlochDecomposition, rho_cv: CVState, d: int,
                            gens: Optional[GeneratorSet] = None):
    """Return ``(Tr(A rho_cv), Tr(Omega rho_d))`` for the observable with Bloch data ``a``.

    For a two-mode state the observable acts on the first mode.
    """
    gens = gens if gens is not None else build_generators(d)
    omega = bloch_reconstruct(a, gens)
    A = lifted_observable(omega, rho_cv.n_max)
    if rho_cv.modes == 1:
        lhs = np.trace(A @ rho_cv.density())
        rhs = np.trace(omega @ cp_map_single(rho_cv, d))
    else:
        if rho_cv.pure:
            psi = rho_cv.data
            lhs = np.trace(psi.conj().T @ A @ psi)
        else:
            N = rho_cv.n_max
            lhs = np.einsum("ab,bjaj->", A, rho_cv.data.reshape(N, N, N, N))
        rho12 = cp_map_two_mode(rho_cv, d).reshape(d, d, d, d)
        rhs = np.einsum("ab,bjaj->", omega, rho12)
    return float(np.real(lhs)), float(np.real(rhs))
