"""
SU(d) generator basis, structure constants and generalized Bloch rotations.

Generators are ordered as the symmetric block ``u_jk`` (lexicographic in
``j < k``), then the antisymmetric block ``v_jk``, then the diagonal block
``w_l``.  Every parameter vector and adjoint matrix in this package uses that
ordering.  Indices ``j, k, l`` in the public API are 1-based, matching the
usual physics notation; storage is 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import expm

__all__ = [
    "GeneratorSet",
    "StructureConstants",
    "ParameterVector",
    "BlochDecomposition",
    "build_generators",
    "structure_constants",
    "w_coefficients",
    "unitary_from_params",
    "adjoint_matrix_direct",
    "adjoint_matrix_exp",
    "bloch_decompose",
    "bloch_reconstruct",
    "diagonal_projector_coeffs",
]

_DROP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """The ``d**2 - 1`` traceless Hermitian generators of su(d).

    ``generators`` has shape ``(d**2 - 1, d, d)``.  ``index_map`` maps
    ``("U", j, k)``, ``("V", j, k)`` and ``("W", l)`` (1-based) to a position.
    """

    d: int
    generators: np.ndarray
    subset_labels: Tuple[str, ...]
    index_map: Dict[tuple, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.subset_labels)

    def __getitem__(self, i):
        return self.generators[i]

    @property
    def n(self) -> int:
        return len(self.subset_labels)

    @property
    def n_reduced(self) -> int:
        """Number of U and V generators, ``d**2 - d``."""
        return self.d * (self.d - 1)

    def subset(self, label: str) -> np.ndarray:
        """Positions of the generators tagged ``label`` (one of U, V, W)."""
        return np.array([i for i, s in enumerate(self.subset_labels) if s == label], dtype=int)

    def combine(self, coeffs) -> np.ndarray:
        """Return ``sum_j coeffs[j] * s_j``."""
        return np.tensordot(np.asarray(coeffs), self.generators, axes=1)


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """Sparse antisymmetric structure constants ``f_jkl`` of su(d).

    Stored in coordinate form: ``indices[n] = (j, k, l)`` (0-based) with value
    ``values[n]``.  ``x`` holds the diagonal coefficients ``x_il`` that appear
    in the commutators of U and V generators with ``w_l``.
    """

    d: int
    indices: np.ndarray
    values: np.ndarray
    x: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.d * self.d - 1

    @property
    def nnz(self) -> int:
        return len(self.values)

    def dense(self) -> np.ndarray:
        f = np.zeros((self.n,) * 3)
        j, k, l = self.indices.T
        f[j, k, l] = self.values
        return f

    def contract(self, p) -> np.ndarray:
        """Return ``F`` with ``F_jl = sum_k p_k f_kjl``."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n,):
            raise ValueError(f"expected a parameter vector of length {self.n}, got {p.shape}")
        F = np.zeros((self.n, self.n))
        k, j, l = self.indices.T
        np.add.at(F, (j, l), p[k] * self.values)
        return F


@dataclass(frozen=True)
class ParameterVector:
    """Coefficients of ``-i p.s`` in the canonical parameterization of SU(d).

    In ``reduced`` mode only the U and V components are stored and the
    W components are implicitly zero.
    """

    d: int
    values: np.ndarray
    mode: str = "full"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.mode not in ("full", "reduced"):
            raise ValueError(f"unknown mode {self.mode!r}")
        expected = self.d * self.d - 1 if self.mode == "full" else self.d * self.d - self.d
        if values.shape != (expected,):
            raise ValueError(f"{self.mode} parameter vector for d={self.d} needs length {expected}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("parameter vector has non-finite entries")
        object.__setattr__(self, "values", values)

    def full(self) -> np.ndarray:
        if self.mode == "full":
            return self.values
        return np.concatenate([self.values, np.zeros(self.d - 1)])

    @classmethod
    def zeros(cls, d: int, mode: str = "full") -> "ParameterVector":
        n = d * d - 1 if mode == "full" else d * d - d
        return cls(d, np.zeros(n), mode)


@dataclass(frozen=True)
class BlochDecomposition:
    """``Omega = (a0/d) I + 1/2 sum_j a_j s_j``."""

    a0: float
    a: np.ndarray


def _check_dimension(d) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    return int(d)


def build_generators(d: int) -> GeneratorSet:
    """Build the generalized Gell-Mann generators of su(d).

    ``w_l = -sqrt(2/(l(l+1))) (sum_{i<=l} |i><i| - l |l+1><l+1|)``, so for
    ``d = 2`` the diagonal generator is ``-sigma_z``.
    """
    d = _check_dimension(d)
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    gens, labels, index = [], [], {}

    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        index[("U", j + 1, k + 1)] = len(gens)
        gens.append(m)
        labels.append("U")
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = 1j
        m[k, j] = -1j
        index[("V", j + 1, k + 1)] = len(gens)
        gens.append(m)
        labels.append("V")
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        index[("W", l)] = len(gens)
        gens.append(np.diag(-np.sqrt(2.0 / (l * (l + 1))) * diag).astype(complex))
        labels.append("W")

    arr = np.array(gens)
    arr.setflags(write=False)
    return GeneratorSet(d, arr, tuple(labels), index)


def w_coefficients(d: int) -> np.ndarray:
    """Diagonal entries ``x_il`` of the W generators, shape ``(d, d - 1)``."""
    d = _check_dimension(d)
    x = np.zeros((d, d - 1))
    for l in range(1, d):
        col = np.zeros(d)
        col[:l] = 1.0
        col[l] = -l
        x[:, l - 1] = -np.sqrt(2.0 / (l * (l + 1))) * col
    return x


def structure_constants(gens: GeneratorSet) -> StructureConstants:
    """Compute ``f_jkl = Tr([s_j, s_k] s_l) / (4i)`` and keep the nonzeros."""
    S = gens.generators
    prod = np.einsum("jab,kbc->jkac", S, S)
    comm = prod - prod.transpose(1, 0, 2, 3)
    f = np.einsum("jkab,lba->jkl", comm, S) / 4j
    if np.max(np.abs(f.imag)) > _DROP_TOL:
        raise ArithmeticError("structure constants have a non-negligible imaginary part")
    f = f.real
    idx = np.argwhere(np.abs(f) > _DROP_TOL)
    vals = f[tuple(idx.T)]
    return StructureConstants(gens.d, idx, vals, w_coefficients(gens.d))


def _as_full(p, gens: GeneratorSet) -> np.ndarray:
    if isinstance(p, ParameterVector):
        if p.d != gens.d:
            raise ValueError(f"parameter vector is for d={p.d}, generators for d={gens.d}")
        return p.full()
    p = np.asarray(p, dtype=float)
    if p.shape == (gens.n,):
        return p
    if p.shape == (gens.n_reduced,):
        return np.concatenate([p, np.zeros(gens.d - 1)])
    raise ValueError(f"parameter vector of shape {p.shape} does not fit d={gens.d}")


def unitary_from_params(p, gens: GeneratorSet) -> np.ndarray:
    """``exp(-i p.s)`` through the eigendecomposition of the Hermitian ``p.s``.

    ``p`` may be a :class:`ParameterVector` or a plain array of full or
    reduced length; reduced vectors are zero-padded on the W components.
    A leading batch axis is also accepted for plain arrays.
    """
    if not isinstance(p, ParameterVector) and np.ndim(p) == 2:
        P = np.asarray(p, dtype=float)
        if P.shape[1] == gens.n_reduced:
            P = np.concatenate([P, np.zeros((len(P), gens.d - 1))], axis=1)
        elif P.shape[1] != gens.n:
            raise ValueError(f"parameter batch of shape {P.shape} does not fit d={gens.d}")
        H = np.einsum("bk,kij->bij", P, gens.generators)
        w, v = np.linalg.eigh(H)
        return np.einsum("bij,bj,bkj->bik", v, np.exp(-1j * w), v.conj())
    H = gens.combine(_as_full(p, gens))
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w)) @ v.conj().T


def adjoint_matrix_direct(U: np.ndarray, gens: GeneratorSet, atol: float = 1e-10) -> np.ndarray:
    """``T_jk = Tr(U^dag s_j U s_k) / 2`` for a unitary ``U``."""
    U = np.asarray(U)
    if U.shape != (gens.d, gens.d):
        raise ValueError(f"unitary of shape {U.shape} does not fit d={gens.d}")
    if np.max(np.abs(U.conj().T @ U - np.eye(gens.d))) > atol:
        raise ValueError("adjoint_matrix_direct requires a unitary matrix")
    S = gens.generators
    rotated = np.einsum("ab,jbc,cd->jad", U.conj().T, S, U)
    T = 0.5 * np.einsum("jab,kba->jk", rotated, S)
    return T.real


def adjoint_matrix_exp(p, f: StructureConstants) -> np.ndarray:
    """``T(p) = expm(-2 F(p))`` with ``F_jl = sum_k p_k f_kjl``."""
    if isinstance(p, ParameterVector):
        if p.d != f.d:
            raise ValueError(f"parameter vector is for d={p.d}, structure constants for d={f.d}")
        p = p.full()
    p = np.asarray(p, dtype=float)
    if p.shape == (f.d * (f.d - 1),):
        p = np.concatenate([p, np.zeros(f.d - 1)])
    return expm(-2.0 * f.contract(p))


def bloch_decompose(H: np.ndarray, gens: GeneratorSet, atol: float = 1e-10) -> BlochDecomposition:
    H = np.asarray(H)
    if H.shape != (gens.d, gens.d):
        raise ValueError(f"operator of shape {H.shape} does not fit d={gens.d}")
    if np.max(np.abs(H - H.conj().T)) > atol:
        raise ValueError("bloch_decompose requires a Hermitian operator")
    a0 = np.trace(H).real
    a = np.einsum("jab,ba->j", gens.generators, H).real
    return BlochDecomposition(float(a0), a)


def bloch_reconstruct(bloch: BlochDecomposition, gens: GeneratorSet) -> np.ndarray:
    return bloch.a0 / gens.d * np.eye(gens.d) + 0.5 * gens.combine(bloch.a)


def diagonal_projector_coeffs(j: int, d: int) -> Tuple[float, np.ndarray]:
    """Expansion of ``|j><j|`` (1-based ``j``) over the identity and W generators.

    Returns ``(c0, c)`` with ``|j><j| = c0 I + sum_l c[l-1] w_l``.  The
    coefficients are ``c_{j-1+k} = -g_k^j`` where
    ``g_k^j = (1 - j delta_k0) / sqrt(2 (j+k)(j+k-1))``; the ``k = 0`` term is
    absent for ``j = 1``.
    """
    d = _check_dimension(d)
    if not 1 <= j <= d:
        raise ValueError(f"outcome index must lie in 1..{d}, got {j}")
    c = np.zeros(d - 1)
    for k in range(0, d - j + 1):
        l = j - 1 + k
        if l == 0:
            continue
        g = (1 - j * (k == 0)) * np.sqrt(1.0 / (2 * (j + k) * (j + k - 1)))
        c[l - 1] = -g
    return 1.0 / d, c
