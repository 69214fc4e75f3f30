"""
Bell function over four local settings, the QFT baseline and the classical bound.

Labels starting with ``A`` are settings of the first party (first tensor slot)
and labels starting with ``B`` of the second party.  A term ``(X, Y)`` weights
the outcome ``x`` of setting ``X`` and ``y`` of setting ``Y`` by ``mu[x, y]``.
For the default layout the third term ``(B2, A1)`` therefore measures the
first slot with ``A1`` and the second with ``B2`` and uses the transposed
weights; this is what makes the function equal to the CGLMP expression and
keeps its local-realistic bound at 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .correlation import (
    BipartiteState,
    MeasurementConfig,
    correlation_weights,
    joint_probabilities_from_unitaries,
)
from .sud_algebra import GeneratorSet, build_generators, unitary_from_params

__all__ = [
    "BellSpec",
    "CGLMP",
    "term_values",
    "bell_value",
    "bell_value_from_unitaries",
    "qft_unitary",
    "qft_party_unitaries",
    "QFT_OPTIMAL_PHASES",
    "cglmp_qft_max",
    "bell_value_qft",
    "lhv_max_bruteforce",
]

QFT_OPTIMAL_PHASES = (0.0, 0.5, 0.25, -0.25)


@dataclass(frozen=True)
class BellSpec:
    coefficients: Tuple[float, ...] = (1.0, 1.0, 1.0, -1.0)
    terms: Tuple[Tuple[str, str], ...] = (("A1", "B1"), ("A2", "B2"), ("B2", "A1"), ("A2", "B1"))

    def __post_init__(self):
        if len(self.coefficients) != len(self.terms):
            raise ValueError("need one coefficient per term")
        if abs(sum(self.coefficients) - 2.0) > 1e-12:
            raise ValueError(f"coefficients must sum to 2, got {sum(self.coefficients)}")
        for x, y in self.terms:
            if {x[0], y[0]} != {"A", "B"}:
                raise ValueError(f"term {(x, y)} must pair an A setting with a B setting")
            for lab in (x, y):
                if lab not in MeasurementConfig.LABELS:
                    raise ValueError(f"unknown setting label {lab!r}")

    @property
    def algebraic_max(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    def oriented_terms(self):
        """Yield ``(coefficient, a_label, b_label, transposed)`` per term."""
        for c, (x, y) in zip(self.coefficients, self.terms):
            if x[0] == "A":
                yield c, x, y, False
            else:
                yield c, y, x, True


CGLMP = BellSpec()


def term_values(state: BipartiteState, unitaries: dict, spec: BellSpec = CGLMP,
                mu: Optional[np.ndarray] = None) -> np.ndarray:
    """Correlation value of each term; ``unitaries`` maps labels to local unitaries.

    Unitaries may carry a leading batch axis, in which case each entry of the
    result is an array over that axis.
    """
    mu = correlation_weights(state.d) if mu is None else mu
    out = []
    for _, a, b, transposed in spec.oriented_terms():
        P = joint_probabilities_from_unitaries(state, unitaries[a], unitaries[b])
        w = mu.T if transposed else mu
        out.append(np.sum(w * P, axis=(-2, -1)))
    return out


def bell_value_from_unitaries(state: BipartiteState, unitaries: dict, spec: BellSpec = CGLMP,
                              mu: Optional[np.ndarray] = None) -> float:
    vals = term_values(state, unitaries, spec, mu)
    return float(sum(c * v for c, v in zip(spec.coefficients, vals)))


def bell_value(state: BipartiteState, config: MeasurementConfig, spec: BellSpec = CGLMP,
               gens: Optional[GeneratorSet] = None) -> float:
    if config.d != state.d:
        raise ValueError(f"configuration is for d={config.d}, state for d={state.d}")
    gens = gens if gens is not None else build_generators(state.d)
    unitaries = {lab: unitary_from_params(config[lab], gens) for lab in MeasurementConfig.LABELS}
    return bell_value_from_unitaries(state, unitaries, spec)


def qft_unitary(d: int, phi: float) -> np.ndarray:
    """``U_jk = exp(2 pi i j (k + phi) / d) / sqrt(d)`` for ``j, k = 0..d-1``."""
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    j = np.arange(int(d))
    return np.exp(2j * np.pi * np.outer(j, j + phi) / d) / np.sqrt(d)


def qft_party_unitaries(d: int, phases: Sequence[float]) -> dict:
    """Local unitaries of the QFT measurement family for phases ``(A1, A2, B1, B2)``.

    The second party measures in the complex-conjugate Fourier basis,
    ``conj(qft_unitary(d, -phi))``.  Its basis vectors are those of
    ``qft_unitary(d, phi)`` with outcome ``k`` relabelled ``-k mod d``, which
    is the labelling under which ``sum_j |jj>`` is perfectly correlated.
    """
    if len(phases) != 4:
        raise ValueError("need four phases (A1, A2, B1, B2)")
    a1, a2, b1, b2 = phases
    return {
        "A1": qft_unitary(d, a1),
        "A2": qft_unitary(d, a2),
        "B1": qft_unitary(d, -b1).conj(),
        "B2": qft_unitary(d, -b2).conj(),
    }


def cglmp_qft_max(d: int) -> float:
    """Closed-form Bell value of the maximally entangled state under the optimal QFT phases.

    ``4d sum_{l=0}^{d-1} (1 - 2l/(d-1)) / (2 d^3 sin^2(pi (l + 1/4) / d))``
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    l = np.arange(d)
    terms = (1 - 2 * l / (d - 1)) / (2 * d ** 3 * np.sin(np.pi * (l + 0.25) / d) ** 2)
    return float(4 * d * np.sum(terms))


def bell_value_qft(state: BipartiteState, phases: Sequence[float] = QFT_OPTIMAL_PHASES,
                   spec: BellSpec = CGLMP) -> float:
    return bell_value_from_unitaries(state, qft_party_unitaries(state.d, phases), spec)


def lhv_max_bruteforce(d: int, spec: BellSpec = CGLMP, max_d: int = 4) -> float:
    """Maximum of the Bell function over deterministic local strategies.

    A strategy fixes one outcome for each of the settings ``A1, A2, B1, B2``;
    there are ``d**4`` of them.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
    if d > max_d:
        raise ValueError(f"enumeration is limited to d <= {max_d}, got {d}")
    mu = correlation_weights(d)
    grids = dict(zip(MeasurementConfig.LABELS, np.meshgrid(*[np.arange(d)] * 4, indexing="ij")))
    total = np.zeros((d,) * 4)
    for c, (x, y) in zip(spec.coefficients, spec.terms):
        total = total + c * mu[grids[x], grids[y]]
    return float(total.max())

