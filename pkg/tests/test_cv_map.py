import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sudbell.correlation import BipartiteState
from sudbell.cv_map import (
    INFINITE_SQUEEZING,
    ChoiBlockMap,
    CVState,
    cp_map_single,
    cp_map_two_mode,
    default_truncation,
    lifted_observable,
    lifted_observable_check,
    tmsv_mapped_pure,
    tmsv_state,
)
from sudbell.sud_algebra import BlochDecomposition, build_generators
from oracles import random_density, random_hermitian


def choi_apply(R, rho, d):
    """``Tr_H((1 (x) rho^T) R)`` computed from the Choi operator."""
    N = rho.shape[0]
    M = np.kron(np.eye(d), rho.T) @ R
    return np.einsum("kala->kl", M.reshape(d, N, d, N))


@pytest.mark.parametrize("d, n_max", [(2, 8), (3, 12), (4, 8), (5, 15)])
def test_choi_oracle(d, n_max, rng):
    rho = random_density(rng, n_max)
    R = ChoiBlockMap(d, n_max).choi()
    np.testing.assert_allclose(cp_map_single(rho, d), choi_apply(R, rho, d), atol=1e-14)
    # complete positivity: the Choi operator is positive semidefinite
    assert np.linalg.eigvalsh(R).min() >= -1e-12


def test_trace_preservation_is_exact():
    rng = np.random.default_rng(3)
    for d, n_max in [(2, 10), (3, 9), (5, 20)]:
        G = rng.integers(-5, 6, size=(n_max, n_max))
        rho = G @ G.T
        out = cp_map_single(rho, d)
        assert out.dtype.kind == "i"
        assert np.trace(out) == np.trace(rho)


def test_truncation_must_be_block_complete():
    with pytest.raises(ValueError):
        cp_map_single(np.eye(7) / 7, 3)
    with pytest.raises(ValueError):
        ChoiBlockMap(3, 10)
    with pytest.raises(ValueError):
        cp_map_two_mode(np.eye(16) / 16, 3)
    with pytest.raises(ValueError):
        cp_map_two_mode(np.eye(15) / 15, 3)
    for r in (0.1, 0.8, 1.5, 3.0):
        for d in range(2, 6):
            n = default_truncation(r, d)
            assert n % d == 0 and n >= 40


@settings(max_examples=30, deadline=None)
@given(d=st.integers(2, 5), blocks=st.integers(1, 6), seed=st.integers(0, 2 ** 32 - 1),
       a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity_and_positivity(d, blocks, seed, a, b):
    rng = np.random.default_rng(seed)
    n = d * blocks
    r1, r2 = random_density(rng, n), random_density(rng, n)
    lhs = cp_map_single(a * r1 + b * r2, d)
    rhs = a * cp_map_single(r1, d) + b * cp_map_single(r2, d)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    out = cp_map_single(r1, d)
    assert np.linalg.eigvalsh(out).min() >= -1e-12
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)


def test_two_mode_pure_and_density_paths_agree(rng):
    d, n_max = 3, 9
    G = rng.normal(size=(n_max, n_max)) + 1j * rng.normal(size=(n_max, n_max))
    state = CVState(2, n_max, G / np.linalg.norm(G), pure=True)
    fast = cp_map_two_mode(state, d)
    slow = cp_map_two_mode(state.density(), d)
    np.testing.assert_allclose(fast, slow, atol=1e-13)
    mixed = CVState(2, n_max, state.density(), pure=False)
    np.testing.assert_allclose(cp_map_two_mode(mixed, d), slow, atol=1e-13)


def test_two_mode_map_factorizes_on_products(rng):
    d, n_max = 2, 6
    r1, r2 = random_density(rng, n_max), random_density(rng, n_max)
    np.testing.assert_allclose(cp_map_two_mode(np.kron(r1, r2), d),
                               np.kron(cp_map_single(r1, d), cp_map_single(r2, d)), atol=1e-14)


@pytest.mark.parametrize("d", range(2, 6))
@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 1.407, 1.5])
def test_tmsv_image_fidelity(d, r):
    n_max = 60
    cv = tmsv_state(r, n_max)
    rho = cp_map_two_mode(cv, d)
    rho = rho / np.trace(rho).real
    psi = tmsv_mapped_pure(r, d).psi.reshape(-1)
    fidelity = float(np.real(psi.conj() @ rho @ psi))
    assert fidelity >= 1 - 1e-6
    # the analytic image is prop. to sum_n tanh(r)^n |n n>
    amps = np.diag(tmsv_mapped_pure(r, d).psi).real
    np.testing.assert_allclose(amps[1:] / amps[:-1], math.tanh(r), rtol=1e-12)


def test_tmsv_truncation_deficit():
    cv = tmsv_state(1.0, 40)
    assert cv.norm + cv.deficit == pytest.approx(1.0, abs=1e-14)
    assert cv.renormalized().norm == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        tmsv_state(-0.1, 10)
    with pytest.raises(ValueError):
        tmsv_state(math.inf, 10)


def test_infinite_squeezing_sentinel():
    s = tmsv_mapped_pure(INFINITE_SQUEEZING, 4)
    np.testing.assert_allclose(s.psi, BipartiteState.maximally_entangled(4).psi)
    assert tmsv_mapped_pure(0.0, 3).psi[0, 0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tmsv_mapped_pure(-1.0, 3)


def test_cv_state_validation():
    with pytest.raises(ValueError):
        CVState(3, 4, np.zeros((4, 4, 4)), pure=True)
    with pytest.raises(ValueError):
        CVState(2, 4, np.zeros((4, 4)), pure=False)
    with pytest.raises(ValueError):
        cp_map_single(tmsv_state(0.5, 6), 2)


def test_lifted_observable_single_mode(rng):
    d, n_max = 3, 30
    gens = build_generators(d)
    rho = random_density(rng, n_max)
    state = CVState(1, n_max, rho, pure=False)
    worst = 0.0
    for _ in range(50):
        a = BlochDecomposition(float(rng.normal()), rng.normal(size=gens.n))
        lhs, rhs = lifted_observable_check(a, state, d, gens)
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-10


@pytest.mark.parametrize("d", [2, 4])
def test_lifted_observable_two_mode(d, rng):
    n_max = 8 * d
    gens = build_generators(d)
    pure = tmsv_state(0.9, n_max)
    mixed = CVState(2, n_max, random_density(rng, n_max ** 2, rank=3), pure=False)
    for state in (pure, mixed):
        for _ in range(50):
            a = BlochDecomposition(float(rng.normal()), rng.normal(size=gens.n))
            lhs, rhs = lifted_observable_check(a, state, d, gens)
            assert lhs == pytest.approx(rhs, abs=1e-10)


def test_dual_map(rng):
    d, n_max = 4, 12
    m = ChoiBlockMap(d, n_max)
    omega = random_hermitian(rng, d)
    rho = random_density(rng, n_max)
    assert np.trace(m.dual(omega) @ rho) == pytest.approx(np.trace(omega @ m.apply(rho)), abs=1e-12)
    assert lifted_observable(omega, n_max).shape == (n_max, n_max)
