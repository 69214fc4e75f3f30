import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from sudbell.sud_algebra import (
    ParameterVector,
    adjoint_matrix_direct,
    adjoint_matrix_exp,
    bloch_decompose,
    bloch_reconstruct,
    build_generators,
    diagonal_projector_coeffs,
    structure_constants,
    unitary_from_params,
)
from oracles import random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_d2_generators_are_paulis_with_negated_y_z():
    # v_jk = i(P_jk - P_kj) gives -sigma_y at d = 2
    g = build_generators(2)
    assert g.subset_labels == ("U", "V", "W")
    np.testing.assert_allclose(g[0], SX)
    np.testing.assert_allclose(g[1], -SY)
    np.testing.assert_allclose(g[2], -SZ)


@pytest.mark.parametrize("d", range(2, 7))
def test_generators_traceless_orthogonal(d):
    g = build_generators(d)
    S = g.generators
    assert len(g) == d * d - 1
    assert np.max(np.abs(np.trace(S, axis1=1, axis2=2))) <= 1e-12
    gram = np.einsum("iab,jba->ij", S, S)
    np.testing.assert_allclose(gram, 2 * np.eye(len(g)), atol=1e-12)
    for s in S:
        np.testing.assert_allclose(s, s.conj().T, atol=0)


def test_subset_counts_d4():
    g = build_generators(4)
    assert len(g.subset("U")) == 6
    assert len(g.subset("V")) == 6
    assert len(g.subset("W")) == 3
    # lexicographic (j, k) inside each block
    assert [g.index_map[("U", j, k)] for j, k in [(1, 2), (1, 3), (1, 4), (2, 3)]] == [0, 1, 2, 3]
    assert g.index_map[("W", 1)] == 12


@pytest.mark.parametrize("d", [1, 0, 2.5])
def test_invalid_dimension(d):
    with pytest.raises(ValueError):
        build_generators(d)


def test_structure_constant_d2_sign():
    g = build_generators(2)
    f = structure_constants(g).dense()
    # Tr([sx, -sy] (-sz)) / 4i = Tr(-2i sz (-sz)) / 4i = 1
    assert f[0, 1, 2] == pytest.approx(1.0, abs=1e-14)
    assert f[1, 0, 2] == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("d", range(2, 7))
def test_commutators_from_structure_constants(d):
    g = build_generators(d)
    sc = structure_constants(g)
    f = sc.dense()
    S = g.generators
    comm = np.einsum("jab,kbc->jkac", S, S)
    comm = comm - comm.transpose(1, 0, 2, 3)
    rebuilt = 2j * np.einsum("jkl,lab->jkab", f, S)
    assert np.max(np.abs(comm - rebuilt)) <= 1e-10
    np.testing.assert_allclose(f, -f.transpose(1, 0, 2), atol=0)
    np.testing.assert_allclose(np.einsum("jjl->jl", f), 0)
    assert sc.nnz < f.size


def test_d3_commutators_match_closed_forms():
    # [u_ij, w_l] = i (x_il - x_jl) v_ij and [v_ij, w_l] = -i (x_il - x_jl) u_ij
    d = 3
    g = build_generators(d)
    x = structure_constants(g).x
    for (i, j) in [(1, 2), (1, 3), (2, 3)]:
        u = g[g.index_map[("U", i, j)]]
        v = g[g.index_map[("V", i, j)]]
        for l in (1, 2):
            w = g[g.index_map[("W", l)]]
            diff = x[i - 1, l - 1] - x[j - 1, l - 1]
            np.testing.assert_allclose(u @ w - w @ u, 1j * diff * v, atol=1e-12)
            np.testing.assert_allclose(v @ w - w @ v, -1j * diff * u, atol=1e-12)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_commutator_subset_pattern(d):
    g = build_generators(d)
    f = structure_constants(g).dense()
    U, V, W = (g.subset(s) for s in "UVW")
    blocks = {"U": U, "V": V, "W": W}
    allowed = {("U", "U"): "V", ("V", "V"): "V", ("U", "W"): "V", ("V", "W"): "U",
               ("U", "V"): "UW", ("W", "W"): ""}
    for (a, b), targets in allowed.items():
        sub = f[np.ix_(blocks[a], blocks[b], np.arange(len(g)))]
        forbidden = [k for k in range(len(g)) if g.subset_labels[k] not in targets]
        assert np.max(np.abs(sub[:, :, forbidden]), initial=0.0) <= 1e-10


@pytest.mark.parametrize("d", range(2, 6))
def test_w_generators_commute_and_are_invariant(d):
    g = build_generators(d)
    W = g.generators[g.subset("W")]
    for wj in W:
        for wl in W:
            assert np.array_equal(wj @ wl - wl @ wj, np.zeros_like(wj))
            theta = 0.7
            R = expm(-1j * theta * wj)
            np.testing.assert_allclose(R @ wl @ R.conj().T, wl, atol=1e-10)


def test_unitary_zero_and_pi_half():
    g = build_generators(2)
    np.testing.assert_allclose(unitary_from_params(np.zeros(3), g), np.eye(2), atol=1e-15)
    U = unitary_from_params(np.array([np.pi / 2, 0, 0]), g)
    np.testing.assert_allclose(U, -1j * SX, atol=1e-14)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_unitary_matches_scipy_expm(d, rng):
    g = build_generators(d)
    p = rng.uniform(-np.pi, np.pi, len(g))
    U = unitary_from_params(p, g)
    np.testing.assert_allclose(U, expm(-1j * g.combine(p)), atol=1e-12)
    np.testing.assert_allclose(np.linalg.svd(U, compute_uv=False), 1, atol=1e-12)
    assert np.max(np.abs(U.conj().T @ U - np.eye(d))) <= 1e-10


def test_reduced_vector_zero_pads_w(rng):
    g = build_generators(3)
    p = rng.normal(size=6)
    pv = ParameterVector(3, p, "reduced")
    U = unitary_from_params(pv, g)
    np.testing.assert_allclose(U, unitary_from_params(np.concatenate([p, [0, 0]]), g), atol=1e-14)
    with pytest.raises(ValueError):
        ParameterVector(3, np.zeros(7), "reduced")
    with pytest.raises(ValueError):
        unitary_from_params(ParameterVector(2, np.zeros(3)), g)


def test_batched_unitaries(rng):
    g = build_generators(4)
    P = rng.normal(size=(5, 12))
    batch = unitary_from_params(P, g)
    for p, U in zip(P, batch):
        np.testing.assert_allclose(U, unitary_from_params(p, g), atol=1e-13)


@pytest.mark.parametrize("d", range(2, 6))
def test_adjoint_cross_method(d):
    g = build_generators(d)
    f = structure_constants(g)
    rng = np.random.default_rng(d)
    worst = 0.0
    for _ in range(100):
        p = rng.uniform(-np.pi, np.pi, len(g))
        Td = adjoint_matrix_direct(unitary_from_params(p, g), g)
        Te = adjoint_matrix_exp(p, f)
        worst = max(worst, np.max(np.abs(Td - Te)))
    assert worst <= 1e-8


def test_adjoint_identity_and_orthogonal(rng):
    g = build_generators(3)
    f = structure_constants(g)
    np.testing.assert_allclose(adjoint_matrix_direct(np.eye(3), g), np.eye(8), atol=1e-15)
    np.testing.assert_allclose(adjoint_matrix_exp(np.zeros(8), f), np.eye(8), atol=1e-15)
    p = rng.normal(size=8)
    T = adjoint_matrix_direct(unitary_from_params(p, g), g)
    np.testing.assert_allclose(T.T @ T, np.eye(8), atol=1e-10)
    F = f.contract(p)
    np.testing.assert_allclose(F, -F.T, atol=1e-14)


def test_adjoint_rejects_non_unitary():
    g = build_generators(2)
    with pytest.raises(ValueError):
        adjoint_matrix_direct(2 * np.eye(2), g)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_adjoint_rotates_bloch_vector(d, rng):
    # U^dag s_j U = sum_k T_jk s_k, so the Bloch vector of U Omega U^dag is T a
    g = build_generators(d)
    H = random_hermitian(rng, d)
    U = unitary_from_params(rng.normal(size=len(g)), g)
    T = adjoint_matrix_direct(U, g)
    a = bloch_decompose(H, g).a
    a_rot = bloch_decompose(U @ H @ U.conj().T, g).a
    np.testing.assert_allclose(T @ a, a_rot, atol=1e-10)
    assert np.linalg.norm(a_rot) == pytest.approx(np.linalg.norm(a), abs=1e-10)


def test_bloch_examples():
    g3 = build_generators(3)
    b = bloch_decompose(np.eye(3), g3)
    assert b.a0 == pytest.approx(3)
    np.testing.assert_allclose(b.a, 0, atol=1e-15)
    b = bloch_decompose(g3[0], g3)
    expected = np.zeros(8)
    expected[0] = 2
    assert b.a0 == pytest.approx(0)
    np.testing.assert_allclose(b.a, expected, atol=1e-15)
    with pytest.raises(ValueError):
        bloch_decompose(np.array([[0, 1], [0, 0]]), build_generators(2))


@settings(max_examples=30, deadline=None)
@given(d=st.integers(2, 5), seed=st.integers(0, 2 ** 32 - 1))
def test_bloch_round_trip(d, seed):
    g = build_generators(d)
    H = random_hermitian(np.random.default_rng(seed), d)
    b = bloch_decompose(H, g)
    np.testing.assert_allclose(bloch_reconstruct(b, g), H, atol=1e-10)
    b2 = bloch_decompose(bloch_reconstruct(b, g), g)
    assert b2.a0 == pytest.approx(b.a0, abs=1e-12)
    np.testing.assert_allclose(b2.a, b.a, atol=1e-12)


def test_diagonal_projectors_d2():
    c0, c = diagonal_projector_coeffs(1, 2)
    assert c0 == 0.5 and c[0] == pytest.approx(-0.5)
    c0, c = diagonal_projector_coeffs(2, 2)
    assert c[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        diagonal_projector_coeffs(3, 2)


@pytest.mark.parametrize("d", range(2, 8))
def test_diagonal_projectors_reconstruct(d):
    g = build_generators(d)
    W = g.generators[g.subset("W")]
    total = np.zeros((d, d), dtype=complex)
    for j in range(1, d + 1):
        c0, c = diagonal_projector_coeffs(j, d)
        P = c0 * np.eye(d) + np.tensordot(c, W, axes=1)
        expected = np.zeros((d, d))
        expected[j - 1, j - 1] = 1
        np.testing.assert_allclose(P, expected, atol=1e-12)
        total += P
    np.testing.assert_allclose(total, np.eye(d), atol=1e-12)
