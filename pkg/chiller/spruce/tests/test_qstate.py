"""Tests for three-qubit state utilities"""

import numpy as np
import pytest

from chiller.spruce.qstate import (IDENTITY2, SIGMA_MINUS, SIGMA_X, SIGMA_Z,
                                   DensityMatrix, basis_ket, eig_hermitian,
                                   embed, frobenius_distance, outer,
                                   partial_trace, tensor_all)


@pytest.fixture()
def qubit_states():
    rng = np.random.default_rng(7)
    states = []
    for _ in range(3):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = a @ a.conj().T
        states.append(m / np.trace(m).real)
    return states


def test_basis_ket_index():
    ket = basis_ket("101")
    assert ket[5] == 1
    assert np.sum(np.abs(ket)) == 1


def test_embed_sigma_minus_lowers_first_qubit():
    lowered = embed(SIGMA_MINUS, 1) @ basis_ket("110")
    assert np.allclose(lowered, basis_ket("010"))


def test_embed_rejects_bad_qubit():
    with pytest.raises(ValueError):
        embed(SIGMA_Z, 4)


def test_sigma_z_ground_energy():
    assert SIGMA_Z[0, 0] == -1
    assert SIGMA_Z[1, 1] == 1


def test_partial_trace_recovers_factors(qubit_states):
    rho = DensityMatrix(tensor_all(qubit_states))
    for qubit in (1, 2, 3):
        reduced = partial_trace(rho, qubit)
        assert np.allclose(reduced.matrix, qubit_states[qubit - 1],
                           atol=1e-12)


def test_partial_trace_keeps_trace(qubit_states):
    rho = DensityMatrix(tensor_all(qubit_states))
    assert np.trace(partial_trace(rho, 2).matrix) == pytest.approx(1)


def test_partial_trace_needs_full_register():
    with pytest.raises(ValueError):
        partial_trace(DensityMatrix(IDENTITY2 / 2), 1)


def test_density_matrix_rejects_bad_trace():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2, dtype=complex))


def test_density_matrix_rejects_negative_eigenvalue():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]).astype(complex))


def test_density_matrix_rejects_non_hermitian():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]], dtype=complex))


def test_density_matrix_is_read_only():
    rho = DensityMatrix(IDENTITY2 / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_from_array_normalizes():
    rho = DensityMatrix.from_array(np.diag([2.0, 2.0]))
    assert np.allclose(rho.matrix, IDENTITY2 / 2)


def test_eig_hermitian_pauli_x():
    values, vectors = eig_hermitian(SIGMA_X)
    assert np.allclose(values, [-1, 1])
    assert np.allclose(vectors.conj().T @ vectors, IDENTITY2)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eig_hermitian(SIGMA_MINUS)


def test_outer_projector():
    ket = basis_ket("0")
    assert np.allclose(outer(ket, ket), np.diag([1, 0]))


def test_frobenius_distance():
    assert frobenius_distance(SIGMA_X, -SIGMA_X) == pytest.approx(
        2 * np.sqrt(2))


def test_frobenius_distance_shape_mismatch():
    with pytest.raises(ValueError):
        frobenius_distance(IDENTITY2, np.eye(8))
