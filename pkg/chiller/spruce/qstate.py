"""Dense complex matrices for three-qubit states and operators.

Qubits are ordered (cold=1, work=2, hot=3) and qubit 1 is the most
significant tensor factor, so index 0b101 is the ket |101>. The local
basis is {|0>, |1>} with |0> the ground state.
"""

from dataclasses import dataclass
from functools import reduce
import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

N_QUBITS = 3
DENSITY_DIMS = (2, 2 ** N_QUBITS)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9

IDENTITY2 = np.eye(2, dtype=complex)
# |0><1| lowers the excitation, |1><0| raises it
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
# diag(-1, +1) so that E * SIGMA_Z / 2 gives |0> the energy -E/2
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)


def as_matrix(m) -> np.ndarray:
    """Coerces input to a two-dimensional complex array.

    Raises:
        ValueError: if the input is not two-dimensional
    """
    out = np.asarray(m, dtype=complex)
    if out.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {out.shape}")
    return out


def hermitian_defect(m: np.ndarray) -> float:
    """Frobenius norm of m - m^dagger."""
    return float(np.linalg.norm(m - m.conj().T))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state of one qubit or of the full register.

    Args:
        matrix: square complex array of dimension 2 or 8; stored read-only
    Raises:
        ValueError: if the dimension is not 2 or 8, or the matrix is not
            Hermitian, unit-trace and positive semidefinite within tolerance
    """
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        if m.shape[0] != m.shape[1] or m.shape[0] not in DENSITY_DIMS:
            raise ValueError(
                f"density matrix must be 2x2 or 8x8, got {m.shape}"
            )
        defect = hermitian_defect(m)
        if defect > HERMITIAN_TOL:
            raise ValueError(f"state is not Hermitian (defect {defect:.3e})")
        trace_err = abs(np.trace(m) - 1)
        if trace_err > TRACE_TOL:
            raise ValueError(f"state trace deviates from 1 by {trace_err:.3e}")
        min_eig = float(linalg.eigvalsh(m)[0])
        if min_eig < -POSITIVITY_TOL:
            raise ValueError(f"state has negative eigenvalue {min_eig:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_array(cls, m) -> "DensityMatrix":
        """Hermitizes and renormalizes m before validating it."""
        m = as_matrix(m)
        m = (m + m.conj().T) / 2
        return cls(m / np.trace(m).real)


def basis_ket(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string such as '101'."""
    ket = np.zeros(2 ** len(bits), dtype=complex)
    ket[int(bits, 2)] = 1
    return ket


def outer(ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """|ket><bra|."""
    return np.outer(ket, np.conj(bra))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product a (x) b with shape (rows_a rows_b, cols_a cols_b)."""
    return np.kron(as_matrix(a), as_matrix(b))


def tensor_all(factors: Sequence) -> np.ndarray:
    """Left-to-right Kronecker product of the factors."""
    return reduce(tensor_product, factors)


def embed(op, qubit: int) -> np.ndarray:
    """Lifts a single-qubit operator to act on qubit 1, 2 or 3.

    Raises:
        ValueError: if qubit is not in {1, 2, 3}
    """
    if qubit not in range(1, N_QUBITS + 1):
        raise ValueError(f"qubit index must be 1, 2 or 3, got {qubit}")
    factors = [IDENTITY2] * N_QUBITS
    factors[qubit - 1] = as_matrix(op)
    return tensor_all(factors)


def partial_trace(rho: DensityMatrix, keep_qubit: int) -> DensityMatrix:
    """Reduced 2x2 state of one qubit of a three-qubit state.

    Args:
        rho: 8x8 state
        keep_qubit: 1, 2 or 3
    Returns:
        the reduced state; its trace equals that of rho
    Raises:
        ValueError: if rho is not 8x8 or keep_qubit is out of range
    """
    if rho.dim != 2 ** N_QUBITS:
        raise ValueError(f"partial trace needs an 8x8 state, got {rho.dim}")
    return DensityMatrix(reduced_matrix(rho.matrix, keep_qubit))


def reduced_matrix(m: np.ndarray, keep_qubit: int) -> np.ndarray:
    """Unvalidated partial trace of an 8x8 array onto one qubit."""
    if keep_qubit not in range(1, N_QUBITS + 1):
        raise ValueError(
            f"qubit index must be 1, 2 or 3, got {keep_qubit}"
        )
    tensor = m.reshape([2] * (2 * N_QUBITS))
    keep = keep_qubit - 1
    traced = [q for q in range(N_QUBITS) if q != keep]
    # move the kept row/column axes to the front, then trace pairwise
    order = [keep, N_QUBITS + keep]
    order += [q for q in traced] + [N_QUBITS + q for q in traced]
    tensor = tensor.transpose(order).reshape(2, 2, 4, 4)
    return np.einsum("abkk->ab", tensor)


def eig_hermitian(m) -> Tuple[np.ndarray, np.ndarray]:
    """Spectrum of a Hermitian matrix.

    Returns:
        eigenvalues in ascending order and the unitary whose columns are
        the matching eigenvectors
    Raises:
        ValueError: if m is not Hermitian within 1e-8
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"eigendecomposition needs a square matrix, "
                         f"got {m.shape}")
    defect = hermitian_defect(m)
    if defect > 1e-8:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    values, vectors = linalg.eigh((m + m.conj().T) / 2)
    return values, vectors


def frobenius_distance(a, b) -> float:
    """||a - b||_F.

    Raises:
        ValueError: on shape mismatch
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
