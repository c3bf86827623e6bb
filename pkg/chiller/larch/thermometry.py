"""Single-qubit thermometry: SLD, Fisher information, Cramer-Rao bounds
and the minimum-variance unbiased (MVU) temperature estimator.

The measurement is the energy (SLD) basis {|0>, |1>} with outcomes
-E/2 and +E/2.
"""

from dataclasses import dataclass
import logging
from typing import Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.special import expit

from chiller.spruce.dynamics import ground_population
from chiller.spruce.qstate import DensityMatrix, as_matrix, eig_hermitian

logger = logging.getLogger(__name__)

# eigenvalue sums below this are treated as outside the support of rho
SUPPORT_TOL = 1e-14


@dataclass(frozen=True)
class EstimatorModel:
    """Class containing the single-shot measurement model at temperature T.

    Args:
        T: temperature the model is built at
        E: qubit gap
        outcomes: measured energies
        probs: outcome probabilities
        est_values: estimator value at each outcome
        qfi: quantum Fisher information F_Q
        mean_energy: <H_1>
    """
    T: float
    E: float
    outcomes: Tuple[float, ...]
    probs: Tuple[float, ...]
    est_values: Tuple[float, ...]
    qfi: float
    mean_energy: float


@dataclass(frozen=True)
class MomentVector:
    """Raw moments m_1 ... m_M of an estimator distribution.

    Raises:
        ValueError: if fewer than one moment is given or m_2 < m_1^2
    """
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values",
                           tuple(float(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError("at least one moment is required")
        if len(self.values) >= 2:
            m1, m2 = self.values[:2]
            # relative slack for rounding in m_2 - m_1^2
            if m2 - m1 ** 2 < -1e-12 * max(1.0, m2):
                raise ValueError(f"infeasible moments: m2={m2} < m1^2="
                                 f"{m1 ** 2}")

    @property
    def order(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return self.values[0]

    @property
    def variance(self) -> float:
        if self.order < 2:
            raise ValueError("variance needs two moments")
        return max(self.values[1] - self.values[0] ** 2, 0.0)

    def truncate(self, order: int) -> "MomentVector":
        if not 1 <= order <= self.order:
            raise ValueError(f"cannot truncate {self.order} moments to "
                             f"{order}")
        return MomentVector(self.values[:order])


def excited_population(E: float, T: float) -> float:
    """1 - r, evaluated without cancellation.

    Raises:
        ValueError: for nonpositive E or T
    """
    if not (E > 0 and T > 0):
        raise ValueError(f"E and T must be positive, got E={E}, T={T}")
    return float(expit(-E / T))


def thermal_population_derivative(E: float, T: float) -> float:
    """dr/dT = -r (1 - r) E / T^2."""
    r = ground_population(E, T)
    return -r * excited_population(E, T) * E / T ** 2


def thermal_state_derivative(E: float, T: float) -> np.ndarray:
    """d tau / dT = diag(r', -r')."""
    dr = thermal_population_derivative(E, T)
    return np.diag([dr, -dr]).astype(complex)


def thermal_sld(E: float, T: float) -> np.ndarray:
    """Closed-form SLD (r'/r)|0><0| - (r'/(1 - r))|1><1|."""
    r = ground_population(E, T)
    q = excited_population(E, T)
    return np.diag([-q * E / T ** 2, r * E / T ** 2]).astype(complex)


def sld_operator(rho: DensityMatrix, drho_dT) -> np.ndarray:
    """Symmetric logarithmic derivative solving
    d rho/dT = (Lambda rho + rho Lambda) / 2.

    In the eigenbasis {e_i} of rho,
    <e_i|Lambda|e_j> = 2 <e_i|d rho/dT|e_j> / (lambda_i + lambda_j),
    set to zero where lambda_i + lambda_j vanishes.

    Raises:
        ValueError: if drho_dT is not Hermitian and traceless within 1e-10,
            or its shape differs from rho
    """
    drho = as_matrix(drho_dT)
    if drho.shape != rho.matrix.shape:
        raise ValueError(f"derivative shape {drho.shape} does not match "
                         f"state shape {rho.matrix.shape}")
    if abs(np.trace(drho)) > 1e-10:
        raise ValueError(f"state derivative must be traceless, trace is "
                         f"{np.trace(drho):.3e}")
    if np.linalg.norm(drho - drho.conj().T) > 1e-10:
        raise ValueError("state derivative must be Hermitian")
    eigenvalues, basis = eig_hermitian(rho.matrix)
    d_eig = basis.conj().T @ drho @ basis
    sums = eigenvalues[:, None] + eigenvalues[None, :]
    inside = sums > SUPPORT_TOL
    sld_eig = np.zeros_like(d_eig)
    sld_eig[inside] = 2 * d_eig[inside] / sums[inside]
    return basis @ sld_eig @ basis.conj().T


def qfi_from_sld(rho: DensityMatrix, sld: np.ndarray) -> float:
    """F_Q = Tr(rho Lambda^2)."""
    return float(np.trace(rho.matrix @ sld @ sld).real)


def qfi_thermal(E: float, T: float) -> float:
    """F_Q = E^2 r (1 - r) / T^4 for a thermal qubit."""
    r = ground_population(E, T)
    return E ** 2 * r * excited_population(E, T) / T ** 4


def cfi(probs: Sequence[float], dprobs_dT: Sequence[float]) -> float:
    """Classical Fisher information sum_i (dp_i)^2 / p_i.

    Raises:
        ValueError: on a zero-probability outcome with nonzero derivative,
            negative probabilities, or mismatched lengths
    """
    p = np.asarray(probs, dtype=float)
    dp = np.asarray(dprobs_dT, dtype=float)
    if p.shape != dp.shape:
        raise ValueError(f"{len(p)} probabilities but {len(dp)} "
                         f"derivatives")
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(dp.sum()) > 1e-12:
        logger.warning("probability derivatives sum to %.3e", dp.sum())
    zero = p == 0
    if np.any(dp[zero] != 0):
        raise ValueError("zero-probability outcome has nonzero derivative")
    return float(np.sum(dp[~zero] ** 2 / p[~zero]))


def crb(fisher: float, N: int = 1) -> float:
    """Cramer-Rao bound 1 / (N F).

    Raises:
        ValueError: for nonpositive fisher or N
    """
    if not fisher > 0:
        raise ValueError(f"Fisher information must be positive, got {fisher}")
    if N < 1:
        raise ValueError(f"number of repetitions must be positive, got {N}")
    return 1 / (N * fisher)


def mvu_estimator(E: float, T: float) -> EstimatorModel:
    """MVU estimator T_hat(e_i) = (e_i - <H_1>) / (F_Q T^2) + T for
    energy measurements on a thermal qubit.

    Raises:
        ValueError: for nonpositive E or T
    """
    r = ground_population(E, T)
    q = excited_population(E, T)
    outcomes = (-E / 2, E / 2)
    mean_energy = E * (q - r) / 2
    qfi = qfi_thermal(E, T)
    # e_0 - <H_1> = -E q and e_1 - <H_1> = E r, divided by F_Q T^2
    est_values = (T - T ** 2 / (E * r), T + T ** 2 / (E * q))
    probs = (r, q)
    return EstimatorModel(T=T, E=E, outcomes=outcomes, probs=probs,
                          est_values=est_values, qfi=qfi,
                          mean_energy=mean_energy)


def score(model: EstimatorModel) -> np.ndarray:
    """d ln p / dT at each outcome, (e_i - <H_1>) / T^2."""
    r, q = model.probs
    return np.array([-model.E * q, model.E * r]) / model.T ** 2


def sample_mean_model(model: EstimatorModel, N: int
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """Distribution of the mean of N independent single-shot estimates.

    Returns:
        values and probabilities of the N-shot sample mean
    Raises:
        ValueError: if N < 1 or the model does not have two outcomes
    """
    if N < 1:
        raise ValueError(f"number of repetitions must be positive, got {N}")
    if len(model.est_values) != 2:
        raise ValueError("sample-mean distribution needs a two-outcome "
                         "model")
    low, high = model.est_values
    excited = np.arange(N + 1)
    values = ((N - excited) * low + excited * high) / N
    probs = stats.binom.pmf(excited, N, model.probs[1])
    return values, probs


def moments(model: EstimatorModel, M: int, repetitions: int = 1
            ) -> MomentVector:
    """Raw moments m_n = sum_i p_i T_hat_i^n, n = 1..M, of the single-shot
    estimator, or of the N-shot sample mean when repetitions > 1.

    Raises:
        ValueError: if M < 2
    """
    if M < 2:
        raise ValueError(f"at least two moments are required, got M={M}")
    if repetitions == 1:
        values = np.asarray(model.est_values)
        probs = np.asarray(model.probs)
    else:
        values, probs = sample_mean_model(model, repetitions)
    return MomentVector(tuple(float(np.sum(probs * values ** n))
                              for n in range(1, M + 1)))
