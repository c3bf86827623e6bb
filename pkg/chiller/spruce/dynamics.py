"""Markovian dynamics of the three-qubit self-contained absorption
refrigerator.

The system Hamiltonian is H_S = H_loc + H_int with
H_loc = sum_j E_j sigma_j^z / 2 and H_int = g (|010><101| + |101><010|).
Each qubit couples to its own Ohmic bath. In the strong inter-qubit
coupling regime the dissipators act on transitions between eigenstates of
H_S; in the weak regime they act locally through sigma_j^-/sigma_j^+.

Superoperators act on column-stacked density matrices, so
vec(A rho B) = (B^T kron A) vec(rho).
"""

from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.special import expit

from chiller.constants import MAX_STORED_STATES, STEADY_TOL
from chiller.spruce.qstate import (SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z,
                                   DensityMatrix, basis_ket, embed, outer,
                                   reduced_matrix, tensor_all)

logger = logging.getLogger(__name__)

DIM = 8
# numpy.exp overflows just above 709
OVERFLOW_EXPONENT = 700.0
# singular values of the Liouvillian below this count as kernel
KERNEL_TOL = 1e-9
STEADY_RESIDUAL_TOL = 1e-10
HERMITIZE_WARN = 1e-10
# dt accuracy guard for fast Hamiltonians
FAST_EIGENVALUE = 5.0
FAST_MAX_DT = 0.01


class Regime(Enum):
    """This class enumerates the inter-qubit coupling regimes."""
    STRONG = "strong"
    WEAK = "weak"


DEFAULT_DT = {Regime.STRONG: 0.005, Regime.WEAK: 0.01}


class IntegrationError(RuntimeError):
    """Raised when an integrated state leaves the physical state space."""
    def __init__(self, step: int, reason: str):
        super().__init__(f"integration unstable at step {step}: {reason}")
        self.step = step
        self.reason = reason


class SteadyStateError(RuntimeError):
    """Raised when the Liouvillian kernel is not one-dimensional."""
    def __init__(self, kernel_dim: int, gap: float):
        super().__init__(
            f"Liouvillian kernel has dimension {kernel_dim} "
            f"(smallest singular values gap {gap:.3e})"
        )
        self.kernel_dim = kernel_dim
        self.gap = gap


class NotConvergedError(RuntimeError):
    """Raised when the steady-state criterion never holds on a trajectory."""


@dataclass(frozen=True)
class RefrigeratorParams:
    """Class containing the system and bath parameters of the refrigerator.

    All quantities are dimensionless. Bath j has coupling alpha_j, cutoff
    Omega_j and temperature T_j; qubit j has gap E_j.

    Raises:
        ValueError: for nonpositive parameters, a refrigerator that is not
            self-contained (E3 != E2 - E1) or unordered temperatures.
            g = 0 is accepted in the weak regime only, where it decouples
            the qubits.
    """
    E1: float
    E2: float
    E3: float
    g: float
    T1: float
    T2: float
    T3: float
    alpha1: float
    alpha2: float
    alpha3: float
    regime: Regime
    Omega1: float = 1e4
    Omega2: float = 1e4
    Omega3: float = 1e4

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        for name in ("E1", "E2", "E3", "T1", "T2", "T3",
                     "alpha1", "alpha2", "alpha3",
                     "Omega1", "Omega2", "Omega3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, "
                                 f"got {getattr(self, name)}")
        if self.g < 0 or (self.regime == Regime.STRONG and self.g == 0):
            raise ValueError(f"g must be positive, or zero in the weak "
                             f"regime, got {self.g}")
        if abs(self.E3 - (self.E2 - self.E1)) > 1e-12:
            raise ValueError(
                f"refrigerator is not self-contained: E3={self.E3} but "
                f"E2-E1={self.E2 - self.E1}"
            )
        if not self.T1 <= self.T2 <= self.T3:
            raise ValueError(
                f"bath temperatures must satisfy T1 <= T2 <= T3, got "
                f"{self.T1}, {self.T2}, {self.T3}"
            )
        if self.T2 == self.T3:
            logger.warning("T2 == T3: no thermal gradient drives the "
                           "refrigerator")
        if (self.regime == Regime.WEAK
                and self.g > 0.1 * min(self.energies)):
            logger.warning("weak regime with g=%s above 0.1*min(E_j); the "
                           "local master equation may be inaccurate", self.g)

    @property
    def energies(self) -> Tuple[float, float, float]:
        return self.E1, self.E2, self.E3

    @property
    def temperatures(self) -> Tuple[float, float, float]:
        return self.T1, self.T2, self.T3

    def bath(self, j: int) -> Tuple[float, float, float]:
        """(alpha_j, Omega_j, beta_j) of bath j in {1, 2, 3}."""
        alpha = (self.alpha1, self.alpha2, self.alpha3)[j - 1]
        cutoff = (self.Omega1, self.Omega2, self.Omega3)[j - 1]
        return alpha, cutoff, 1 / self.temperatures[j - 1]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.value
        return out


@dataclass(frozen=True)
class LindbladTerm:
    """One dissipative channel: rate gamma and jump operator.

    Args:
        rate: gamma_j(omega), nonnegative
        jump: 8x8 jump operator
        omega: transition frequency the rate was evaluated at
        bath: index of the bath driving the channel
    """
    rate: float
    jump: np.ndarray
    omega: float
    bath: int

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"rate must be nonnegative, got {self.rate}")


@dataclass
class Trajectory:
    """Sampled solution of the master equation.

    Args:
        times: strictly increasing sample times starting at 0
        states: density matrices at the sample times
        cold_temps: temperature of the cold qubit at the sample times
    """
    times: np.ndarray
    states: List[DensityMatrix]
    cold_temps: np.ndarray


def build_hamiltonian(p: RefrigeratorParams) -> np.ndarray:
    """H_S = H_loc + H_int as an 8x8 Hermitian matrix."""
    h_loc = sum(e / 2 * embed(SIGMA_Z, j)
                for j, e in enumerate(p.energies, start=1))
    swap = outer(basis_ket("010"), basis_ket("101"))
    return h_loc + p.g * (swap + swap.conj().T)


def ground_population(E: float, T: float) -> float:
    """Gibbs population r of |0> for gap E at temperature T.

    Raises:
        ValueError: for nonpositive E or T
    """
    if not (E > 0 and T > 0):
        raise ValueError(f"E and T must be positive, got E={E}, T={T}")
    # e^{E/2T} / (e^{E/2T} + e^{-E/2T}) = 1 / (1 + e^{-E/T})
    return float(expit(E / T))


def thermal_qubit(E: float, T: float) -> DensityMatrix:
    """Gibbs state diag(r, 1 - r) of a qubit with gap E at temperature T.

    Raises:
        ValueError: for nonpositive E or T
    """
    r = ground_population(E, T)
    return DensityMatrix(np.diag([r, 1 - r]).astype(complex))


def temperature_from_population(r: float, E: float) -> float:
    """Inverts the Gibbs formula: T = E / ln(r / (1 - r)).

    Raises:
        ValueError: if r is not in (0.5, 1) or E is not positive
    """
    if not E > 0:
        raise ValueError(f"E must be positive, got {E}")
    if not 0.5 < r < 1:
        raise ValueError(
            f"ground population {r} does not correspond to a positive "
            f"finite temperature"
        )
    return float(E / (np.log(r) - np.log1p(-r)))


def bose_occupation(omega: float, beta: float) -> float:
    """n(omega, beta) = 1 / (e^{omega beta} - 1); zero once the exponent
    would overflow.

    Raises:
        ValueError: for nonpositive omega or beta
    """
    if not (omega > 0 and beta > 0):
        raise ValueError(f"omega and beta must be positive, "
                         f"got {omega}, {beta}")
    x = omega * beta
    if x >= OVERFLOW_EXPONENT:
        return 0.0
    return float(1 / np.expm1(x))


def ohmic_density(omega: float, alpha: float, Omega: float) -> float:
    """J(omega) = alpha omega e^{-omega / Omega}.

    Raises:
        ValueError: for nonpositive omega
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return float(alpha * omega * np.exp(-omega / Omega))


def rate(omega: float, alpha: float, Omega: float, beta: float) -> float:
    """Transition rate gamma(omega): emission for omega > 0, absorption for
    omega < 0.

    Raises:
        ValueError: if omega == 0
    """
    if omega == 0:
        raise ValueError("rate is undefined at zero transition frequency")
    w = abs(omega)
    j = ohmic_density(w, alpha, Omega)
    n = bose_occupation(w, beta)
    return j * (1 + n) if omega > 0 else j * n


def strong_jump_operators(p: RefrigeratorParams
                          ) -> List[Tuple[int, float, np.ndarray]]:
    """(bath, omega_j, L_j(omega_j)) for the nine strong-coupling
    transitions.

    Each operator is the part of sigma_b^- (b the bath index) that lowers
    the energy of H_S by exactly omega_j, written with
    |+-> = (|101> +- |010>) / sqrt(2).
    """
    k = {bits: basis_ket(bits) for bits in
         ("000", "001", "011", "100", "110", "111")}
    plus = (basis_ket("101") + basis_ket("010")) / math.sqrt(2)
    minus = (basis_ket("101") - basis_ket("010")) / math.sqrt(2)
    s = 1 / math.sqrt(2)
    e1, e2, e3 = p.energies
    g = p.g
    return [
        (1, e1, outer(k["011"], k["111"]) + outer(k["000"], k["100"])),
        (1, e1 + g, s * (outer(k["001"], plus) - outer(minus, k["110"]))),
        (1, e1 - g, s * (outer(plus, k["110"]) + outer(k["001"], minus))),
        (2, e2, outer(k["100"], k["110"]) + outer(k["001"], k["011"])),
        (2, e2 + g, s * (outer(k["000"], plus) + outer(minus, k["111"]))),
        (2, e2 - g, s * (outer(plus, k["111"]) - outer(k["000"], minus))),
        (3, e3, outer(k["110"], k["111"]) + outer(k["000"], k["001"])),
        (3, e3 + g, s * (outer(k["100"], plus) - outer(minus, k["011"]))),
        (3, e3 - g, s * (outer(plus, k["011"]) + outer(k["100"], minus))),
    ]


def lindblad_terms_strong(p: RefrigeratorParams) -> List[LindbladTerm]:
    """Eighteen channels: each transition and its inverse process.

    Raises:
        ValueError: if p is not in the strong regime or a transition
            frequency vanishes (E_j == g)
    """
    if p.regime != Regime.STRONG:
        raise ValueError(f"strong-coupling channels requested for "
                         f"{p.regime.value} regime")
    terms = []
    for index, (bath, omega, jump) in enumerate(strong_jump_operators(p),
                                                start=1):
        if omega == 0:
            raise ValueError(
                f"transition {index} is degenerate (omega=0); E_j and g "
                f"must differ"
            )
        alpha, cutoff, beta = p.bath(bath)
        terms.append(LindbladTerm(rate(omega, alpha, cutoff, beta), jump,
                                  omega, bath))
        terms.append(LindbladTerm(rate(-omega, alpha, cutoff, beta),
                                  jump.conj().T, -omega, bath))
    return terms


def lindblad_terms_weak(p: RefrigeratorParams) -> List[LindbladTerm]:
    """Six local channels: sigma_j^- at gamma_j(E_j) and sigma_j^+ at
    gamma_j(-E_j).

    Raises:
        ValueError: if p is not in the weak regime
    """
    if p.regime != Regime.WEAK:
        raise ValueError(f"weak-coupling channels requested for "
                         f"{p.regime.value} regime")
    terms = []
    for j, e in enumerate(p.energies, start=1):
        alpha, cutoff, beta = p.bath(j)
        terms.append(LindbladTerm(rate(e, alpha, cutoff, beta),
                                  embed(SIGMA_MINUS, j), e, j))
        terms.append(LindbladTerm(rate(-e, alpha, cutoff, beta),
                                  embed(SIGMA_PLUS, j), -e, j))
    return terms


def lindblad_terms(p: RefrigeratorParams) -> List[LindbladTerm]:
    if p.regime == Regime.STRONG:
        return lindblad_terms_strong(p)
    return lindblad_terms_weak(p)


def superoperator(hamiltonian: np.ndarray,
                  terms: List[LindbladTerm]) -> np.ndarray:
    """GKSL generator on column-stacked states."""
    dim = hamiltonian.shape[0]
    eye = np.eye(dim)
    out = -1j * (np.kron(eye, hamiltonian) - np.kron(hamiltonian.T, eye))
    for term in terms:
        jump = term.jump
        jump_sq = jump.conj().T @ jump
        out += term.rate * (np.kron(jump.conj(), jump)
                            - 0.5 * np.kron(eye, jump_sq)
                            - 0.5 * np.kron(jump_sq.T, eye))
    return out


@lru_cache(maxsize=16)
def liouvillian(p: RefrigeratorParams) -> np.ndarray:
    """64x64 generator L with d vec(rho)/dt = L vec(rho). Read-only."""
    out = superoperator(build_hamiltonian(p), lindblad_terms(p))
    out.setflags(write=False)
    return out


def vectorize(m: np.ndarray) -> np.ndarray:
    """Column-stacks a matrix."""
    return np.asarray(m).reshape(-1, order="F")


def unvectorize(vec: np.ndarray) -> np.ndarray:
    dim = math.isqrt(vec.size)
    return vec.reshape(dim, dim, order="F")


def generator_residual(generator: np.ndarray, rho) -> float:
    """||L rho||_F."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else rho
    return float(np.linalg.norm(generator @ vectorize(m)))


def initial_state(p: RefrigeratorParams) -> DensityMatrix:
    """tau_1 (x) tau_2 (x) tau_3 at the bath temperatures."""
    return DensityMatrix(tensor_all(
        [thermal_qubit(e, t).matrix
         for e, t in zip(p.energies, p.temperatures)]
    ))


def cold_temperature(rho: DensityMatrix, p: RefrigeratorParams) -> float:
    r = reduced_matrix(rho.matrix, 1)[0, 0].real
    return temperature_from_population(r, p.E1)


def local_temperatures(rho: DensityMatrix, p: RefrigeratorParams
                       ) -> Tuple[float, float, float]:
    """Temperatures of the three reduced states; NaN where a reduced
    state is not a positive-temperature Gibbs state."""
    temps = []
    for j, e in enumerate(p.energies, start=1):
        r = reduced_matrix(rho.matrix, j)[0, 0].real
        try:
            temps.append(temperature_from_population(r, e))
        except ValueError:
            temps.append(float("nan"))
    return temps[0], temps[1], temps[2]


def physicality(rho) -> Tuple[float, float, float]:
    """(|Tr rho - 1|, min eigenvalue, largest local coherence)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    trace_err = float(abs(np.trace(m) - 1))
    min_eig = float(linalg.eigvalsh((m + m.conj().T) / 2)[0])
    coherence = max(abs(reduced_matrix(m, j)[0, 1]) for j in (1, 2, 3))
    return trace_err, min_eig, float(coherence)


def rk4_propagator(generator: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step for the linear system dx/dt = L x.

    For a constant generator the four stages collapse to the degree-4
    Taylor polynomial of dt L.
    """
    step = dt * np.asarray(generator)
    out = np.eye(step.shape[0], dtype=complex)
    term = out
    for k in range(1, 5):
        term = term @ step / k
        out = out + term
    return out


def evolve(p: RefrigeratorParams, t_end: float,
           dt: Optional[float] = None,
           sample_every: Optional[int] = None) -> Trajectory:
    """Integrates the master equation from tau_1 (x) tau_2 (x) tau_3.

    Args:
        p: refrigerator parameters
        t_end: final time; 0 returns the initial state only
        dt: RK4 step, defaults to 0.005 (strong) or 0.01 (weak)
        sample_every: steps between stored samples; defaults to keeping
            at most MAX_STORED_STATES samples. The final step is always
            stored.
    Returns:
        Trajectory with the sampled states and cold-qubit temperatures
    Raises:
        ValueError: for negative t_end, nonpositive dt or sample_every,
            or dt above 0.01 for a Hamiltonian with |eigenvalue| >= 5
        IntegrationError: if a sampled state is not a valid density matrix
    """
    if dt is None:
        dt = DEFAULT_DT[p.regime]
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end >= 0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    hamiltonian = build_hamiltonian(p)
    fastest = float(np.max(np.abs(linalg.eigvalsh(hamiltonian))))
    if fastest >= FAST_EIGENVALUE and dt > FAST_MAX_DT:
        raise ValueError(
            f"dt={dt} too coarse for Hamiltonian eigenvalue {fastest:.3g}; "
            f"use dt <= {FAST_MAX_DT}"
        )
    n_steps = int(round(t_end / dt))
    if sample_every is None:
        sample_every = max(1, math.ceil(n_steps / MAX_STORED_STATES))
    if sample_every < 1:
        raise ValueError(f"sample_every must be positive, got {sample_every}")

    rho0 = initial_state(p)
    times = [0.0]
    states = [rho0]
    cold_temps = [cold_temperature(rho0, p)]
    propagator = rk4_propagator(liouvillian(p), dt)
    # a column-stacked vector reshaped in C order is the transposed matrix
    vec = vectorize(rho0.matrix)
    max_correction = 0.0
    for step in range(1, n_steps + 1):
        vec = propagator @ vec
        flipped = vec.reshape(DIM, DIM)
        fixed = (flipped + flipped.conj().T) / 2
        fixed /= np.trace(fixed).real
        correction = np.abs(fixed - flipped).max()
        if correction > max_correction:
            max_correction = correction
            if correction > HERMITIZE_WARN:
                logger.warning("step %d: hermitize/renormalize correction "
                               "%.3e", step, correction)
        vec = fixed.ravel()
        if step % sample_every == 0 or step == n_steps:
            matrix = fixed.T
            if not np.all(np.isfinite(matrix)):
                raise IntegrationError(step, "non-finite state")
            try:
                state = DensityMatrix(matrix)
            except ValueError as e:
                raise IntegrationError(step, str(e)) from e
            times.append(step * dt)
            states.append(state)
            cold_temps.append(cold_temperature(state, p))
    logger.debug("largest per-step drift correction %.3e", max_correction)
    logger.info("integrated %d steps of dt=%g, stored %d states",
                n_steps, dt, len(states))
    return Trajectory(np.array(times), states, np.array(cold_temps))


def detect_steady_time(traj: Trajectory, p: RefrigeratorParams,
                       tol: float = STEADY_TOL) -> float:
    """Earliest sample time from which ||L rho||_F <= tol holds at every
    later sample.

    Raises:
        ValueError: for nonpositive tol
        NotConvergedError: if the criterion fails at the last sample
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    generator = liouvillian(p)
    residuals = np.array([generator_residual(generator, s)
                          for s in traj.states])
    above = np.nonzero(residuals > tol)[0]
    if len(above) == 0:
        return float(traj.times[0])
    last = above[-1]
    if last == len(residuals) - 1:
        raise NotConvergedError(
            f"not converged by t_end={traj.times[-1]:g}: residual "
            f"{residuals[-1]:.3e} > tol {tol:.1e}"
        )
    return float(traj.times[last + 1])


def steady_state_direct(p: RefrigeratorParams) -> DensityMatrix:
    """Steady state from the null space of the Liouvillian.

    Raises:
        SteadyStateError: if the kernel is not one-dimensional
    """
    generator = liouvillian(p)
    _, singular, vh = linalg.svd(generator)
    kernel_dim = int(np.sum(singular <= KERNEL_TOL))
    if kernel_dim != 1:
        raise SteadyStateError(kernel_dim, float(singular[-2]))
    logger.debug("Liouvillian gap: smallest nonzero singular value %.3e",
                 singular[-2])
    m = unvectorize(vh[-1].conj())
    m = m / np.trace(m)
    state = DensityMatrix.from_array(m)
    residual = generator_residual(generator, state)
    if residual > STEADY_RESIDUAL_TOL:
        logger.warning("steady state residual %.3e above %.0e", residual,
                       STEADY_RESIDUAL_TOL)
    return state
