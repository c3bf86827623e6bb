"""Maximum-entropy reconstruction of an estimator distribution from its
moments, and the percentiles of the reconstruction.

The distribution lives on a uniform grid. Entropy is maximised through
the unconstrained dual
    psi(lambda) = ln sum_k exp(-sum_n lambda_n z_k^n) + sum_n lambda_n mu_n
minimised by damped Newton iteration, where z = (x - m_1) / sigma is the
standardised grid and mu_n the standardised moments.
"""

from dataclasses import dataclass, field
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, stats
from scipy.special import comb, logsumexp

from chiller.constants import (MAXENT_K_SIGMA, MAXENT_M_MAX, MAXENT_N_POINTS,
                               PERCENTILE_TOL)
from chiller.larch.thermometry import EstimatorModel, MomentVector, moments

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 101
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 200
MOMENT_TOL = 1e-6
ARMIJO = 1e-4
PERCENTILE_LEVELS = np.arange(1, 100) / 100


class MaxEntError(RuntimeError):
    """Raised when the dual Newton iteration fails, typically because the
    moments are infeasible on the grid."""
    def __init__(self, message: str, residuals: np.ndarray, iterations: int):
        super().__init__(f"{message} after {iterations} iterations; "
                         f"moment residuals {np.array2string(residuals)}")
        self.residuals = residuals
        self.iterations = iterations


class PercentileConvergenceError(RuntimeError):
    """Raised when successive percentile tables never agree within tol.

    Args:
        differences: max absolute difference for each comparison made
        table: fallback table fitted with the first number of moments
        order: number of moments behind the fallback table
    """
    def __init__(self, differences: List[float],
                 table: Optional["PercentileTable"],
                 order: int):
        super().__init__(
            "percentiles did not converge; max differences "
            + ", ".join(f"{d:.3e}" for d in differences)
        )
        self.differences = differences
        self.table = table
        self.order = order


@dataclass(frozen=True)
class SupportGrid:
    """Uniform grid [lo, hi] with n_points points.

    Raises:
        ValueError: if lo >= hi or n_points < 101
    """
    lo: float
    hi: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"support needs lo < hi, got [{self.lo}, "
                             f"{self.hi}]")
        if self.n_points < MIN_GRID_POINTS:
            raise ValueError(f"support needs at least {MIN_GRID_POINTS} "
                             f"points, got {self.n_points}")
        points = np.linspace(self.lo, self.hi, self.n_points)
        points.setflags(write=False)
        object.__setattr__(self, "points", points)


@dataclass(frozen=True)
class MaxEntFit:
    """Class containing a reconstructed distribution.

    Args:
        grid: support
        weights: probability mass at each grid point
        multipliers: lambda_1..lambda_M in standardised coordinates
        log_partition: lambda_0, so that
            ln w_k + lambda_0 + sum_n lambda_n z_k^n = 0
        center, scale: z = (x - center) / scale
        entropy: Shannon entropy of the weights in bits
        moment_residuals: fitted minus target raw moments
        iterations: Newton iterations used
    """
    grid: SupportGrid
    weights: np.ndarray
    multipliers: np.ndarray
    log_partition: float
    center: float
    scale: float
    entropy: float
    moment_residuals: np.ndarray
    iterations: int

    def standardized_points(self) -> np.ndarray:
        return (self.grid.points - self.center) / self.scale


@dataclass(frozen=True)
class PercentileTable:
    """The 1st through 99th percentiles.

    Raises:
        ValueError: if there are not 99 values or they decrease
    """
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values",
                           tuple(float(v) for v in self.values))
        if len(self.values) != 99:
            raise ValueError(f"percentile table needs 99 values, got "
                             f"{len(self.values)}")
        if np.any(np.diff(self.values) < 0):
            raise ValueError("percentiles must be nondecreasing")

    def at(self, i: int) -> float:
        """The i-th percentile, i in 1..99."""
        if not 1 <= i <= 99:
            raise ValueError(f"percentile index must be in 1..99, got {i}")
        return self.values[i - 1]

    def shifted(self, c: float) -> "PercentileTable":
        return PercentileTable(tuple(v + c for v in self.values))


def default_support(moments: MomentVector, k: float = MAXENT_K_SIGMA,
                    n_points: int = MAXENT_N_POINTS) -> SupportGrid:
    """[m_1 - k sigma, m_1 + k sigma] with sigma^2 = m_2 - m_1^2.

    Raises:
        ValueError: if the variance is degenerate or k is not positive
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    variance = moments.variance
    if variance <= 1e-14:
        raise ValueError(f"degenerate variance {variance:.3e}: zero-width "
                         f"support")
    sigma = np.sqrt(variance)
    return SupportGrid(moments.mean - k * sigma, moments.mean + k * sigma,
                       n_points)


def standardize(moments: MomentVector, center: float, scale: float
                ) -> np.ndarray:
    """Moments of (x - center) / scale from raw moments of x."""
    raw = (1.0,) + moments.values
    out = []
    for n in range(1, moments.order + 1):
        total = sum(comb(n, k, exact=True) * raw[k] * (-center) ** (n - k)
                    for k in range(n + 1))
        out.append(total / scale ** n)
    return np.array(out)


def maxent_fit(moments: MomentVector, grid: SupportGrid,
               max_iter: int = NEWTON_MAX_ITER,
               tol: float = NEWTON_TOL) -> MaxEntFit:
    """Entropy-maximising weights on the grid matching all given moments.

    Args:
        moments: raw moments m_1..m_M
        grid: support grid
        max_iter: Newton iteration limit
        tol: stop once every standardised moment residual is below tol
    Returns:
        MaxEntFit
    Raises:
        MaxEntError: if the Hessian is singular, the line search stalls,
            the iteration limit is reached or the fitted raw moments miss
            their targets by more than 1e-6
    """
    order = moments.order
    center = moments.mean
    if order >= 2 and moments.variance > 0:
        scale = float(np.sqrt(moments.variance))
    else:
        scale = (grid.hi - grid.lo) / 2
    z = (grid.points - center) / scale
    features = z[:, None] ** np.arange(1, order + 1)
    target = standardize(moments, center, scale)

    def dual(lam):
        return logsumexp(-features @ lam) + lam @ target

    lam = np.zeros(order)
    iterations = 0
    while True:
        logits = -features @ lam
        log_partition = logsumexp(logits)
        weights = np.exp(logits - log_partition)
        expected = weights @ features
        grad = target - expected
        if np.max(np.abs(grad)) <= tol:
            break
        if iterations >= max_iter:
            raise MaxEntError("Newton iteration limit reached", grad,
                              iterations)
        centered = features - expected
        hessian = centered.T @ (weights[:, None] * centered)
        try:
            step = linalg.solve(hessian, -grad, assume_a="pos")
        except (linalg.LinAlgError, ValueError) as e:
            raise MaxEntError(f"Hessian lost rank ({e})", grad,
                              iterations) from e
        if not np.all(np.isfinite(step)):
            raise MaxEntError("non-finite Newton step", grad, iterations)
        current = log_partition + lam @ target
        slope = grad @ step
        t = 1.0
        while True:
            candidate = lam + t * step
            value = dual(candidate)
            if (value <= current + ARMIJO * t * slope
                    or abs(value - current) <= 1e-15 * max(1.0,
                                                           abs(current))):
                break
            t /= 2
            if t < 1e-12:
                raise MaxEntError("line search stalled", grad, iterations)
        lam = candidate
        iterations += 1
        logger.debug("newton %d: step %.2e, max residual %.3e", iterations,
                     t, np.max(np.abs(grad)))

    powers = grid.points[:, None] ** np.arange(1, order + 1)
    residuals = weights @ powers - np.asarray(moments.values)
    if np.max(np.abs(residuals)) > MOMENT_TOL:
        raise MaxEntError("raw moments not reproduced", residuals,
                          iterations)
    return MaxEntFit(grid=grid, weights=weights, multipliers=lam,
                     log_partition=float(log_partition), center=center,
                     scale=scale,
                     entropy=float(stats.entropy(weights, base=2)),
                     moment_residuals=residuals, iterations=iterations)


def cdf(fit: MaxEntFit) -> np.ndarray:
    """Mid-cell CDF: F(x_k) = sum_{j<k} w_j + w_k / 2."""
    return np.cumsum(fit.weights) - fit.weights / 2


def percentiles(fit: MaxEntFit) -> PercentileTable:
    """Percentiles by linear interpolation of the CDF between grid
    points."""
    support = fit.weights > 0
    values = np.interp(PERCENTILE_LEVELS, cdf(fit)[support],
                       fit.grid.points[support])
    return PercentileTable(tuple(values))


def converged_percentiles(model: EstimatorModel, M_start: int = 2,
                          tol: float = PERCENTILE_TOL,
                          M_max: int = MAXENT_M_MAX,
                          k_sigma: float = MAXENT_K_SIGMA,
                          n_points: int = MAXENT_N_POINTS,
                          repetitions: int = 1,
                          grid: Optional[SupportGrid] = None
                          ) -> Tuple[PercentileTable, int]:
    """Percentiles from M and M+1 moments, increasing M until the tables
    agree within tol.

    On failure the error carries the M_start table. Higher-order fits of
    a few-point estimator push their mass against the support edges and
    move with the grid; the M_start fit does not.

    Args:
        model: estimator model
        M_start: first number of moments
        tol: max absolute difference between successive tables
        M_max: largest number of moments tried
        k_sigma, n_points: default support construction
        repetitions: N-shot sample mean when > 1
        grid: explicit support, overriding k_sigma and n_points
    Returns:
        the converged table and the number of moments behind it
    Raises:
        ValueError: if M_start < 2 or M_max <= M_start
        PercentileConvergenceError: if no pair of successive tables agrees;
            its table is the M_start fit, or None if that fit failed
    """
    if M_start < 2:
        raise ValueError(f"M_start must be at least 2, got {M_start}")
    if M_max <= M_start:
        raise ValueError(f"M_max={M_max} leaves nothing to compare with "
                         f"M_start={M_start}")
    all_moments = moments(model, M_max, repetitions)
    if grid is None:
        grid = default_support(all_moments.truncate(2), k_sigma, n_points)

    def table(order: int) -> PercentileTable:
        return percentiles(maxent_fit(all_moments.truncate(order), grid))

    try:
        first = table(M_start)
    except MaxEntError as e:
        raise PercentileConvergenceError([], None, M_start) from e
    previous = first
    differences: List[float] = []
    for order in range(M_start + 1, M_max + 1):
        try:
            current = table(order)
        except MaxEntError as e:
            logger.warning("MaxEnt fit with %d moments failed: %s", order, e)
            raise PercentileConvergenceError(differences, first,
                                             M_start) from e
        diff = float(np.max(np.abs(np.subtract(current.values,
                                               previous.values))))
        differences.append(diff)
        logger.debug("T=%g: M=%d vs M=%d max difference %.3e", model.T,
                     order - 1, order, diff)
        if diff <= tol:
            return current, order
        previous = current
    raise PercentileConvergenceError(differences, first, M_start)
