"""Finite-precision comparison of two estimates through patches, and the
cooling report built from initial and final percentile tables.

A patch is the interval an estimate is believed to lie in. Two estimates
differ within finite precision only when their patches are disjoint.
"""

from dataclasses import dataclass
from enum import Enum
import logging
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from chiller.larch.maxent import PercentileTable
from chiller.larch.thermometry import MomentVector

logger = logging.getLogger(__name__)


class Verdict(Enum):
    """This class enumerates the outcomes of a patch comparison."""
    DECREASED = "decreased"
    INCREASED = "increased"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Patch:
    """Class containing a closed interval [lo, hi].

    Raises:
        ValueError: if lo > hi
    """
    lo: float
    hi: float
    label: str = ""

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"patch {self.label!r} has lo={self.lo} > "
                             f"hi={self.hi}")

    def contains(self, other: "Patch") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


@dataclass(frozen=True)
class CoolingReport:
    """Class containing the percentile comparison of an initial and a
    final temperature estimate.

    Args:
        initial_percentiles: table at the initial temperature
        final_percentiles: table at the final temperature
        magnitudes: Delta T_i = Q_i(initial) - Q_{100-i}(final), i = 1..49
        first_cooling_percentile: smallest i with Delta T_i > 0, if any
        cooled: whether any Delta T_i > 0
    """
    initial_percentiles: PercentileTable
    final_percentiles: PercentileTable
    magnitudes: Tuple[float, ...]
    first_cooling_percentile: Optional[int]
    cooled: bool

    def magnitude(self, i: int) -> float:
        if not 1 <= i <= 49:
            raise ValueError(f"cooling percentile must be in 1..49, got {i}")
        return self.magnitudes[i - 1]


def compare_patches(initial: Patch, final: Patch) -> Verdict:
    """DECREASED if the final patch lies entirely below the initial one,
    INCREASED if entirely above, INDETERMINATE if they overlap."""
    if initial.lo > final.hi:
        return Verdict.DECREASED
    if initial.hi < final.lo:
        return Verdict.INCREASED
    return Verdict.INDETERMINATE


def percentile_patch(table: PercentileTable, i: int) -> Patch:
    """[Q_i, Q_{100-i}].

    Raises:
        ValueError: if i is not in 1..49
    """
    if not 1 <= i <= 49:
        raise ValueError(f"patch percentile must be in 1..49, got {i}")
    return Patch(table.at(i), table.at(100 - i), label=f"Q{i}-Q{100 - i}")


def std_patch(moments: MomentVector, k: float = 1.0) -> Patch:
    """[m_1 - k sigma, m_1 + k sigma].

    Raises:
        ValueError: if k is negative or fewer than two moments are given
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    sigma = float(np.sqrt(moments.variance))
    return Patch(moments.mean - k * sigma, moments.mean + k * sigma,
                 label=f"mean+-{k:g}std")


def cooling_report(initial: PercentileTable,
                   final: PercentileTable) -> CoolingReport:
    """Cooling magnitudes for every percentile patch.

    The first cooling percentile scans i upward from 1.
    """
    magnitudes = tuple(initial.at(i) - final.at(100 - i)
                       for i in range(1, 50))
    cooling = [i for i, m in enumerate(magnitudes, start=1) if m > 0]
    first = cooling[0] if cooling else None
    for i, m in enumerate(magnitudes, start=1):
        verdict = compare_patches(percentile_patch(initial, i),
                                  percentile_patch(final, i))
        if (m > 0) != (verdict == Verdict.DECREASED):
            raise RuntimeError(f"percentile {i}: magnitude {m} disagrees "
                               f"with verdict {verdict}")
    if first is None:
        logger.debug("no percentile patch shows cooling")
    else:
        logger.debug("cooling first detected at percentile %d", first)
    return CoolingReport(initial_percentiles=initial,
                         final_percentiles=final, magnitudes=magnitudes,
                         first_cooling_percentile=first,
                         cooled=first is not None)


def report_frame(report: CoolingReport) -> pd.DataFrame:
    """Columns i, initial_Qi, final_Qi, delta_Ti; delta_Ti is empty for
    i >= 50."""
    delta = np.full(99, np.nan)
    delta[:49] = report.magnitudes
    return pd.DataFrame({
        "i": np.arange(1, 100),
        "initial_Qi": report.initial_percentiles.values,
        "final_Qi": report.final_percentiles.values,
        "delta_Ti": delta,
    })
