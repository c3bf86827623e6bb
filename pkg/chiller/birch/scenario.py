"""End-to-end refrigerator scenario: integrate the dynamics, pick sample
points along the cold-qubit cooling curve and compare the temperature
estimates at each point with the initial one through percentile patches.
"""

from dataclasses import asdict, dataclass, field, replace
import logging
import math
import os
import sys
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
import scipy

from chiller.constants import (MAX_STORED_STATES, MAXENT_K_SIGMA,
                               MAXENT_M_MAX, MAXENT_N_POINTS, PERCENTILE_TOL,
                               STEADY_TOL)
from chiller.larch.compare import (CoolingReport, Verdict, compare_patches,
                                   cooling_report, report_frame,
                                   std_patch)
from chiller.larch.maxent import (PercentileConvergenceError,
                                  PercentileTable, converged_percentiles)
from chiller.larch.thermometry import EstimatorModel, moments, mvu_estimator
from chiller.poplar.functions.io import (read_json, setup_directories,
                                         write_csv, write_json)
from chiller.spruce.dynamics import (KERNEL_TOL, NotConvergedError,
                                     RefrigeratorParams, Regime, Trajectory,
                                     cold_temperature, detect_steady_time,
                                     evolve, local_temperatures, physicality,
                                     steady_state_direct)

logger = logging.getLogger(__name__)

PRESET_DIR = os.path.join(os.path.dirname(__file__), "presets")
# steady temperatures closer than this to T1 mean nothing was cooled
COOLING_TOL = 1e-9
FIGURE_NAMES = {Regime.STRONG: "figure1a", Regime.WEAK: "figure2a"}
NO_TARGETS = "no cooling targets found"


@dataclass(frozen=True)
class MaxEntSettings:
    """Class containing the MaxEnt and percentile convergence controls.

    Args:
        k_sigma: support half-width in standard deviations
        n_points: number of grid points
        conv_tol: agreement required between successive percentile tables
        M_start: first number of moments
        M_max: largest number of moments tried
    """
    k_sigma: float = MAXENT_K_SIGMA
    n_points: int = MAXENT_N_POINTS
    conv_tol: float = PERCENTILE_TOL
    M_start: int = 2
    M_max: int = MAXENT_M_MAX

    def __post_init__(self):
        if not (self.k_sigma > 0 and self.conv_tol > 0):
            raise ValueError("k_sigma and conv_tol must be positive")
        if self.M_start < 2 or self.M_max <= self.M_start:
            raise ValueError(f"need 2 <= M_start < M_max, got "
                             f"{self.M_start}, {self.M_max}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Class containing everything needed to repeat a run.

    Args:
        params: refrigerator parameters
        t_end: integration horizon
        dt: RK4 step
        sample_every: integration steps between stored states
        steady_tol: generator residual defining the steady state
        n_sample_points: points compared with the initial estimate, the
            last one being the steady state
        temp_spacing: spacing of the transient target temperatures
        maxent: MaxEnt settings
        repetitions: number of single-shot estimates averaged per estimate
        seed_label: free-form run label
    Raises:
        ValueError: for nonpositive controls
    """
    params: RefrigeratorParams
    t_end: float
    dt: float
    sample_every: int = 1
    steady_tol: float = STEADY_TOL
    n_sample_points: int = 9
    temp_spacing: float = 0.05
    maxent: MaxEntSettings = field(default_factory=MaxEntSettings)
    repetitions: int = 1
    seed_label: str = ""

    def __post_init__(self):
        for name in ("t_end", "dt", "steady_tol", "temp_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, "
                                 f"got {getattr(self, name)}")
        for name in ("sample_every", "n_sample_points", "repetitions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer, "
                                 f"got {getattr(self, name)}")
        n_stored = self.t_end / self.dt / self.sample_every
        if n_stored > MAX_STORED_STATES:
            logger.warning("config stores %d states; raise sample_every to "
                           "keep below %d", n_stored, MAX_STORED_STATES)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        params = RefrigeratorParams(**d.pop("params"))
        maxent = MaxEntSettings(**d.pop("maxent", {}))
        return cls(params=params, maxent=maxent, **d)

    @classmethod
    def from_json(cls, filepath: str) -> "ScenarioConfig":
        return cls.from_dict(read_json(filepath))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        return out

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Copy with the non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items()
                                if v is not None})


def load_preset(regime: str) -> ScenarioConfig:
    """Shipped configuration for the 'strong' or 'weak' regime.

    Raises:
        ValueError: for an unknown regime
    """
    regime = Regime(regime).value
    return ScenarioConfig.from_json(os.path.join(PRESET_DIR,
                                                 regime + ".json"))


@dataclass
class PointRecord:
    """Class containing the comparison at one sample point.

    Args:
        index: 1-based position along the cooling curve
        T_target: cold-qubit temperature sought
        steady: True for the steady-state point
        time: time the target was reached, None if it never was
        M_used: moments behind the final percentile table
        converged: whether the final percentiles converged
        cooling: percentile comparison with the initial estimate
        std_verdict: verdict of the one-standard-deviation patches
        error: reason the point is incomplete, if it is
    """
    index: int
    T_target: float
    steady: bool
    time: Optional[float] = None
    M_used: Optional[int] = None
    converged: bool = False
    cooling: Optional[CoolingReport] = None
    std_verdict: Optional[Verdict] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "T_target": self.T_target,
            "steady": self.steady,
            "time": self.time,
            "M_used": self.M_used,
            "converged": self.converged,
            "std_verdict": (self.std_verdict.value
                            if self.std_verdict else None),
            "error": self.error,
        }
        if self.cooling is not None:
            out["cooled"] = self.cooling.cooled
            out["first_cooling_percentile"] = \
                self.cooling.first_cooling_percentile
            out["magnitudes"] = list(self.cooling.magnitudes)
            out["final_percentiles"] = list(
                self.cooling.final_percentiles.values
            )
        return out


@dataclass
class RunReport:
    """Class containing the outcome of run_scenario.

    Args:
        config: the configuration that produced the report
        steady_temperature: cold-qubit temperature of the steady state
        steady_time: detected time the steady state is reached
        initial_percentiles: table of the estimate at T1
        initial_M_used: moments behind the initial table
        points: one record per sample point
        trajectory: the integrated trajectory, not serialized
        note: summary message for runs without sample points
        provenance: versions and tolerances
    """
    config: ScenarioConfig
    steady_temperature: Optional[float] = None
    steady_time: Optional[float] = None
    initial_percentiles: Optional[PercentileTable] = None
    initial_M_used: Optional[int] = None
    points: List[PointRecord] = field(default_factory=list)
    trajectory: Optional[Trajectory] = None
    note: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def failed_points(self) -> List[PointRecord]:
        return [point for point in self.points if point.error is not None]

    def to_dict(self) -> dict:
        initial = self.initial_percentiles
        return _json_safe({
            "config": self.config.to_dict(),
            "steady_temperature": self.steady_temperature,
            "steady_time": self.steady_time,
            "initial_percentiles": list(initial.values) if initial else None,
            "initial_M_used": self.initial_M_used,
            "points": [point.to_dict() for point in self.points],
            "note": self.note,
            "provenance": self.provenance,
        })


def _json_safe(obj):
    """Replaces NaN and infinities with None, recursively."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def provenance(config: ScenarioConfig) -> dict:
    return {
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "tolerances": {
            "steady_tol": config.steady_tol,
            "kernel_tol": KERNEL_TOL,
            "percentile_tol": config.maxent.conv_tol,
        },
    }


def target_temperatures(T1: float, T_steady: float, n_points: int,
                        spacing: float) -> List[float]:
    """T1 - k spacing for k = 1..n_points-1, then T_steady.

    Returns:
        an empty list if T_steady is not below T1
    """
    if T_steady >= T1 - COOLING_TOL:
        return []
    return [T1 - k * spacing for k in range(1, n_points)] + [T_steady]


def first_crossing(traj: Trajectory, target: float) -> Optional[float]:
    """Time of the first sample with cold temperature <= target."""
    below = np.nonzero(traj.cold_temps <= target)[0]
    if len(below) == 0:
        return None
    return float(traj.times[below[0]])


def fit_percentiles(model: EstimatorModel, config: ScenarioConfig):
    """Converged percentiles, falling back to the M_start table.

    Returns:
        (table, M_used, converged, error message)
    """
    settings = config.maxent
    try:
        table, M_used = converged_percentiles(
            model, M_start=settings.M_start, tol=settings.conv_tol,
            M_max=settings.M_max, k_sigma=settings.k_sigma,
            n_points=settings.n_points, repetitions=config.repetitions,
        )
        return table, M_used, True, None
    except PercentileConvergenceError as e:
        logger.warning("T=%g: %s", model.T, e)
        message = f"T={model.T:g}: {e}; reporting the {e.order}-moment table"
        return e.table, e.order, False, message


def evaluate_point(record: PointRecord, initial: EstimatorModel,
                   initial_table: Optional[PercentileTable],
                   config: ScenarioConfig) -> None:
    """Fills in the comparison of one reached sample point."""
    final = mvu_estimator(config.params.E1, record.T_target)
    table, record.M_used, record.converged, error = \
        fit_percentiles(final, config)
    if error is not None:
        record.error = error
    if table is not None and initial_table is not None:
        record.cooling = cooling_report(initial_table, table)
    record.std_verdict = compare_patches(
        std_patch(moments(initial, 2, config.repetitions)),
        std_patch(moments(final, 2, config.repetitions)),
    )


def run_scenario(config: ScenarioConfig) -> RunReport:
    """Integrates the refrigerator and compares the cold-qubit temperature
    estimate at each sample point with the initial one.

    Failures confined to one sample point (target never reached,
    percentiles not converged, steady state not detected) are recorded
    on that point and the remaining points are still evaluated.

    Args:
        config: ScenarioConfig
    Returns:
        RunReport
    Raises:
        IntegrationError: if the integration becomes unphysical
        SteadyStateError: if the steady state is not unique
    """
    p = config.params
    report = RunReport(config=config, provenance=provenance(config))

    sys.stdout.write(f"Integrating {p.regime.value} regime to "
                     f"t={config.t_end:g} ...\n")
    traj = evolve(p, config.t_end, config.dt, config.sample_every)
    report.trajectory = traj
    steady = steady_state_direct(p)
    report.steady_temperature = cold_temperature(steady, p)
    logger.info("steady cold temperature %.6f", report.steady_temperature)
    steady_error = None
    try:
        report.steady_time = detect_steady_time(traj, p, config.steady_tol)
        logger.info("steady state reached at t=%.2f", report.steady_time)
    except NotConvergedError as e:
        logger.warning("%s", e)
        steady_error = str(e)

    targets = target_temperatures(p.T1, report.steady_temperature,
                                  config.n_sample_points,
                                  config.temp_spacing)
    if not targets:
        report.note = NO_TARGETS
        sys.stdout.write(f"Steady temperature "
                         f"{report.steady_temperature:.4f} is not below "
                         f"T1={p.T1:g}: {NO_TARGETS}\n")
        return report

    sys.stdout.write("Fitting the initial temperature estimate ...\n")
    initial = mvu_estimator(p.E1, p.T1)
    initial_table, report.initial_M_used, _, initial_error = \
        fit_percentiles(initial, config)
    report.initial_percentiles = initial_table

    for index, target in enumerate(targets, start=1):
        is_steady = index == len(targets)
        record = PointRecord(index=index, T_target=target, steady=is_steady)
        report.points.append(record)
        if is_steady:
            record.time = report.steady_time
            if steady_error is not None:
                record.error = steady_error
        elif target <= report.steady_temperature:
            record.error = (f"target {target:.4f} is not above the steady "
                            f"temperature {report.steady_temperature:.4f}")
            logger.warning("point %d: %s", index, record.error)
            continue
        else:
            record.time = first_crossing(traj, target)
            if record.time is None:
                record.error = (f"target {target:.4f} not reached by "
                                f"t_end={config.t_end:g}")
                logger.warning("point %d: %s", index, record.error)
                continue
        sys.stdout.write(f"Point {index}: T={target:.4f}\n")
        evaluate_point(record, initial, initial_table, config)
        if initial_error is not None and record.error is None:
            record.error = initial_error
        if record.cooling is not None:
            logger.info("point %d (T=%.4f): cooled=%s first percentile %s",
                        index, target, record.cooling.cooled,
                        record.cooling.first_cooling_percentile)
    return report


def trajectory_table(traj: Trajectory, p: RefrigeratorParams
                     ) -> pd.DataFrame:
    rows = []
    for t, state in zip(traj.times, traj.states):
        T1, T2, T3 = local_temperatures(state, p)
        trace_err, min_eig, _ = physicality(state)
        rows.append([t, T1, T2, T3, trace_err, min_eig])
    return pd.DataFrame(rows, columns=["t", "T1", "T2", "T3", "trace_err",
                                       "min_eig"])


def figure_table(report: RunReport) -> pd.DataFrame:
    """Cold temperature along the trajectory plus the sample points."""
    traj = report.trajectory
    curve = pd.DataFrame({"kind": "trajectory", "t": traj.times,
                          "T1": traj.cold_temps})
    points = pd.DataFrame(
        [["point", point.time, point.T_target] for point in report.points
         if point.time is not None],
        columns=["kind", "t", "T1"],
    )
    return pd.concat([curve, points], ignore_index=True)


def emit_outputs(report: RunReport, out_dir: str) -> Dict[str, str]:
    """Writes the run's data files.

    Args:
        report: RunReport
        out_dir: output directory, created if missing
    Returns:
        manifest of file names to paths
    Raises:
        OSError: if a file cannot be written
    """
    setup_directories(out_dir)
    manifest = {}
    if report.trajectory is not None:
        p = report.config.params
        manifest["trajectory.csv"] = write_csv(
            trajectory_table(report.trajectory, p), "trajectory", out_dir
        )
        name = FIGURE_NAMES[p.regime]
        manifest[name + ".csv"] = write_csv(figure_table(report), name,
                                            out_dir)
    for point in report.points:
        if point.cooling is None:
            continue
        name = f"percentiles_{point.index}"
        manifest[name + ".csv"] = write_csv(report_frame(point.cooling),
                                            name, out_dir)
    manifest["report.json"] = write_json(report.to_dict(), "report",
                                         out_dir)
    logger.info("wrote %d files to %s", len(manifest), out_dir)
    return manifest
