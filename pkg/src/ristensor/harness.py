"""Seeded Monte Carlo experiment engine.

Expands an experiment plan into a grid of scenario coordinates, runs every
requested method on the same realization per (grid point, run index) pair
so comparisons are paired, and aggregates per-point NMSE and runtime
statistics. Child seeds derive from ``SeedSequence([master_seed,
grid_index, run_index])``, so records are reproducible and independent of
worker scheduling.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import estimators
from .exceptions import IdentifiabilityError, PlanValidationError
from .scenario import (
    IMPAIRMENT_MODES,
    ImpairmentConfig,
    Scenario,
    ScenarioConfig,
    generate_scenario,
)

__all__ = [
    "METHODS",
    "ExperimentPlan",
    "GridPoint",
    "RunRecord",
    "AggregateRecord",
    "nmse",
    "build_grid",
    "run_plan",
    "aggregate",
]

METHODS = ("hosvd-sti", "bals", "clairvoyant")


@dataclass(frozen=True)
class ExperimentPlan:
    """Cartesian scenario grid plus execution parameters.

    ``blocks_per_frame`` may be None, in which case K tracks N per grid
    point (K = N). Every resulting grid point must satisfy K >= N.
    """

    snr_db: tuple = (20.0,)
    r_b: tuple = (0.5,)
    ris_elements: tuple = (8,)
    tx_antennas: tuple = (4,)
    rx_antennas: tuple = (4,)
    blocks_per_frame: Optional[tuple] = None
    frames: tuple = (5,)
    omega: int = 200
    methods: tuple = METHODS
    impairment_mode: str = "full"
    redraw_per_frame: bool = True
    master_seed: int = 0
    bals_max_iters: int = 200
    bals_tol: float = 1e-6

    def __post_init__(self):
        if self.omega < 1:
            raise PlanValidationError("omega must be >= 1")
        for name in ("snr_db", "r_b", "ris_elements", "tx_antennas",
                     "rx_antennas", "frames"):
            if len(getattr(self, name)) == 0:
                raise PlanValidationError(f"{name} must list at least one value")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise PlanValidationError(
                f"unknown methods {unknown}; choose from {list(METHODS)}"
            )
        if not self.methods:
            raise PlanValidationError("methods must list at least one method")
        if self.impairment_mode not in IMPAIRMENT_MODES:
            raise PlanValidationError(
                f"impairment_mode must be one of {list(IMPAIRMENT_MODES)}"
            )
        for rb in self.r_b:
            if not 0.0 <= rb <= 1.0:
                raise PlanValidationError(f"r_b value {rb} outside [0, 1]")
        for point in build_grid(self):
            if point.K < point.N:
                raise PlanValidationError(
                    f"grid point with K={point.K} < N={point.N} violates the "
                    "identifiability rule K >= N"
                )


@dataclass(frozen=True)
class GridPoint:
    """One scenario coordinate; field names match the output-table columns."""

    index: int
    snr_db: float
    r_b: float
    N: int
    M: int
    L: int
    K: int
    P: int


@dataclass(frozen=True)
class RunRecord:
    """Result of one method on one realization."""

    point: GridPoint
    run_index: int
    seed: int
    method: str
    nmse_h: float = math.nan
    nmse_g: float = math.nan
    nmse_e: float = math.nan
    runtime_s: float = math.nan
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    excluded_columns: int = 0
    failed: bool = False
    error: Optional[str] = None


@dataclass(frozen=True)
class AggregateRecord:
    """Per-(grid point, method) means and standard errors."""

    point: GridPoint
    method: str
    omega: int
    nmse_h_mean: float
    nmse_h_stderr: float
    nmse_g_mean: float
    nmse_g_stderr: float
    nmse_e_mean: float
    nmse_e_stderr: float
    runtime_s_mean: float
    excluded_columns: int
    failed_runs: int = 0


def nmse(truth: np.ndarray, estimate: np.ndarray) -> float:
    """Squared Frobenius error of the estimate relative to the truth."""
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    denom = np.linalg.norm(truth) ** 2
    if denom == 0.0:
        raise ValueError("NMSE undefined for an all-zero truth matrix")
    return float(np.linalg.norm(truth - estimate) ** 2 / denom)


def _masked_nmse(truth: np.ndarray, estimate: np.ndarray, excluded) -> float:
    """NMSE over the columns not listed in ``excluded``."""
    if not excluded:
        return nmse(truth, estimate)
    keep = [c for c in range(truth.shape[1]) if c not in excluded]
    if not keep:
        return math.nan
    return nmse(truth[:, keep], estimate[:, keep])


def build_grid(plan: ExperimentPlan) -> list:
    """Expand the plan's value lists into ordered grid points.

    Enumeration order (snr outermost to frames innermost) is part of the
    seeding contract: child seeds depend on the grid index.
    """
    k_values = plan.blocks_per_frame if plan.blocks_per_frame is not None else (None,)
    points = []
    for index, (snr, rb, n, m, l, k, p) in enumerate(
        itertools.product(
            plan.snr_db, plan.r_b, plan.ris_elements, plan.tx_antennas,
            plan.rx_antennas, k_values, plan.frames,
        )
    ):
        points.append(
            GridPoint(
                index=index, snr_db=float(snr), r_b=float(rb), N=int(n),
                M=int(m), L=int(l), K=int(n if k is None else k), P=int(p),
            )
        )
    return points


def _child_seeds(master_seed: int, grid_index: int, run_index: int):
    seq = np.random.SeedSequence([master_seed, grid_index, run_index])
    scenario_seed, init_seed = (int(x) for x in seq.generate_state(2, np.uint64))
    return scenario_seed, init_seed


def _run_one(plan: ExperimentPlan, point: GridPoint, run_index: int) -> list:
    """Execute every requested method on one shared realization."""
    scenario_seed, init_seed = _child_seeds(plan.master_seed, point.index, run_index)
    cfg = ScenarioConfig(
        tx_antennas=point.M, rx_antennas=point.L, ris_elements=point.N,
        blocks_per_frame=point.K, frames=point.P, snr_db=point.snr_db,
        seed=scenario_seed,
    )
    imp = ImpairmentConfig(
        probability=point.r_b, mode=plan.impairment_mode,
        redraw_per_frame=plan.redraw_per_frame,
    )
    scenario = generate_scenario(cfg, imp)

    records = []
    for method in plan.methods:
        try:
            records.append(
                _run_method(plan, point, run_index, scenario_seed, init_seed,
                            scenario, method)
            )
        except (IdentifiabilityError, ValueError) as exc:
            records.append(
                RunRecord(
                    point=point, run_index=run_index, seed=scenario_seed,
                    method=method, failed=True, error=str(exc),
                )
            )
    return records


def _run_method(plan, point, run_index, scenario_seed, init_seed, scenario,
                method) -> RunRecord:
    y = scenario.received
    start = time.perf_counter()
    if method == "hosvd-sti":
        est = estimators.estimate_hosvd_sti(y, scenario.pattern)
    elif method == "bals":
        est = estimators.bals(
            y, scenario.pattern, max_iters=plan.bals_max_iters,
            tol=plan.bals_tol, rng=np.random.default_rng(init_seed),
        )
    elif method == "clairvoyant":
        est = estimators.clairvoyant(
            y, scenario.channels, scenario.impairments, scenario.pattern
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    runtime = time.perf_counter() - start

    aligned, _ = estimators.disambiguate(
        est, scenario.channels, scenario.impairments
    )
    excluded = est.degenerate_columns
    nmse_h = _masked_nmse(scenario.channels.tx_ris, aligned.tx_ris, excluded)
    nmse_g = _masked_nmse(scenario.channels.ris_rx, aligned.ris_rx, excluded)
    if aligned.impairments is not None:
        nmse_e = _masked_nmse(scenario.impairments, aligned.impairments, excluded)
    else:
        nmse_e = math.nan
    return RunRecord(
        point=point, run_index=run_index, seed=scenario_seed, method=method,
        nmse_h=nmse_h, nmse_g=nmse_g, nmse_e=nmse_e, runtime_s=runtime,
        iterations=est.iterations, converged=est.converged,
        excluded_columns=len(excluded),
    )


def run_plan(plan: ExperimentPlan, workers: int = 1, progress=None) -> list:
    """Execute the whole plan and return records in deterministic order.

    Parameters
    ----------
    plan : ExperimentPlan
        Grid, run count and execution parameters.
    workers : int
        Worker threads for concurrent runs. Results are merged by
        (grid index, run index) so they do not depend on scheduling.
    progress : callable, optional
        Called with (grid point, completed runs) after each realization.

    Returns
    -------
    list of RunRecord
        ``omega * len(methods)`` records per grid point; estimator errors
        are recorded as failed runs rather than aborting the sweep.
    """
    points = build_grid(plan)
    tasks = [(point, run) for point in points for run in range(plan.omega)]
    if workers <= 1:
        grouped = [_run_one(plan, point, run) for point, run in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            grouped = list(
                pool.map(lambda t: _run_one(plan, t[0], t[1]), tasks)
            )
    records = []
    for (point, run), group in zip(tasks, grouped):
        records.extend(group)
        if progress is not None:
            progress(point, run + 1)
    return records


def _mean_stderr(values) -> tuple:
    values = [v for v in values if not math.isnan(v)]
    if not values:
        return math.nan, math.nan
    mean = float(np.mean(values))
    if len(values) == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(records: Sequence[RunRecord]) -> list:
    """Group records by (grid point, method) and average them.

    Means follow the single-run-ratio convention (arithmetic mean of the
    per-run NMSE ratios). Failed runs are excluded from the statistics but
    counted.
    """
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.point, rec.method), []).append(rec)

    out = []
    for (point, method), recs in groups.items():
        ok = [r for r in recs if not r.failed]
        failed = len(recs) - len(ok)
        if not ok:
            raise ValueError(
                f"all {len(recs)} runs failed for method {method!r} at grid "
                f"point {point.index}"
            )
        h_mean, h_se = _mean_stderr([r.nmse_h for r in ok])
        g_mean, g_se = _mean_stderr([r.nmse_g for r in ok])
        e_mean, e_se = _mean_stderr([r.nmse_e for r in ok])
        rt_mean, _ = _mean_stderr([r.runtime_s for r in ok])
        out.append(
            AggregateRecord(
                point=point, method=method, omega=len(ok),
                nmse_h_mean=h_mean, nmse_h_stderr=h_se,
                nmse_g_mean=g_mean, nmse_g_stderr=g_se,
                nmse_e_mean=e_mean, nmse_e_stderr=e_se,
                runtime_s_mean=rt_mean,
                excluded_columns=sum(r.excluded_columns for r in ok),
                failed_runs=failed,
            )
        )
    return out
