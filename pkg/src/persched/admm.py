"""Alternating-direction driver for joint gain and schedule design.

Splits the design into a smooth gain subproblem and a closed-form
sparsification step coupled through a scaled dual variable, then alternates:
pull the gains toward the current sparse copy, re-sparsify around the new
gains, update the dual, and stop once the two copies agree and the sparse
copy has settled. The final schedule is read off the sparse copy, which is
feasible by construction, and re-solved exactly (polished) for reporting.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import lstep
from .exceptions import InputError
from .gstep import GStepProblem, g_step
from .model import SystemModel
from .periodic import (
    PeriodicGains,
    Schedule,
    check_schedule_detectability,
    evaluate_schedule,
    init_gains_for_schedule,
    objective_J,
    schedule_from_gains,
)

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "IterationRecord",
    "SolveReport",
    "SweepCell",
    "AdmmDriver",
    "default_init_schedule",
    "run",
    "sweep",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmmConfig:
    """Solver settings.

    ``eta`` is either one bound shared by every sensor or a per-sensor
    sequence; bounds must lie in 1..period. ``zero_tol`` feeds schedule
    extraction (None means relative to the largest gain column), and
    ``init_schedule`` overrides the default staggered starting schedule.
    """

    period: int
    gamma: float
    eta: object
    rho: float = 10.0
    eps: float = 1e-3
    max_iters: int = 200
    inner_max_iters: int = 100
    inner_tol_cap: float = 1e-6
    armijo_alpha: float = 0.3
    armijo_beta: float = 0.5
    zero_tol: Optional[float] = None
    init_schedule: Optional[Schedule] = None

    def __post_init__(self):
        if self.period < 1:
            raise InputError("period must be at least 1")
        if self.gamma < 0:
            raise InputError("gamma must be nonnegative")
        if self.rho <= 0:
            raise InputError("rho must be positive")
        if self.eps <= 0:
            raise InputError("eps must be positive")
        if self.max_iters < 1 or self.inner_max_iters < 1:
            raise InputError("iteration caps must be at least 1")
        if not (0 <= self.armijo_alpha < 1) or not (0 < self.armijo_beta < 1):
            raise InputError("need 0 <= armijo_alpha < 1 and 0 < armijo_beta < 1")
        if self.inner_tol_cap <= 0:
            raise InputError("inner_tol_cap must be positive")
        if self.zero_tol is not None and self.zero_tol < 0:
            raise InputError("zero_tol must be nonnegative")
        bounds = self.eta_tuple(None)
        for m, e in enumerate(bounds):
            if not 1 <= e <= self.period:
                raise InputError(f"eta[{m}] = {e} outside the valid range 1..{self.period}")
        if self.init_schedule is not None and self.init_schedule.K != self.period:
            raise InputError(
                f"init schedule period {self.init_schedule.K} does not match {self.period}"
            )

    def eta_tuple(self, n_sensors: Optional[int]) -> tuple:
        """Per-sensor bounds, broadcast to n_sensors when a scalar was given."""
        if np.isscalar(self.eta):
            return (int(self.eta),) * (n_sensors if n_sensors else 1)
        bounds = tuple(int(e) for e in self.eta)
        if n_sensors is not None and len(bounds) != n_sensors:
            raise InputError(f"eta has {len(bounds)} entries, expected {n_sensors}")
        return bounds

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "gamma": self.gamma,
            "eta": self.eta if np.isscalar(self.eta) else list(self.eta),
            "rho": self.rho,
            "eps": self.eps,
            "max_iters": self.max_iters,
            "inner_max_iters": self.inner_max_iters,
            "inner_tol_cap": self.inner_tol_cap,
            "armijo_alpha": self.armijo_alpha,
            "armijo_beta": self.armijo_beta,
            "zero_tol": self.zero_tol,
            "init_schedule": None
            if self.init_schedule is None
            else self.init_schedule.to_text(),
        }


@dataclass(frozen=True)
class AdmmState:
    """Snapshot of the three split variables after ``iteration`` updates."""

    L: np.ndarray
    G: np.ndarray
    Lam: np.ndarray
    iteration: int


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    primal_residual: float
    g_change: float
    phi: float
    cardinality: int
    inner_iterations: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "primal_residual": self.primal_residual,
            "g_change": self.g_change,
            "phi": self.phi,
            "cardinality": self.cardinality,
            "inner_iterations": self.inner_iterations,
        }


@dataclass(frozen=True)
class SolveReport:
    """Full outcome of one solver run.

    ``gains_raw`` and ``j_raw`` describe the solver's own gain iterate;
    ``gains_polished`` and ``j_polished`` re-solve the extracted schedule
    exactly and are the figures used for cross-method comparison.
    ``wall_time`` is informational and excluded from serialization so that
    identical runs produce identical files.
    """

    gains_raw: PeriodicGains
    gains_polished: PeriodicGains
    schedule: Schedule
    j_raw: float
    j_polished: float
    trace: tuple
    iterations: int
    converged: bool
    line_search_failed: bool
    wall_time: float
    config: AdmmConfig

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "line_search_failed": self.line_search_failed,
            "j_raw": self.j_raw,
            "j_polished": self.j_polished,
            "schedule": self.schedule.to_text(),
            "total_activations": self.schedule.total_activations,
            "activation_counts": [int(c) for c in self.schedule.activation_counts],
            "gains_raw": self.gains_raw.gains.tolist(),
            "gains_polished": self.gains_polished.gains.tolist(),
            "trace": [rec.to_dict() for rec in self.trace],
            "config": self.config.to_dict(),
        }


@dataclass(frozen=True)
class SweepCell:
    """One (gamma, eta) cell of a sweep; ``error`` is set when the run failed."""

    gamma: float
    eta: object
    report: Optional[SolveReport] = None
    error: Optional[str] = None


def default_init_schedule(sys: SystemModel, K: int, eta) -> Schedule:
    """Deterministic staggered starting schedule.

    Sensor m is activated at times (m + floor(j K / eta_m)) mod K for
    j = 0..eta_m-1: each sensor gets exactly eta_m evenly spread
    activations, with starting offsets staggered across sensors so steps
    are covered as uniformly as possible. Raises when the request is all
    zero or the resulting schedule would leave an unstable mode unobserved.
    """
    if K < 1:
        raise InputError("period must be at least 1")
    if np.isscalar(eta):
        bounds = (int(eta),) * sys.n_sensors
    else:
        bounds = tuple(int(e) for e in eta)
        if len(bounds) != sys.n_sensors:
            raise InputError(f"eta has {len(bounds)} entries, expected {sys.n_sensors}")
    for m, e in enumerate(bounds):
        if not 0 <= e <= K:
            raise InputError(f"eta[{m}] = {e} outside the valid range 0..{K}")
    if sum(bounds) < 1:
        raise InputError("at least one activation is required")
    mask = np.zeros((K, sys.n_sensors), dtype=np.int8)
    for m, e in enumerate(bounds):
        for j in range(e):
            mask[(m + (j * K) // e) % K, m] = 1
    sched = Schedule(mask)
    check_schedule_detectability(sys, sched)
    return sched


class AdmmDriver:
    """Stateful solver: construct, then ``run()``, or ``step()`` manually."""

    def __init__(self, sys: SystemModel, cfg: AdmmConfig):
        self.sys = sys
        self.cfg = cfg
        self.eta = cfg.eta_tuple(sys.n_sensors)
        self._initialized = False
        self.trace = []
        self.line_search_failed = False

    def initialize(self) -> AdmmState:
        """Set L from the starting schedule's exact gains, G and the dual to zero."""
        cfg = self.cfg
        sched = cfg.init_schedule
        if sched is None:
            sched = default_init_schedule(self.sys, cfg.period, self.eta)
        elif sched.n_sensors != self.sys.n_sensors:
            raise InputError(
                f"init schedule has {sched.n_sensors} sensors, system has {self.sys.n_sensors}"
            )
        self.L = init_gains_for_schedule(self.sys, sched)
        shape = self.L.gains.shape
        self.G = np.zeros(shape)
        self.Lam = np.zeros(shape)
        self.iteration = 0
        self._last_primal = np.inf
        self._best_phi = np.inf
        self._best = None
        self._initialized = True
        return self.state

    @property
    def state(self) -> AdmmState:
        return AdmmState(
            L=self.L.gains.copy(), G=self.G.copy(), Lam=self.Lam.copy(), iteration=self.iteration
        )

    def _inner_tol(self) -> float:
        return min(self.cfg.inner_tol_cap, 0.1 * self._last_primal)

    def step(self) -> IterationRecord:
        """Advance one iteration: gain solve, sparsify, dual update."""
        if not self._initialized:
            self.initialize()
        cfg = self.cfg
        rho = cfg.rho

        u = self.G - self.Lam / rho
        prob = lstep.LStepProblem(self.sys, u, rho)
        result = lstep.solve(
            prob,
            init=self.L,
            tol=self._inner_tol(),
            max_iters=cfg.inner_max_iters,
            alpha=cfg.armijo_alpha,
            beta=cfg.armijo_beta,
        )
        if result.line_search_failed:
            self.line_search_failed = True
        new_l = result.gains

        s = new_l.gains + self.Lam / rho
        new_g = g_step(GStepProblem(s, cfg.gamma, rho, self.eta))

        g_change = float(sum(np.linalg.norm(new_g[k] - self.G[k]) for k in range(cfg.period)))
        self.Lam = self.Lam + rho * (new_l.gains - new_g)
        primal = float(
            sum(np.linalg.norm(new_l.gains[k] - new_g[k]) for k in range(cfg.period))
        )

        self.L = new_l
        self.G = new_g
        self.iteration += 1
        self._last_primal = primal

        cardinality = int(schedule_from_gains(PeriodicGains(new_g), cfg.zero_tol).total_activations)
        record = IterationRecord(
            iteration=self.iteration,
            primal_residual=primal,
            g_change=g_change,
            phi=result.phi,
            cardinality=cardinality,
            inner_iterations=result.iterations,
        )
        self.trace.append(record)
        if result.phi < self._best_phi:
            self._best_phi = result.phi
            self._best = (new_l, new_g.copy())
        logger.debug(
            "iteration %d: primal %.3e, g_change %.3e, phi %.6g, cardinality %d",
            record.iteration,
            primal,
            g_change,
            result.phi,
            cardinality,
        )
        return record

    def run(self) -> SolveReport:
        """Iterate to the two-residual stopping rule or the cap.

        Convergence requires both the gain/copy gap and the change in the
        sparse copy to fall below eps. If the cap is hit instead, the
        iterate with the best subproblem objective seen so far is reported.
        """
        start = time.perf_counter()
        if not self._initialized:
            self.initialize()
        cfg = self.cfg
        converged = False
        while self.iteration < cfg.max_iters:
            record = self.step()
            if record.primal_residual <= cfg.eps and record.g_change <= cfg.eps:
                converged = True
                break

        if converged or self._best is None:
            final_l, final_g = self.L, self.G
        else:
            final_l, final_g = self._best[0], self._best[1]

        schedule = schedule_from_gains(PeriodicGains(final_g), cfg.zero_tol)
        polished = evaluate_schedule(self.sys, schedule)
        j_raw = objective_J(self.sys, final_l)
        report = SolveReport(
            gains_raw=final_l,
            gains_polished=polished.gains,
            schedule=schedule,
            j_raw=j_raw,
            j_polished=polished.J,
            trace=tuple(self.trace),
            iterations=self.iteration,
            converged=converged,
            line_search_failed=self.line_search_failed,
            wall_time=time.perf_counter() - start,
            config=cfg,
        )
        logger.info(
            "%s after %d iterations: J_polished %.6g, %d activations",
            "converged" if converged else "cap hit",
            report.iterations,
            report.j_polished,
            schedule.total_activations,
        )
        return report


def run(sys: SystemModel, cfg: AdmmConfig) -> SolveReport:
    """One full solve with the given configuration."""
    return AdmmDriver(sys, cfg).run()


def _run_cell(sys: SystemModel, cfg: AdmmConfig, gamma: float, eta) -> SweepCell:
    try:
        report = run(sys, replace(cfg, gamma=gamma, eta=eta))
        return SweepCell(gamma=gamma, eta=eta, report=report)
    except Exception as exc:  # noqa: BLE001 - cell failures must not kill the sweep
        logger.warning("sweep cell (gamma=%s, eta=%s) failed: %s", gamma, eta, exc)
        return SweepCell(gamma=gamma, eta=eta, error=f"{type(exc).__name__}: {exc}")


def sweep(sys: SystemModel, base_cfg: AdmmConfig, gamma_list, eta_list, jobs: int = 1) -> list:
    """Run the solver over the (gamma, eta) grid.

    Returns one SweepCell per grid point in row-major (gamma-major) order;
    failures are captured per cell. With jobs > 1 cells execute in a thread
    pool. Activation counts are expected to shrink as gamma grows at fixed
    eta; because the underlying problem is nonconvex this is checked softly
    and violations are logged, not raised.
    """
    gammas = list(gamma_list)
    etas = list(eta_list)
    if not gammas or not etas:
        raise InputError("gamma_list and eta_list must be non-empty")
    cells = [(g, e) for g in gammas for e in etas]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda ge: _run_cell(sys, base_cfg, *ge), cells))
    else:
        results = [_run_cell(sys, base_cfg, g, e) for g, e in cells]

    for eta in etas:
        last = None
        for cell in results:
            if cell.eta != eta or cell.report is None:
                continue
            count = cell.report.schedule.total_activations
            if last is not None and count > last:
                logger.warning(
                    "activation count rose from %d to %d at gamma=%s, eta=%s",
                    last,
                    count,
                    cell.gamma,
                    eta,
                )
            last = count
    return results
