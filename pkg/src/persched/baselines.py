"""Ground-truth and baseline schedule generators.

The exhaustive oracle enumerates every schedule satisfying the per-sensor
activation bounds (optionally at a fixed total activation count), scores
each one exactly, and returns the global minimizer; a budget guard refuses
instances whose candidate count would be unreasonable. The random baseline
draws schedules uniformly from the same feasible set and reports the score
statistics, giving the reference the solver is expected to beat.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np

from .exceptions import BudgetError, InitializationError, InputError, InstabilityError
from .model import SystemModel
from .periodic import Schedule, evaluate_schedule

__all__ = [
    "OracleResult",
    "BaselineResult",
    "exhaustive_search",
    "random_baseline",
]

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class OracleResult:
    """Exhaustive-search outcome: the best schedule, its exact score, and
    how many candidates were scored or skipped as invalid estimators."""

    schedule: Schedule
    J: float
    n_evaluated: int
    n_skipped: int


@dataclass(frozen=True)
class BaselineResult:
    """Score statistics over uniformly drawn feasible schedules."""

    values: tuple
    mean: float
    std: float
    min: float
    max: float

    @classmethod
    def from_values(cls, values) -> "BaselineResult":
        arr = np.asarray(values, dtype=float)
        return cls(
            values=tuple(float(v) for v in arr),
            mean=float(arr.mean()),
            std=float(arr.std()),
            min=float(arr.min()),
            max=float(arr.max()),
        )


def _normalize_eta(eta, n_sensors: int, K: int) -> tuple:
    if np.isscalar(eta):
        bounds = (int(eta),) * n_sensors
    else:
        bounds = tuple(int(e) for e in eta)
        if len(bounds) != n_sensors:
            raise InputError(f"eta has {len(bounds)} entries, expected {n_sensors}")
    for m, e in enumerate(bounds):
        if not 0 <= e <= K:
            raise InputError(f"eta[{m}] = {e} outside the valid range 0..{K}")
    return bounds


def _count_table(K: int, bounds: tuple) -> list:
    """Suffix DP: table[m][t] = number of ways sensors m.. can place t
    activations, each sensor m choosing c <= bounds[m] of K steps."""
    M = len(bounds)
    top = sum(bounds)
    table = [[0] * (top + 1) for _ in range(M + 1)]
    table[M][0] = 1
    for m in range(M - 1, -1, -1):
        for t in range(top + 1):
            total = 0
            for c in range(min(bounds[m], t) + 1):
                total += comb(K, c) * table[m + 1][t - c]
            table[m][t] = total
    return table


def _candidate_count(K: int, bounds: tuple, total_activations: Optional[int]) -> int:
    table = _count_table(K, bounds)
    if total_activations is None:
        return sum(table[0])
    if not 0 <= total_activations <= sum(bounds):
        return 0
    return table[0][total_activations]


def exhaustive_search(
    sys: SystemModel,
    K: int,
    eta,
    total_activations: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> OracleResult:
    """Globally optimal schedule by full enumeration.

    Walks all K x M masks satisfying the per-sensor bounds (and the exact
    total activation count when given) in lexicographic order of the
    row-major bit string, scoring each with evaluate_schedule. Candidates
    whose masked estimator is invalid (an unstable mode left unobserved)
    are skipped. Ties keep the lexicographically smallest mask. Raises
    BudgetError up front when the candidate count exceeds ``budget``.
    """
    if K < 1:
        raise InputError("period must be at least 1")
    bounds = _normalize_eta(eta, sys.n_sensors, K)
    count = _candidate_count(K, bounds, total_activations)
    if count == 0:
        raise InputError("no feasible schedule matches the requested activation count")
    if count > budget:
        raise BudgetError(
            f"{count} candidate schedules exceed the enumeration budget of {budget}"
        )

    M = sys.n_sensors
    mask = np.zeros((K, M), dtype=np.int8)
    used = [0] * M
    state = {
        "best_j": np.inf,
        "best_mask": None,
        "evaluated": 0,
        "skipped": 0,
        "total": 0,
    }

    def future_capacity(pos: int) -> int:
        """Most activations still placeable at positions >= pos."""
        cap = 0
        for m in range(M):
            # Undecided positions for sensor m sit at j*M + m >= pos.
            j_min = max(0, (pos - m + M - 1) // M)
            cap += min(bounds[m] - used[m], K - j_min)
        return cap

    def visit_leaf() -> None:
        state["total"] += 1
        sched = Schedule(mask.copy())
        try:
            evaluation = evaluate_schedule(sys, sched)
        except (InitializationError, InstabilityError):
            state["skipped"] += 1
            return
        state["evaluated"] += 1
        if evaluation.J < state["best_j"]:
            state["best_j"] = evaluation.J
            state["best_mask"] = sched

    def dfs(pos: int, total: int) -> None:
        if total_activations is not None:
            if total > total_activations:
                return
            if total + future_capacity(pos) < total_activations:
                return
        if pos == K * M:
            visit_leaf()
            return
        k, m = divmod(pos, M)
        dfs(pos + 1, total)
        if used[m] < bounds[m]:
            mask[k, m] = 1
            used[m] += 1
            dfs(pos + 1, total + 1)
            used[m] -= 1
            mask[k, m] = 0

    dfs(0, 0)
    if state["best_mask"] is None:
        raise InitializationError(
            "every feasible schedule left the estimator invalid; raise the bounds"
        )
    logger.info(
        "oracle evaluated %d candidates (%d skipped): best J %.6g",
        state["evaluated"],
        state["skipped"],
        state["best_j"],
    )
    return OracleResult(
        schedule=state["best_mask"],
        J=state["best_j"],
        n_evaluated=state["evaluated"],
        n_skipped=state["skipped"],
    )


def _draw_mask(rng: np.random.Generator, K: int, bounds: tuple, total: int, table) -> np.ndarray:
    """One exactly uniform draw from the feasible masks with ``total``
    activations, by sampling per-sensor counts from the suffix table and
    then a uniform subset of steps per sensor."""
    M = len(bounds)
    mask = np.zeros((K, M), dtype=np.int8)
    remaining = total
    for m in range(M):
        choices = []
        weights = []
        for c in range(min(bounds[m], remaining) + 1):
            ways = comb(K, c) * table[m + 1][remaining - c]
            if ways > 0:
                choices.append(c)
                weights.append(ways)
        weights = np.asarray(weights, dtype=float)
        c = int(rng.choice(choices, p=weights / weights.sum()))
        steps = rng.choice(K, size=c, replace=False)
        mask[steps, m] = 1
        remaining -= c
    return mask


def random_baseline(
    sys: SystemModel,
    K: int,
    eta,
    total_activations: int,
    trials: int,
    seed: int,
    jobs: int = 1,
) -> BaselineResult:
    """Monte-Carlo reference: uniform feasible schedules, scored exactly.

    Draws ``trials`` schedules uniformly among the masks that satisfy the
    per-sensor bounds and have exactly ``total_activations`` activations,
    scores each with evaluate_schedule, and returns the statistics. Fully
    determined by ``seed``: all draws happen up front in seed order, so
    ``jobs`` only parallelizes the scoring and never changes the result.
    """
    if trials < 1:
        raise InputError("trials must be at least 1")
    bounds = _normalize_eta(eta, sys.n_sensors, K)
    if not 0 <= total_activations <= sum(bounds):
        raise InputError(
            f"total_activations = {total_activations} infeasible for bounds summing "
            f"to {sum(bounds)}"
        )
    table = _count_table(K, bounds)
    if table[0][total_activations] == 0:
        raise InputError("no feasible schedule matches the requested activation count")

    rng = np.random.default_rng(seed)
    schedules = [
        Schedule(_draw_mask(rng, K, bounds, total_activations, table)) for _ in range(trials)
    ]

    def score(sched: Schedule) -> float:
        return evaluate_schedule(sys, sched).J

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(score, schedules))
    else:
        values = [score(sched) for sched in schedules]
    return BaselineResult.from_values(values)
