"""Periodic estimation for fixed gains or fixed schedules.

Covers the K-periodic machinery shared by the solver and the baselines:
block-cyclic lifting, monodromy stability tests, covariance and value limit
cycles, the trace objective, schedule extraction from gain sparsity, and
Riccati-optimal gains for a fixed activation schedule.

Limit cycles are computed three ways. The default path solves one N x N
discrete Lyapunov equation in the monodromy matrix and propagates around the
period. The "lifted" path assembles the KN x KN block-cyclic operands and
solves once, and the "recursion" path iterates the plain covariance
recursion to a fixed point; both are retained as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import (
    ConvergenceError,
    DimensionError,
    InitializationError,
    InputError,
    InstabilityError,
)
from .linalg import solve_dare, solve_dlyap, spectral_radius, symmetrize
from .model import SystemModel

__all__ = [
    "Schedule",
    "PeriodicGains",
    "CovarianceCycle",
    "ScheduleEvaluation",
    "lift_cyclic",
    "closed_loop_factors",
    "monodromy_matrix",
    "monodromy_spectral_radius",
    "monodromy_stable",
    "covariance_limit_cycle",
    "value_cycle",
    "objective_J",
    "schedule_from_gains",
    "masked_observation",
    "check_schedule_detectability",
    "init_gains_for_schedule",
    "evaluate_schedule",
    "cycle_residual",
]

# Eigenvalues of A within this margin of the unit circle are treated as
# unstable when deciding whether the schedule detectability gate must run.
_UNIT_MARGIN = 1e-9

_RELATIVE_ZERO_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Schedule:
    """K x M binary sensor activation mask.

    Row k lists which sensors take a measurement at time k within the
    period; the pattern repeats with period K.
    """

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2:
            raise DimensionError(f"schedule mask must be 2-D, got ndim={mask.ndim}")
        if mask.shape[0] < 1 or mask.shape[1] < 1:
            raise DimensionError(f"schedule mask must be nonempty, got {mask.shape}")
        values = np.unique(mask)
        if not np.all(np.isin(values, (0, 1))):
            raise InputError("schedule mask entries must be 0 or 1")
        mask = mask.astype(np.int8)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def all_on(cls, K: int, M: int) -> "Schedule":
        return cls(np.ones((K, M), dtype=np.int8))

    @classmethod
    def empty(cls, K: int, M: int) -> "Schedule":
        return cls(np.zeros((K, M), dtype=np.int8))

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        """Parse a K-row grid of space-separated 0/1 entries."""
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rows.append([int(tok) for tok in line.split()])
        if not rows:
            raise InputError("schedule text contains no rows")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise InputError(f"schedule rows have unequal lengths {sorted(widths)}")
        return cls(np.array(rows))

    def to_text(self) -> str:
        return "\n".join(" ".join(str(int(v)) for v in row) for row in self.mask)

    @property
    def K(self) -> int:
        return self.mask.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.mask.shape[1]

    @property
    def activation_counts(self) -> np.ndarray:
        """Per-sensor activation counts over one period."""
        return self.mask.sum(axis=0)

    @property
    def total_activations(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Schedule):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.all(self.mask == other.mask))

    def __hash__(self):
        return hash((self.mask.shape, self.mask.tobytes()))


@dataclass(frozen=True, eq=False)
class PeriodicGains:
    """Length-K sequence of N x M estimator gains, stored as a (K, N, M) array.

    The sequence extends periodically: the gain applied at absolute time t
    is ``gains[t % K]``.
    """

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim == 2:
            g = g[np.newaxis]
        if g.ndim != 3:
            raise DimensionError(f"gains must stack to 3-D (K, N, M), got ndim={g.ndim}")
        if g.shape[0] < 1:
            raise DimensionError("gain sequence must have at least one element")
        if not np.all(np.isfinite(g)):
            raise InputError("gains must be finite")
        g = np.ascontiguousarray(g)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def zeros(cls, K: int, N: int, M: int) -> "PeriodicGains":
        return cls(np.zeros((K, N, M)))

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def n_states(self) -> int:
        return self.gains.shape[1]

    @property
    def n_sensors(self) -> int:
        return self.gains.shape[2]

    def __len__(self) -> int:
        return self.K

    def __getitem__(self, k: int) -> np.ndarray:
        return self.gains[k]

    def __iter__(self):
        return iter(self.gains)

    def column_norms(self) -> np.ndarray:
        """2-norm of every gain column, as a (K, M) array."""
        return np.linalg.norm(self.gains, axis=1)


@dataclass(frozen=True, eq=False)
class CovarianceCycle:
    """Length-K periodic sequence of N x N error covariances."""

    covariances: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.covariances, dtype=float)
        if p.ndim == 2:
            p = p[np.newaxis]
        if p.ndim != 3 or p.shape[1] != p.shape[2]:
            raise DimensionError(
                f"covariances must stack to (K, N, N), got shape {np.shape(self.covariances)}"
            )
        if not np.all(np.isfinite(p)):
            raise InputError("covariances must be finite")
        scale = max(1.0, float(np.abs(p).max()))
        drift = float(np.abs(p - p.transpose(0, 2, 1)).max())
        if drift > 1e-9 * scale:
            raise InputError(f"covariances asymmetric beyond tolerance (drift {drift:.3g})")
        p = (p + p.transpose(0, 2, 1)) / 2.0
        p.setflags(write=False)
        object.__setattr__(self, "covariances", p)

    @property
    def K(self) -> int:
        return self.covariances.shape[0]

    @property
    def n_states(self) -> int:
        return self.covariances.shape[1]

    def __len__(self) -> int:
        return self.K

    def __getitem__(self, k: int) -> np.ndarray:
        return self.covariances[k]

    def __iter__(self):
        return iter(self.covariances)

    @property
    def mean_trace(self) -> float:
        """(1/K) sum of traces, the per-step average estimation error."""
        return float(np.trace(self.covariances, axis1=1, axis2=2).mean())

    @property
    def trace_sum(self) -> float:
        return float(np.trace(self.covariances, axis1=1, axis2=2).sum())


class ScheduleEvaluation(NamedTuple):
    """Riccati-optimal figure of merit for a fixed schedule."""

    J: float
    gains: PeriodicGains
    cycle: CovarianceCycle


def lift_cyclic(blocks, cyclic: bool = True) -> np.ndarray:
    """Assemble K same-shaped blocks into the lifted block matrix.

    With ``cyclic`` set, block k lands at block position (k+1 mod K, k): the
    subdiagonal plus a wraparound block in the top-right, the shape taken by
    the lifted transition and gain operators. Without it the blocks form a
    plain block diagonal, as for lifted covariances and weights.
    """
    mats = [np.asarray(b, dtype=float) for b in blocks]
    if not mats:
        raise DimensionError("lift_cyclic needs at least one block")
    shape = mats[0].shape
    if any(m.ndim != 2 for m in mats) or any(m.shape != shape for m in mats):
        raise DimensionError(f"all blocks must share one 2-D shape, got {[m.shape for m in mats]}")
    K = len(mats)
    r, c = shape
    out = np.zeros((K * r, K * c))
    for k, block in enumerate(mats):
        i = ((k + 1) % K) if cyclic else k
        out[i * r : (i + 1) * r, k * c : (k + 1) * c] = block
    return out


def _check_gains(sys: SystemModel, gains: PeriodicGains) -> None:
    if gains.n_states != sys.n_states or gains.n_sensors != sys.n_sensors:
        raise DimensionError(
            f"gains of shape (K, {gains.n_states}, {gains.n_sensors}) do not match "
            f"system with N={sys.n_states}, M={sys.n_sensors}"
        )


def closed_loop_factors(sys: SystemModel, gains: PeriodicGains) -> np.ndarray:
    """Per-step closed-loop matrices A - L_k C, stacked as (K, N, N)."""
    _check_gains(sys, gains)
    return sys.A[np.newaxis] - gains.gains @ sys.C


def monodromy_matrix(sys: SystemModel, gains: PeriodicGains) -> np.ndarray:
    """Period map: product of the closed-loop factors, last step leftmost."""
    factors = closed_loop_factors(sys, gains)
    out = factors[0]
    for k in range(1, len(factors)):
        out = factors[k] @ out
    return out


def monodromy_spectral_radius(sys: SystemModel, gains: PeriodicGains) -> float:
    return spectral_radius(monodromy_matrix(sys, gains))


def monodromy_stable(sys: SystemModel, gains: PeriodicGains, margin: float = 0.0) -> bool:
    """Whether the periodic closed loop is Schur stable.

    A positive ``margin`` demands spectral radius < 1 - margin, which the
    line search uses to keep iterates safely inside the stability region.
    """
    return monodromy_spectral_radius(sys, gains) < 1.0 - margin


def _step_noise(sys: SystemModel, gains: PeriodicGains) -> np.ndarray:
    """Injected covariance per step: B Q B^T + L_k R L_k^T, shape (K, N, N)."""
    w = sys.q_eff[np.newaxis] + gains.gains @ sys.R @ gains.gains.transpose(0, 2, 1)
    return (w + w.transpose(0, 2, 1)) / 2.0


def _require_stable(sys: SystemModel, gains: PeriodicGains) -> np.ndarray:
    pi = monodromy_matrix(sys, gains)
    rho = spectral_radius(pi)
    if rho >= 1.0:
        raise InstabilityError(f"monodromy spectral radius {rho:.6g} is not < 1")
    return pi


def covariance_limit_cycle(
    sys: SystemModel, gains: PeriodicGains, method: str = "auto"
) -> CovarianceCycle:
    """Unique periodic steady state of the error-covariance recursion.

    Solves P_{k+1} = F_k P_k F_k^T + W_k with wraparound P_K = P_0, where
    F_k = A - L_k C and W_k = B Q B^T + L_k R L_k^T. Methods: "auto"
    reduces to one Lyapunov solve in the monodromy matrix, "lifted" solves
    the KN x KN block-cyclic equation, "recursion" iterates to the fixed
    point. All agree to solver tolerance on stable instances.
    """
    factors = closed_loop_factors(sys, gains)
    noise = _step_noise(sys, gains)
    pi = _require_stable(sys, gains)
    K, n = factors.shape[0], factors.shape[1]

    if method in ("auto", "monodromy"):
        # Accumulate W_acc = sum_k Psi_k W_k Psi_k^T with the suffix products
        # Psi_k = F_{K-1} ... F_{k+1}, then solve P_0 = Pi P_0 Pi^T + W_acc.
        w_acc = np.zeros((n, n))
        psi = np.eye(n)
        for k in range(K - 1, -1, -1):
            w_acc += psi @ noise[k] @ psi.T
            psi = psi @ factors[k]
        p0 = solve_dlyap(pi, symmetrize(w_acc))
        covs = np.empty((K, n, n))
        covs[0] = p0
        for k in range(K - 1):
            covs[k + 1] = symmetrize(factors[k] @ covs[k] @ factors[k].T + noise[k])
        return CovarianceCycle(covs)

    if method == "lifted":
        f_lift = lift_cyclic(factors, cyclic=True)
        # Diagonal block r of the lifted weight pairs with step r-1: the
        # lifted recursion writes F_{r-1} P_{r-1} F_{r-1}^T + W_{r-1} into
        # diagonal block r of the solution.
        w_lift = lift_cyclic([noise[(r - 1) % K] for r in range(K)], cyclic=False)
        x = solve_dlyap(f_lift, w_lift)
        covs = np.stack(
            [symmetrize(x[k * n : (k + 1) * n, k * n : (k + 1) * n]) for k in range(K)]
        )
        return CovarianceCycle(covs)

    if method == "recursion":
        return _covariance_by_recursion(factors, noise)

    raise InputError(f"unknown method {method!r}; expected auto, monodromy, lifted, or recursion")


def _covariance_by_recursion(
    factors: np.ndarray, noise: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100000
) -> CovarianceCycle:
    K, n = factors.shape[0], factors.shape[1]
    p = np.zeros((n, n))
    for _ in range(max_sweeps):
        start = p
        for k in range(K):
            p = symmetrize(factors[k] @ p @ factors[k].T + noise[k])
        if np.linalg.norm(p - start) <= tol * max(1.0, float(np.linalg.norm(p))):
            covs = np.empty((K, n, n))
            covs[0] = p
            for k in range(K - 1):
                covs[k + 1] = symmetrize(factors[k] @ covs[k] @ factors[k].T + noise[k])
            return CovarianceCycle(covs)
    raise ConvergenceError(f"covariance recursion did not settle within {max_sweeps} sweeps")


def value_cycle(sys: SystemModel, gains: PeriodicGains, method: str = "auto"):
    """Unique periodic solution of V_k = F_k^T V_{k+1} F_k + I.

    Returns a tuple (V_0, ..., V_{K-1}); each V_k is symmetric and at least
    the identity in the semidefinite order.
    """
    factors = closed_loop_factors(sys, gains)
    pi = _require_stable(sys, gains)
    K, n = factors.shape[0], factors.shape[1]
    eye = np.eye(n)

    if method in ("auto", "monodromy"):
        # m_acc = sum_k Phi_k^T Phi_k with prefix products Phi_k = F_{k-1}...F_0,
        # so V_0 solves V_0 = Pi^T V_0 Pi + m_acc.
        m_acc = np.zeros((n, n))
        phi = eye
        for k in range(K):
            m_acc += phi.T @ phi
            phi = factors[k] @ phi
        v0 = solve_dlyap(pi.T, symmetrize(m_acc))
        values = [None] * K
        values[0] = v0
        nxt = v0
        for k in range(K - 1, 0, -1):
            nxt = symmetrize(factors[k].T @ nxt @ factors[k] + eye)
            values[k] = nxt
        return tuple(values)

    if method == "lifted":
        f_lift = lift_cyclic(factors, cyclic=True)
        x = solve_dlyap(f_lift.T, np.eye(K * n))
        return tuple(symmetrize(x[k * n : (k + 1) * n, k * n : (k + 1) * n]) for k in range(K))

    if method == "recursion":
        v = np.zeros((n, n))
        for _ in range(100000):
            start = v
            for k in range(K - 1, -1, -1):
                v = symmetrize(factors[k].T @ v @ factors[k] + eye)
            if np.linalg.norm(v - start) <= 1e-12 * max(1.0, float(np.linalg.norm(v))):
                values = [None] * K
                values[0] = v
                nxt = v
                for k in range(K - 1, 0, -1):
                    nxt = symmetrize(factors[k].T @ nxt @ factors[k] + eye)
                    values[k] = nxt
                return tuple(values)
        raise ConvergenceError("value recursion did not settle within 100000 sweeps")

    raise InputError(f"unknown method {method!r}; expected auto, monodromy, lifted, or recursion")


def objective_J(sys: SystemModel, gains: PeriodicGains, cycle: CovarianceCycle = None) -> float:
    """Average steady-state error: (1/K) sum of covariance traces.

    Pass a precomputed ``cycle`` to skip the Lyapunov solve.
    """
    if cycle is None:
        cycle = covariance_limit_cycle(sys, gains)
    return cycle.mean_trace


def schedule_from_gains(gains: PeriodicGains, zero_tol: float = None) -> Schedule:
    """Activation mask of the nonzero gain columns.

    A sensor counts as active at step k when its gain column 2-norm exceeds
    ``zero_tol``. When ``zero_tol`` is omitted it defaults to 1e-6 relative
    to the largest column norm in the sequence, so uniformly tiny gains
    yield an empty schedule.
    """
    norms = gains.column_norms()
    if zero_tol is None:
        zero_tol = _RELATIVE_ZERO_TOL * float(norms.max())
    elif zero_tol < 0:
        raise InputError("zero_tol must be nonnegative")
    return Schedule((norms > zero_tol).astype(np.int8))


def masked_observation(sys: SystemModel, active) -> tuple:
    """Observation submatrices for one step's active sensor set.

    Returns (C_S, R_SS, idx): the rows of C for the active sensors, the
    matching principal submatrix of R, and the active indices. Restricting
    to the active block keeps the filter exact under correlated measurement
    noise and forces inactive gain columns to be structurally zero.
    """
    idx = np.flatnonzero(np.asarray(active))
    return sys.C[idx], sys.R[np.ix_(idx, idx)], idx


def check_schedule_detectability(sys: SystemModel, sched: Schedule) -> None:
    """Raise InitializationError when the schedule hides an unstable mode.

    Runs a PBH rank test on the lifted pair at every eigenvalue on or
    outside the unit circle; skipped entirely for a Schur-stable plant,
    where any schedule is admissible.
    """
    if spectral_radius(sys.A) < 1.0 - _UNIT_MARGIN:
        return
    K, n = sched.K, sys.n_states
    a_lift = lift_cyclic([sys.A] * K, cyclic=True)
    c_rows = []
    for k in range(K):
        c_k, _, idx = masked_observation(sys, sched.mask[k])
        block = np.zeros((len(idx), K * n))
        block[:, k * n : (k + 1) * n] = c_k
        c_rows.append(block)
    c_lift = np.vstack(c_rows) if c_rows else np.zeros((0, K * n))
    for lam in np.linalg.eigvals(a_lift):
        if abs(lam) < 1.0 - _UNIT_MARGIN:
            continue
        pencil = np.vstack([a_lift - lam * np.eye(K * n), c_lift])
        if np.linalg.matrix_rank(pencil) < K * n:
            raise InitializationError(
                f"schedule leaves the lifted pair undetectable at eigenvalue {lam:.6g}; "
                "activate more sensors or steps"
            )


def _riccati_step(sys: SystemModel, p: np.ndarray, active) -> tuple:
    """One masked Riccati update. Returns (L_k, P_{k+1})."""
    c_s, r_ss, idx = masked_observation(sys, active)
    n = sys.n_states
    gain = np.zeros((n, sys.n_sensors))
    if len(idx) == 0:
        p_next = symmetrize(sys.q_eff + sys.A @ p @ sys.A.T)
        return gain, p_next
    innov = c_s @ p @ c_s.T + r_ss
    cross = sys.A @ p @ c_s.T
    gain_s = np.linalg.solve(innov.T, cross.T).T
    gain[:, idx] = gain_s
    p_next = symmetrize(sys.q_eff + sys.A @ p @ sys.A.T - gain_s @ cross.T)
    return gain, p_next


def init_gains_for_schedule(
    sys: SystemModel,
    sched: Schedule,
    method: str = "cyclic",
    tol: float = 1e-10,
    max_sweeps: int = 10000,
) -> PeriodicGains:
    """Riccati-optimal periodic gains for a fixed activation schedule.

    Iterates the K coupled Riccati recursions with each step's observation
    restricted to the scheduled sensors, so the returned gains carry the
    schedule's column-sparsity pattern exactly and the closed loop is
    stable. ``method="lifted"`` instead solves the single KN x KN Riccati
    equation on the block-cyclic operands; it is kept as a cross-check.

    Raises InitializationError when the schedule leaves an unstable mode
    unobserved or the iteration fails to settle.
    """
    if sched.n_sensors != sys.n_sensors:
        raise DimensionError(
            f"schedule has {sched.n_sensors} sensor columns, system has {sys.n_sensors}"
        )
    check_schedule_detectability(sys, sched)

    if method == "cyclic":
        return _init_gains_cyclic(sys, sched, tol, max_sweeps)
    if method == "lifted":
        return _init_gains_lifted(sys, sched)
    raise InputError(f"unknown method {method!r}; expected cyclic or lifted")


def _init_gains_cyclic(
    sys: SystemModel, sched: Schedule, tol: float, max_sweeps: int
) -> PeriodicGains:
    K = sched.K
    p = sys.q_eff.copy()
    converged = False
    for _ in range(max_sweeps):
        start = p
        for k in range(K):
            _, p = _riccati_step(sys, p, sched.mask[k])
        if np.linalg.norm(p - start) <= tol * max(1.0, float(np.linalg.norm(p))):
            converged = True
            break
    if not converged:
        raise InitializationError(
            f"periodic Riccati iteration did not settle within {max_sweeps} sweeps"
        )
    gains = np.empty((K, sys.n_states, sys.n_sensors))
    for k in range(K):
        gains[k], p = _riccati_step(sys, p, sched.mask[k])
    result = PeriodicGains(gains)
    if not monodromy_stable(sys, result):
        raise InitializationError("periodic Riccati iteration produced an unstable closed loop")
    return result


def _init_gains_lifted(sys: SystemModel, sched: Schedule) -> PeriodicGains:
    K, n, m = sched.K, sys.n_states, sys.n_sensors
    pieces = [masked_observation(sys, sched.mask[k]) for k in range(K)]
    total_rows = sum(len(idx) for _, _, idx in pieces)
    if total_rows == 0:
        # Nothing is ever measured: valid only for a stable plant, with all
        # gains zero (the detectability gate has already vetted this).
        zero = PeriodicGains.zeros(K, n, m)
        _require_stable(sys, zero)
        return zero

    a_lift = lift_cyclic([sys.A] * K, cyclic=True)
    q_lift = lift_cyclic([sys.q_eff] * K, cyclic=False)
    c_lift = np.zeros((total_rows, K * n))
    r_lift = np.zeros((total_rows, total_rows))
    offsets = []
    row = 0
    for k, (c_k, r_k, idx) in enumerate(pieces):
        rows = len(idx)
        c_lift[row : row + rows, k * n : (k + 1) * n] = c_k
        r_lift[row : row + rows, row : row + rows] = r_k
        offsets.append((row, rows))
        row += rows

    p_lift = solve_dare(a_lift, c_lift, q_lift, r_lift)
    innov = c_lift @ p_lift @ c_lift.T + r_lift
    gain_lift = np.linalg.solve(innov.T, (a_lift @ p_lift @ c_lift.T).T).T

    gains = np.zeros((K, n, m))
    for k, (c_k, r_k, idx) in enumerate(pieces):
        row, rows = offsets[k]
        dest = ((k + 1) % K) * n
        gains[k][:, idx] = gain_lift[dest : dest + n, row : row + rows]
    result = PeriodicGains(gains)
    if not monodromy_stable(sys, result):
        raise InitializationError("lifted Riccati solve produced an unstable closed loop")
    return result


def evaluate_schedule(sys: SystemModel, sched: Schedule) -> ScheduleEvaluation:
    """Canonical figure of merit for a schedule.

    Computes the Riccati-optimal gains for the fixed schedule, the
    covariance limit cycle they induce, and the average trace J. All
    schedule comparisons in the oracle and baselines go through this.
    """
    gains = init_gains_for_schedule(sys, sched)
    cycle = covariance_limit_cycle(sys, gains)
    return ScheduleEvaluation(J=cycle.mean_trace, gains=gains, cycle=cycle)


def cycle_residual(sys: SystemModel, gains: PeriodicGains, cycle: CovarianceCycle) -> float:
    """Largest one-step recursion defect of a claimed limit cycle.

    Measures max_k of ||P_{k+1} - (F_k P_k F_k^T + W_k)||_F with wraparound,
    which is zero exactly when the cycle satisfies the recursion.
    """
    factors = closed_loop_factors(sys, gains)
    noise = _step_noise(sys, gains)
    k_count = len(factors)
    if cycle.K != k_count:
        raise DimensionError(f"cycle period {cycle.K} does not match gains period {k_count}")
    worst = 0.0
    for k in range(k_count):
        predicted = factors[k] @ cycle[k] @ factors[k].T + noise[k]
        defect = float(np.linalg.norm(cycle[(k + 1) % k_count] - predicted))
        worst = max(worst, defect)
    return worst
