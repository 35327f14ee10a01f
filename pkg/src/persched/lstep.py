"""Smooth gain-design subproblem.

Minimizes the un-normalized trace of the covariance limit cycle plus a
proximal pull toward per-step targets, over the periodic gain sequence.
The solver alternates exact coordinate solves (freeze the covariance and
value cycles, solve a small Sylvester equation per step) with a backtracking
line search on the resulting direction; each accepted step strictly
decreases the objective and every iterate keeps the closed loop stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionError,
    InputError,
    InstabilityError,
    LineSearchError,
)
from .linalg import solve_gain_sylvester, symmetrize
from .model import SystemModel
from .periodic import (
    CovarianceCycle,
    PeriodicGains,
    covariance_limit_cycle,
    monodromy_spectral_radius,
    value_cycle,
)

__all__ = [
    "LStepProblem",
    "LStepResult",
    "phi_value",
    "gradient_phi",
    "anderson_moore_update",
    "armijo_step",
    "solve",
]

# Trial gains whose monodromy spectral radius is within this margin of 1 are
# rejected outright (treated as infinite objective) by the line search.
_STABILITY_MARGIN = 1e-9

_MIN_STEP = 1e-12


@dataclass(frozen=True, eq=False)
class LStepProblem:
    """Gain subproblem data: the plant, proximal targets U_0..U_{K-1}, and
    the proximal weight rho.

    rho = 0 is allowed and reduces the objective to the plain trace sum.
    """

    sys: SystemModel
    U: np.ndarray
    rho: float

    def __post_init__(self):
        u = np.asarray(self.U, dtype=float)
        if u.ndim == 2:
            u = u[np.newaxis]
        if u.ndim != 3:
            raise DimensionError(f"targets must stack to (K, N, M), got ndim={u.ndim}")
        if u.shape[1] != self.sys.n_states or u.shape[2] != self.sys.n_sensors:
            raise DimensionError(
                f"targets of shape {u.shape} do not match system with "
                f"N={self.sys.n_states}, M={self.sys.n_sensors}"
            )
        if not np.all(np.isfinite(u)):
            raise InputError("targets must be finite")
        if self.rho < 0:
            raise InputError("rho must be nonnegative")
        u = np.ascontiguousarray(u)
        u.setflags(write=False)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def K(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class LStepResult:
    """Outcome of one gain-subproblem solve.

    ``converged`` reports whether the gradient norm reached the tolerance;
    otherwise the iteration cap was hit or the line search failed (then
    ``line_search_failed`` is set and ``gains`` is the best iterate found).
    ``descent_history`` records the directional derivative of each
    Anderson-Moore direction, which stays negative away from stationarity.
    """

    gains: PeriodicGains
    phi: float
    grad_norm: float
    iterations: int
    step_sizes: tuple
    converged: bool
    line_search_failed: bool
    phi_history: tuple
    descent_history: tuple


def _check_compatible(prob: LStepProblem, gains: PeriodicGains) -> None:
    if gains.gains.shape != prob.U.shape:
        raise DimensionError(
            f"gains shape {gains.gains.shape} does not match targets {prob.U.shape}"
        )


def _penalty(prob: LStepProblem, gains: PeriodicGains) -> float:
    return 0.5 * prob.rho * float(np.sum((gains.gains - prob.U) ** 2))


def _phi_from_cycle(prob: LStepProblem, gains: PeriodicGains, cycle: CovarianceCycle) -> float:
    return cycle.trace_sum + _penalty(prob, gains)


def phi_value(prob: LStepProblem, gains: PeriodicGains) -> float:
    """Subproblem objective: un-normalized trace sum over the limit cycle
    plus (rho/2) times the squared distance to the targets.

    Raises InstabilityError when the gains do not stabilize the closed loop.
    """
    _check_compatible(prob, gains)
    cycle = covariance_limit_cycle(prob.sys, gains)
    return _phi_from_cycle(prob, gains, cycle)


def gradient_phi(
    prob: LStepProblem, gains: PeriodicGains, cycle: CovarianceCycle = None, values=None
) -> np.ndarray:
    """Objective gradient with respect to each gain, as a (K, N, M) stack.

    For step k the gradient is
    2 V_{k+1} L_k R - 2 V_{k+1} (A - L_k C) P_k C^T + rho (L_k - U_k),
    with the covariance cycle {P_k} and value cycle {V_k} (V_K = V_0)
    evaluated at the current gains. Precomputed cycles may be passed in to
    avoid the two Lyapunov solves.
    """
    _check_compatible(prob, gains)
    sys = prob.sys
    if cycle is None:
        cycle = covariance_limit_cycle(sys, gains)
    if values is None:
        values = value_cycle(sys, gains)
    K = prob.K
    grad = np.empty_like(prob.U)
    for k in range(K):
        v_next = values[(k + 1) % K]
        closed = sys.A - gains[k] @ sys.C
        grad[k] = (
            2.0 * v_next @ gains[k] @ sys.R
            - 2.0 * v_next @ closed @ cycle[k] @ sys.C.T
            + prob.rho * (gains[k] - prob.U[k])
        )
    return grad


def anderson_moore_update(
    prob: LStepProblem, gains: PeriodicGains, cycle: CovarianceCycle = None, values=None
) -> PeriodicGains:
    """Exact coordinate solve with the cycles frozen at the current gains.

    Freezes {P_k} and {V_k} and solves, independently for each step,
    2 V_{k+1} L_k (R + C P_k C^T) + rho L_k = 2 V_{k+1} A P_k C^T + rho U_k.
    The returned candidate is a fixed point exactly when the current gains
    are stationary.
    """
    _check_compatible(prob, gains)
    sys = prob.sys
    if cycle is None:
        cycle = covariance_limit_cycle(sys, gains)
    if values is None:
        values = value_cycle(sys, gains)
    K = prob.K
    new = np.empty_like(prob.U)
    for k in range(K):
        v_next = values[(k + 1) % K]
        d = symmetrize(sys.R + sys.C @ cycle[k] @ sys.C.T)
        rhs = 2.0 * v_next @ sys.A @ cycle[k] @ sys.C.T + prob.rho * prob.U[k]
        new[k] = solve_gain_sylvester(v_next, d, prob.rho, rhs)
    return PeriodicGains(new)


def _trial_phi(prob: LStepProblem, trial: PeriodicGains):
    """Objective and cycle at a trial point, (inf, None) when it destabilizes."""
    if monodromy_spectral_radius(prob.sys, trial) >= 1.0 - _STABILITY_MARGIN:
        return np.inf, None
    cycle = covariance_limit_cycle(prob.sys, trial)
    return _phi_from_cycle(prob, trial, cycle), cycle


def _armijo(
    prob: LStepProblem,
    gains: PeriodicGains,
    direction: np.ndarray,
    alpha: float,
    beta: float,
    phi0: float,
    slope: float,
):
    """Backtracking search. Returns (s, new gains, new phi, new cycle)."""
    s = 1.0
    while s >= _MIN_STEP:
        trial = PeriodicGains(gains.gains + s * direction)
        trial_phi, trial_cycle = _trial_phi(prob, trial)
        if trial_phi < phi0 + alpha * s * slope:
            return s, trial, trial_phi, trial_cycle
        s *= beta
    raise LineSearchError(f"no acceptable step above {_MIN_STEP:g}")


def armijo_step(
    prob: LStepProblem,
    gains: PeriodicGains,
    direction,
    alpha: float = 0.3,
    beta: float = 0.5,
) -> float:
    """Largest backtracked step size accepted by the sufficient-decrease rule.

    Tries s in {1, beta, beta^2, ...} and returns the first s with
    phi(L + s D) < phi(L) + alpha * s * <grad, D>. Destabilizing trial
    points count as infinitely bad and are skipped. Raises LineSearchError
    if s underflows, and InputError when the direction is not a descent
    direction.
    """
    _check_compatible(prob, gains)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != prob.U.shape:
        raise DimensionError(
            f"direction shape {direction.shape} does not match targets {prob.U.shape}"
        )
    if not (0 <= alpha < 1) or not (0 < beta < 1):
        raise InputError("need 0 <= alpha < 1 and 0 < beta < 1")
    cycle = covariance_limit_cycle(prob.sys, gains)
    phi0 = _phi_from_cycle(prob, gains, cycle)
    grad = gradient_phi(prob, gains, cycle=cycle)
    slope = float(np.sum(grad * direction))
    if slope >= 0:
        raise InputError(f"direction is not a descent direction (slope {slope:.3g})")
    s, _, _, _ = _armijo(prob, gains, direction, alpha, beta, phi0, slope)
    return s


def solve(
    prob: LStepProblem,
    init: PeriodicGains,
    tol: float = 1e-6,
    max_iters: int = 100,
    alpha: float = 0.3,
    beta: float = 0.5,
) -> LStepResult:
    """Run the gain solver from a stabilizing start.

    Each iteration computes both cycles, checks the gradient norm against
    ``tol``, forms the coordinate-solve direction, and backtracks along it.
    The objective decreases strictly at every accepted step. On line-search
    failure the best iterate found so far is returned with the failure flag
    set instead of raising.
    """
    _check_compatible(prob, init)
    if monodromy_spectral_radius(prob.sys, init) >= 1.0:
        raise InstabilityError("initial gains do not stabilize the closed loop")

    gains = init
    cycle = covariance_limit_cycle(prob.sys, gains)
    phi_history = []
    step_sizes = []
    descent_history = []
    converged = False
    ls_failed = False
    iterations = 0

    while True:
        values = value_cycle(prob.sys, gains)
        phi = _phi_from_cycle(prob, gains, cycle)
        grad = gradient_phi(prob, gains, cycle=cycle, values=values)
        grad_norm = float(np.linalg.norm(grad))
        phi_history.append(phi)
        if grad_norm <= tol:
            converged = True
            break
        if iterations >= max_iters:
            break
        candidate = anderson_moore_update(prob, gains, cycle=cycle, values=values)
        direction = candidate.gains - gains.gains
        slope = float(np.sum(grad * direction))
        descent_history.append(slope)
        if slope >= 0.0:
            # Numerically stationary: the coordinate solve returned the
            # current point up to roundoff, so no further progress is
            # possible at this tolerance.
            break
        try:
            s, gains, _, cycle = _armijo(prob, gains, direction, alpha, beta, phi, slope)
        except LineSearchError:
            ls_failed = True
            break
        step_sizes.append(s)
        iterations += 1

    return LStepResult(
        gains=gains,
        phi=phi,
        grad_norm=grad_norm,
        iterations=iterations,
        step_sizes=tuple(step_sizes),
        converged=converged,
        line_search_failed=ls_failed,
        phi_history=tuple(phi_history),
        descent_history=tuple(descent_history),
    )
