"""Dense linear-algebra kernels used throughout the package.

All functions take and return plain ``numpy.ndarray`` objects and never
mutate their inputs. Solvers re-symmetrize symmetric outputs, so downstream
covariance recursions do not accumulate asymmetry, and they verify their own
residual contracts before returning.
"""

from __future__ import annotations

import numpy as np

from .exceptions import (
    ConvergenceError,
    DimensionError,
    InputError,
    InstabilityError,
)

__all__ = [
    "as_matrix",
    "symmetrize",
    "require_symmetric",
    "psd_sqrt",
    "matrix_exponential",
    "spectral_radius",
    "solve_dlyap",
    "solve_gain_sylvester",
    "solve_dare",
]

# Largest dimension for which the vectorized Kronecker route is the default
# in solve_dlyap; above it the doubling iteration takes over.
KRON_LIMIT = 64

# Coefficients of the degree-6 diagonal Pade approximant of exp(x).
_PADE6 = (1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280)


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a 2-D float array with finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains non-finite entries")
    return arr


def _square(x, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(x, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def symmetrize(x: np.ndarray) -> np.ndarray:
    """Return the symmetric part (X + X^T) / 2."""
    return 0.5 * (x + x.T)


def require_symmetric(x, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    """Validate symmetry within ``tol`` (relative) and return the
    symmetrized copy."""
    arr = _square(x, name)
    scale = max(1.0, float(np.linalg.norm(arr)))
    if np.linalg.norm(arr - arr.T) > tol * scale:
        raise InputError(f"{name} is not symmetric within tolerance {tol:g}")
    return symmetrize(arr)


def psd_sqrt(x, name: str = "matrix") -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigendecomposition."""
    arr = require_symmetric(x, name)
    w, u = np.linalg.eigh(arr)
    scale = max(1.0, float(np.abs(w).max()))
    if w.min() < -1e-10 * scale:
        raise InputError(f"{name} is not positive semidefinite")
    return (u * np.sqrt(np.clip(w, 0.0, None))) @ u.T


def matrix_exponential(x) -> np.ndarray:
    """Matrix exponential e^X by scaling and squaring.

    The argument is scaled by a power of two until its 1-norm is at most
    0.5, a degree-6 diagonal Pade approximant is evaluated, and the result
    is squared back up.

    Parameters
    ----------
    x : array_like
        Square matrix.

    Returns
    -------
    numpy.ndarray
        e^X, same shape as ``x``.
    """
    a = _square(x, "matrix_exponential argument")
    n = a.shape[0]
    norm1 = float(np.linalg.norm(a, 1))
    squarings = 0
    if norm1 > 0.5:
        squarings = int(np.ceil(np.log2(norm1 / 0.5)))
        a = a / (2.0**squarings)

    eye = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    c = _PADE6
    even = c[0] * eye + c[2] * a2 + c[4] * a4 + c[6] * (a2 @ a4)
    odd = a @ (c[1] * eye + c[3] * a2 + c[5] * a4)
    result = np.linalg.solve(even - odd, even + odd)
    for _ in range(squarings):
        result = result @ result
    return result


def spectral_radius(x) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    a = _square(x, "spectral_radius argument")
    return float(np.abs(np.linalg.eigvals(a)).max())


def solve_dlyap(f, w, method: str = "auto", kron_limit: int = KRON_LIMIT) -> np.ndarray:
    """Solve the discrete Lyapunov equation X = F X F^T + W.

    Parameters
    ----------
    f : array_like
        Square matrix with spectral radius < 1.
    w : array_like
        Symmetric matrix, same shape as ``f``.
    method : {"auto", "kron", "doubling"}
        "kron" solves the vectorized n^2 x n^2 linear system directly;
        "doubling" runs the squared fixed-point (Smith) iteration. "auto"
        picks "kron" for n <= ``kron_limit`` and "doubling" above it.

    Returns
    -------
    numpy.ndarray
        The unique symmetric solution X.

    Raises
    ------
    InstabilityError
        If the spectral radius of ``f`` is >= 1.
    ConvergenceError
        If the residual contract ||X - FXF^T - W|| / max(1, ||W||) <= 1e-9
        cannot be met.
    """
    fm = _square(f, "F")
    wm = require_symmetric(w, "W")
    if fm.shape != wm.shape:
        raise DimensionError(f"F and W shapes differ: {fm.shape} vs {wm.shape}")
    rho = spectral_radius(fm)
    if rho >= 1.0:
        raise InstabilityError(f"spectral radius {rho:.6g} >= 1; no unique fixed point")

    n = fm.shape[0]
    if method == "auto":
        method = "kron" if n <= kron_limit else "doubling"
    if method == "kron":
        lhs = np.eye(n * n) - np.kron(fm, fm)
        x = np.linalg.solve(lhs, wm.ravel()).reshape(n, n)
    elif method == "doubling":
        x = wm.copy()
        g = fm.copy()
        for _ in range(200):
            term = g @ x @ g.T
            x = x + term
            if np.linalg.norm(term) <= 1e-16 * max(1.0, np.linalg.norm(x)):
                break
            g = g @ g
        else:
            raise ConvergenceError("doubling iteration failed to settle")
    else:
        raise InputError(f"unknown solve_dlyap method {method!r}")

    x = symmetrize(x)
    residual = np.linalg.norm(x - fm @ x @ fm.T - wm)
    if residual > 1e-9 * max(1.0, np.linalg.norm(wm)):
        raise ConvergenceError(
            f"Lyapunov residual {residual:.3g} exceeds contract for radius {rho:.6g}"
        )
    return x


def solve_gain_sylvester(v, d, rho: float, rhs) -> np.ndarray:
    """Solve 2 V L D + rho L = RHS for L.

    ``v`` (n x n) and ``d`` (m x m) must be symmetric positive definite and
    ``rho`` nonnegative. Both sides are diagonalized, so the equation
    reduces to an entrywise division in the joint eigenbasis.
    """
    vm = require_symmetric(v, "V")
    dm = require_symmetric(d, "D")
    rm = as_matrix(rhs, "RHS")
    if rm.shape != (vm.shape[0], dm.shape[0]):
        raise DimensionError(
            f"RHS shape {rm.shape} does not match V ({vm.shape[0]}) x D ({dm.shape[0]})"
        )
    if rho < 0:
        raise InputError(f"rho must be nonnegative, got {rho}")

    sv, uv = np.linalg.eigh(vm)
    sd, ud = np.linalg.eigh(dm)
    if sv.min() <= 0.0:
        raise InputError("V must be positive definite")
    if sd.min() <= 0.0:
        raise InputError("D must be positive definite")

    denom = 2.0 * np.outer(sv, sd) + rho
    sol = uv @ ((uv.T @ rm @ ud) / denom) @ ud.T

    residual = np.linalg.norm(2.0 * vm @ sol @ dm + rho * sol - rm)
    if residual > 1e-9 * max(1.0, np.linalg.norm(rm)):
        raise ConvergenceError(f"gain equation residual {residual:.3g} exceeds contract")
    return sol


def solve_dare(a, c, q_eff, r, tol: float = 1e-10, max_iters: int = 10000) -> np.ndarray:
    """Stabilizing solution of the filter Riccati equation.

    Iterates P <- Q_eff + A P A^T - A P C^T (C P C^T + R)^{-1} C P A^T from
    P = Q_eff until the relative step change drops below ``tol``.

    Parameters
    ----------
    a : array_like
        n x n transition matrix.
    c : array_like
        m x n observation matrix.
    q_eff : array_like
        Effective process-noise covariance (n x n, symmetric PSD).
    r : array_like
        Measurement-noise covariance (m x m, symmetric positive definite).

    Returns
    -------
    numpy.ndarray
        The stabilizing fixed point P.

    Raises
    ------
    ConvergenceError
        If the iteration does not settle within ``max_iters`` steps, or the
        fixed point fails its residual or closed-loop stability contract.
    """
    am = _square(a, "A")
    cm = as_matrix(c, "C")
    qm = require_symmetric(q_eff, "Q_eff")
    rm = require_symmetric(r, "R")
    n = am.shape[0]
    if cm.shape[1] != n:
        raise DimensionError(f"C has {cm.shape[1]} columns, expected {n}")
    if qm.shape != (n, n):
        raise DimensionError(f"Q_eff shape {qm.shape}, expected {(n, n)}")
    if rm.shape != (cm.shape[0], cm.shape[0]):
        raise DimensionError(f"R shape {rm.shape} does not match C rows {cm.shape[0]}")
    if np.linalg.eigvalsh(rm).min() <= 0.0:
        raise InputError("R must be positive definite")

    p = qm.copy()
    for _ in range(max_iters):
        innov = cm @ p @ cm.T + rm
        # gain_t = (C P C^T + R)^{-1} C P A^T, so the update term below is
        # (A P C^T) gain_t and stays symmetric up to roundoff.
        gain_t = np.linalg.solve(innov, cm @ p @ am.T)
        p_next = symmetrize(qm + am @ p @ am.T - (am @ p @ cm.T) @ gain_t)
        if np.linalg.norm(p_next - p) <= tol * max(1.0, np.linalg.norm(p)):
            p = p_next
            break
        p = p_next
    else:
        raise ConvergenceError(f"Riccati iteration did not converge in {max_iters} steps")

    innov = cm @ p @ cm.T + rm
    gain = am @ p @ cm.T @ np.linalg.inv(innov)
    residual = np.linalg.norm(p - qm - am @ p @ am.T + gain @ innov @ gain.T)
    if residual > 1e-8 * max(1.0, np.linalg.norm(p)):
        raise ConvergenceError(f"Riccati residual {residual:.3g} exceeds contract")
    if spectral_radius(am - gain @ cm) >= 1.0:
        raise ConvergenceError("Riccati fixed point is not stabilizing")
    return p
