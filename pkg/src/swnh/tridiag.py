"""Tridiagonal systems: Thomas recurrence, pivoting fallback, cyclic variant."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, solve_banded

from .errors import SingularSystemError

PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class TriDiagSystem:
    """``lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]``.

    For a cyclic system ``lower[0]`` couples row 0 to the last unknown and
    ``upper[-1]`` the last row to unknown 0; otherwise both are zero.
    ``active`` marks rows that are genuine equations (not pinned unknowns).
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    periodic: bool = False
    active: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        n = self.size
        M = np.diag(self.diag).astype(float)
        k = np.arange(n - 1)
        M[k + 1, k] = self.lower[1:]
        M[k, k + 1] = self.upper[:-1]
        if self.periodic:
            M[0, n - 1] += self.lower[0]
            M[n - 1, 0] += self.upper[-1]
        return M

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        if self.periodic:
            y[0] += self.lower[0] * x[-1]
            y[-1] += self.upper[-1] * x[0]
        return y

    def solve(self) -> np.ndarray:
        if self.periodic:
            return solve_cyclic(self.lower, self.diag, self.upper, self.rhs)
        return solve_tridiagonal(self.lower, self.diag, self.upper, self.rhs)


@njit(cache=True)
def thomas(a, b, c, d, tol):
    """Thomas algorithm without pivoting.

    Returns the solution and a flag that is False when a pivot fell below
    ``tol`` (the solution is then meaningless).
    """
    n = d.size
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    piv = b[0]
    if abs(piv) < tol:
        return x, False
    cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for k in range(1, n):
        piv = b[k] - a[k] * cp[k - 1]
        if abs(piv) < tol:
            return x, False
        cp[k] = c[k] / piv
        dp[k] = (d[k] - a[k] * dp[k - 1]) / piv
    x[n - 1] = dp[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = dp[k] - cp[k] * x[k + 1]
    return x, True


def _scale(a, b, c) -> float:
    return float(max(np.max(np.abs(a)), np.max(np.abs(b)), np.max(np.abs(c)), np.finfo(float).tiny))


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system, falling back to LAPACK partial pivoting.

    Raises
    ------
    SingularSystemError
        If the matrix is numerically singular.
    """
    a = np.ascontiguousarray(lower, dtype=float)
    b = np.ascontiguousarray(diag, dtype=float)
    c = np.ascontiguousarray(upper, dtype=float)
    d = np.ascontiguousarray(rhs, dtype=float)
    tol = PIVOT_RTOL * _scale(a, b, c)
    x, ok = thomas(a, b, c, d, tol)
    if ok and np.all(np.isfinite(x)):
        return x
    ab = np.zeros((3, b.size))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    try:
        x = solve_banded((1, 1), ab, d)
    except (LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"singular pressure system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("singular pressure system: non-finite solution")
    return x


def solve_cyclic(lower, diag, upper, rhs) -> np.ndarray:
    """Cyclic tridiagonal solve by a Sherman-Morrison rank-one correction."""
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    n = b.size
    if n < 3:
        raise ValueError("cyclic systems need at least 3 unknowns")
    alpha, beta = c[-1], a[0]
    gamma = -b[0] if b[0] != 0.0 else -1.0
    b[0] -= gamma
    b[-1] -= alpha * beta / gamma
    a2 = a.copy()
    a2[0] = 0.0
    c2 = c.copy()
    c2[-1] = 0.0
    x = solve_tridiagonal(a2, b, c2, rhs)
    uvec = np.zeros(n)
    uvec[0], uvec[-1] = gamma, alpha
    z = solve_tridiagonal(a2, b, c2, uvec)
    denom = 1.0 + z[0] + beta * z[-1] / gamma
    if abs(denom) < PIVOT_RTOL:
        raise SingularSystemError("singular cyclic pressure system")
    fact = (x[0] + beta * x[-1] / gamma) / denom
    return x - fact * z
