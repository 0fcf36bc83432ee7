"""Box-constrained least squares and an exhaustive binary reference solver.

``solve_bvls`` minimizes ``||A x - 1||^2`` subject to ``0 <= x_i <= 1`` with
an active-set method: variables sit at a bound or are free, the free
subproblem is solved through the normal equations with a Cholesky
factorization, and first-order (KKT) optimality is certified before
returning.  ``solve_integer`` enumerates every binary vector and is the
ground-truth oracle for small column counts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import as_float_matrix

__all__ = ["BvlsSolution", "IntegerSolution", "BvlsNonConvergence",
           "solve_bvls", "solve_integer"]

_LOWER, _FREE, _UPPER = -1, 0, 1


@dataclass(frozen=True, eq=False)
class BvlsSolution:
    """Relaxed solution: box-feasible x, squared residual, KKT certificate."""

    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int


@dataclass(frozen=True, eq=False)
class IntegerSolution:
    """Globally optimal binary solution found by exhaustive enumeration."""

    x: np.ndarray
    objective: float
    enumerated: int


class BvlsNonConvergence(RuntimeError):
    """Raised when the active-set loop exhausts its iteration budget.

    Carries the best iterate seen so far in ``best``; callers must not treat
    it as optimal.
    """

    def __init__(self, message: str, best: BvlsSolution):
        super().__init__(message)
        self.best = best


def _kkt_violations(g: np.ndarray, state: np.ndarray) -> np.ndarray:
    # free: |g| ~ 0; at lower bound g >= 0 is optimal; at upper bound g <= 0.
    viol = np.abs(g)
    lower = state == _LOWER
    upper = state == _UPPER
    viol[lower] = np.maximum(-g[lower], 0.0)
    viol[upper] = np.maximum(g[upper], 0.0)
    return viol


def _solve_spd(gram_ff: np.ndarray, rhs: np.ndarray, ridge: float) -> np.ndarray:
    try:
        factor = cho_factor(gram_ff, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        # Rank-deficient free set (duplicate columns): regularize just enough
        # to make the factorization succeed.
        shifted = gram_ff + ridge * np.eye(gram_ff.shape[0])
        factor = cho_factor(shifted, lower=True, check_finite=False)
    return cho_solve(factor, rhs, check_finite=False)


def solve_bvls(A, tol: float = 1e-10, max_iter: int | None = None) -> BvlsSolution:
    """Minimize ``||A x - 1||^2`` over the box ``[0, 1]^n``.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Dense nonempty matrix; NaN or Inf entries are rejected.
    tol : float
        KKT tolerance on the gradient ``g = 2 A'(A x - 1)``: free variables
        need ``|g_i| <= tol``, variables at the lower bound ``g_i >= -tol``,
        at the upper bound ``g_i <= tol``.
    max_iter : int, optional
        Cap on outer iterations, default ``100 * n``.

    Returns
    -------
    BvlsSolution
        With ``x`` clamped into the box and ``kkt_residual <= tol``.

    Raises
    ------
    BvlsNonConvergence
        If optimality is not certified within ``max_iter`` iterations; the
        exception carries the best iterate.
    """
    A = as_float_matrix(A, "A")
    if A.size == 0:
        raise ValueError("A must be nonempty")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    m, n = A.shape
    if max_iter is None:
        max_iter = 100 * n

    b = np.ones(m)
    gram = A.T @ A
    atb = A.T @ b
    ridge = 1e-12 * float(np.trace(gram)) / n
    x = np.zeros(n)
    state = np.full(n, _LOWER, dtype=np.int8)
    best: BvlsSolution | None = None

    for iteration in range(1, max_iter + 1):
        residual = A @ x - b
        g = 2.0 * (A.T @ residual)
        viol = _kkt_violations(g, state)
        kkt = float(viol.max())
        objective = float(residual @ residual)
        if best is None or objective < best.objective:
            best = BvlsSolution(np.clip(x, 0.0, 1.0), objective, kkt, iteration)
        if kkt <= tol:
            return BvlsSolution(np.clip(x, 0.0, 1.0), objective, kkt, iteration)

        # Free the most-violating bound variable (ties: lowest index). If the
        # violation sits on an already-free variable the sets stay unchanged
        # and the subproblem is simply re-solved.
        at_bound = state != _FREE
        if at_bound.any():
            bound_viol = np.where(at_bound, viol, -1.0)
            if float(bound_viol.max()) > tol:
                state[int(np.argmax(bound_viol))] = _FREE

        # Inner loop: solve the free subproblem, walk toward it, pinning any
        # variable that hits a bound. Each pass shrinks the free set or exits.
        for _ in range(n + 1):
            free = np.flatnonzero(state == _FREE)
            if free.size == 0:
                break
            upper = np.flatnonzero(state == _UPPER)
            rhs = atb[free].copy()
            if upper.size:
                rhs -= gram[np.ix_(free, upper)] @ x[upper]
            z = _solve_spd(gram[np.ix_(free, free)], rhs, ridge)
            below = z < 0.0
            above = z > 1.0
            if not below.any() and not above.any():
                x[free] = z
                break
            xf = x[free]
            step = z - xf
            alpha = np.full(free.size, np.inf)
            alpha[below] = (0.0 - xf[below]) / step[below]
            alpha[above] = (1.0 - xf[above]) / step[above]
            a = min(max(float(alpha.min()), 0.0), 1.0)
            x[free] = xf + a * step
            hit = alpha <= a + 1e-15
            pin_lower = free[hit & below]
            pin_upper = free[hit & above]
            x[pin_lower] = 0.0
            state[pin_lower] = _LOWER
            x[pin_upper] = 1.0
            state[pin_upper] = _UPPER

    raise BvlsNonConvergence(
        f"BVLS did not reach KKT tolerance {tol} within {max_iter} iterations", best)


def solve_integer(A, cap: int = 20) -> IntegerSolution:
    """Exhaustively minimize ``||A x - 1||^2`` over binary vectors.

    Ties are broken by fewer ones, then by the lexicographically smallest
    support (the chosen column-index set). Refuses matrices with more than
    ``cap`` columns to guard against combinatorial blow-up.
    """
    A = as_float_matrix(A, "A")
    if A.size == 0:
        raise ValueError("A must be nonempty")
    m, n = A.shape
    if n > cap:
        raise ValueError(f"matrix has {n} columns, exceeding the enumeration cap {cap}")

    total = 1 << n
    bit_positions = np.arange(n)
    best_key: tuple | None = None
    best_x: np.ndarray | None = None
    batch = 1 << 16
    for start in range(0, total, batch):
        ks = np.arange(start, min(start + batch, total), dtype=np.int64)
        X = ((ks[:, None] >> bit_positions) & 1).astype(np.float64)
        R = X @ A.T
        R -= 1.0
        obj = np.einsum("ij,ij->i", R, R)
        batch_min = float(obj.min())
        if best_key is not None and batch_min > best_key[0]:
            continue
        for ci in np.flatnonzero(obj == batch_min):
            xv = X[ci]
            key = (batch_min, int(xv.sum()), tuple(np.flatnonzero(xv).tolist()))
            if best_key is None or key < best_key:
                best_key = key
                best_x = xv.copy()
    assert best_x is not None and best_key is not None
    return IntegerSolution(best_x, best_key[0], total)
