from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .assembly_lib import SymSparseMatrix
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-10


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float


def _not_finite(what: str, n: int, iterations: int = 0) -> ED_SOLVER_EXCEPTION:
    logger.error(f"PCG stopped: {what} is not finite (n={n}, iteration {iterations})")
    return ED_SOLVER_EXCEPTION(f"Linear solve failed: {what} is not finite (iteration {iterations})",
                               ErrorType.CONVERGENCE, metric=math.inf)


def solve_spd(
    A: SymSparseMatrix,
    b: np.ndarray,
    rel_tol: float = DEFAULT_REL_TOL,
    x0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Jacobi-preconditioned conjugate gradients for a symmetric positive definite A.
    Stops on the true residual: ||A x - b|| <= rel_tol * ||b||.
    Non-finite data (b, x0, or a residual that overflows) is a CONVERGENCE error.
    """
    require(0.0 < rel_tol < 1.0, f"rel_tol must lie in (0, 1), got {rel_tol}", key="lin_tol")
    b = np.asarray(b, dtype=float)
    n = A.n
    if b.shape != (n,):
        raise ED_SOLVER_EXCEPTION(f"Right-hand side has shape {b.shape}, expected ({n},)", ErrorType.VALIDATION)

    b_norm = np.linalg.norm(b)
    if not math.isfinite(b_norm):
        raise _not_finite("right-hand side", n)
    if b_norm == 0.0:
        return np.zeros(n), SolveReport(iterations=0, relative_residual=0.0)

    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise ED_SOLVER_EXCEPTION("Matrix diagonal is not positive; not SPD", ErrorType.VALIDATION)
    inv_diag = 1.0 / diag
    max_iter = 10 * n if max_iter is None else max_iter
    target = rel_tol * b_norm

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise _not_finite("initial guess", n)
    r = b - A @ x
    iterations = 0
    while True:
        r_norm = np.linalg.norm(r)
        if not math.isfinite(r_norm):
            raise _not_finite("residual", n, iterations)
        if r_norm <= target:
            # the recurrence residual drifts; confirm on the true one
            r = b - A @ x
            r_norm = np.linalg.norm(r)
            if not math.isfinite(r_norm):
                raise _not_finite("true residual", n, iterations)
            if r_norm <= target:
                break
        if iterations >= max_iter:
            rel = r_norm / b_norm
            logger.error(f"PCG did not converge in {max_iter} iterations (relative residual {rel:.3e})")
            raise ED_SOLVER_EXCEPTION(
                f"Linear solve did not converge within {max_iter} iterations "
                f"(relative residual {rel:.3e} > {rel_tol:.1e})",
                ErrorType.CONVERGENCE, metric=rel)
        # restart the search direction from the current residual
        z = inv_diag * r
        p = z.copy()
        rz = r @ z
        while iterations < max_iter and np.linalg.norm(r) > target:
            Ap = A @ p
            curvature = p @ Ap
            if not (math.isfinite(curvature) and curvature > 0.0):
                raise _not_finite("search curvature", n, iterations)
            alpha = rz / curvature
            x += alpha * p
            r -= alpha * Ap
            z = inv_diag * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
            iterations += 1

    rel = float(r_norm / b_norm)
    return x, SolveReport(iterations=iterations, relative_residual=rel)
