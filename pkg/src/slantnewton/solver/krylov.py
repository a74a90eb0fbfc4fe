"""Restarted GMRES for matrix-free operators, plus a dense oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as scla
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from slantnewton.core.log import logger

EPS = np.finfo(float).eps


@dataclass
class KrylovOutcome:
    solution: np.ndarray
    relative_residual: float
    iterations: int
    converged: bool
    # Givens estimate of the relative residual after each inner step.
    residual_history: list[float] = field(default_factory=list)
    peak_basis_bytes: int = 0


def _as_operator(op) -> LinearOperator:
    op = aslinearoperator(op)
    if op.shape[0] != op.shape[1]:
        raise ValueError(f"operator must be square, got shape {op.shape}")
    return op


def gmres(
    op,
    b: np.ndarray,
    tol_rel: float,
    restart: int = 50,
    max_iters: int | None = None,
    x0: np.ndarray | None = None,
    preconditioner=None,
) -> KrylovOutcome:
    """Solve op x = b until ||b - op x|| <= tol_rel ||b||.

    Arnoldi uses classical Gram-Schmidt with one reorthogonalization
    pass; the small least-squares problem is kept triangular with
    Givens rotations. Every cycle ends by recomputing the true residual,
    which is what `relative_residual` and `converged` report.

    Args:
        op: square operator (anything scipy's aslinearoperator takes)
        b: right-hand side
        tol_rel: relative residual target in (0, 1)
        restart: Krylov dimension per cycle
        max_iters: cap on total operator applications (default 10*dim)
        x0: initial guess (default zero)
        preconditioner: optional right preconditioner; identity if None

    Returns:
        KrylovOutcome with the best iterate. converged is False when
        max_iters ran out or the Arnoldi process broke down short of
        the target.
    """
    op = _as_operator(op)
    dim = op.shape[0]
    b = np.asarray(b, dtype=float)
    if b.shape != (dim,):
        raise ValueError(f"rhs has shape {b.shape}, operator dim {dim}")
    if not 0 < tol_rel < 1:
        raise ValueError(f"tol_rel must lie in (0, 1), got {tol_rel}")
    if restart <= 0:
        raise ValueError(f"restart must be positive, got {restart}")
    precond = (
        aslinearoperator(preconditioner)
        if preconditioner is not None
        else None
    )

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return KrylovOutcome(np.zeros(dim), 0.0, 0, True)

    max_iters = 10 * dim if max_iters is None else max_iters
    slack = 1.0 + 10.0 * EPS * dim

    x = np.zeros(dim) if x0 is None else np.array(x0, dtype=float)
    r = b - op.matvec(x) if np.any(x) else b.copy()
    beta = float(np.linalg.norm(r))
    relres = beta / bnorm
    if relres <= tol_rel:
        return KrylovOutcome(x, relres, 0, True)

    k = min(restart, dim)
    basis = np.empty((k + 1, dim))
    hess = np.zeros((k + 1, k))
    cs = np.zeros(k)
    sn = np.zeros(k)
    g = np.zeros(k + 1)
    peak = basis.nbytes + hess.nbytes + 3 * g.nbytes

    iterations = 0
    history: list[float] = []
    breakdown = False

    while iterations < max_iters:
        basis[0] = r / beta
        hess[:] = 0.0
        g[:] = 0.0
        g[0] = beta
        steps = 0

        for j in range(k):
            v = basis[j] if precond is None else precond.matvec(basis[j])
            w = op.matvec(v)
            iterations += 1
            wnorm = float(np.linalg.norm(w))

            h = basis[: j + 1] @ w
            w -= h @ basis[: j + 1]
            correction = basis[: j + 1] @ w
            w -= correction @ basis[: j + 1]
            h += correction
            hnext = float(np.linalg.norm(w))

            column = np.append(h, hnext)
            for i in range(j):
                upper = cs[i] * column[i] + sn[i] * column[i + 1]
                column[i + 1] = -sn[i] * column[i] + cs[i] * column[i + 1]
                column[i] = upper
            rho = float(np.hypot(column[j], column[j + 1]))
            if rho == 0.0:
                # Operator annihilates the new direction.
                breakdown = True
                break
            cs[j] = column[j] / rho
            sn[j] = column[j + 1] / rho
            column[j] = rho
            column[j + 1] = 0.0
            hess[: j + 2, j] = column
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            steps = j + 1

            estimate = abs(g[j + 1]) / bnorm
            history.append(estimate)
            if hnext <= EPS * max(wnorm, EPS):
                breakdown = True
                break
            if estimate <= tol_rel or iterations >= max_iters:
                break
            basis[j + 1] = w / hnext

        if steps > 0:
            coeffs = scla.solve_triangular(
                hess[:steps, :steps], g[:steps], check_finite=False
            )
            update = coeffs @ basis[:steps]
            x += update if precond is None else precond.matvec(update)

        r = b - op.matvec(x)
        beta = float(np.linalg.norm(r))
        relres = beta / bnorm
        logger.trace(
            "GMRES cycle finished",
            iterations=iterations,
            relative_residual=relres,
        )
        if relres <= tol_rel * slack or breakdown or steps == 0:
            break

    converged = relres <= tol_rel * slack
    return KrylovOutcome(
        solution=x,
        relative_residual=relres,
        iterations=iterations,
        converged=converged,
        residual_history=history,
        peak_basis_bytes=peak,
    )


def materialize(op) -> np.ndarray:
    """Dense matrix of op, built one column at a time."""
    op = _as_operator(op)
    return op.matmat(np.eye(op.shape[0]))


def dense_solve(op, b: np.ndarray, cap: int = 2048) -> np.ndarray:
    """Solve op x = b by LU with partial pivoting.

    Reference solver for small grids only.

    Raises:
        ValueError: dim exceeds cap
        scipy.linalg.LinAlgError: matrix singular to working precision
    """
    op = _as_operator(op)
    dim = op.shape[0]
    if dim > cap:
        raise ValueError(
            f"dense_solve refuses dim {dim} > cap {cap}; use gmres"
        )
    matrix = materialize(op)
    lu, piv = scla.lu_factor(matrix, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= EPS * dim * max(pivots.max(), EPS):
        raise scla.LinAlgError(
            "matrix is singular to working precision"
        )
    return scla.lu_solve((lu, piv), np.asarray(b, dtype=float))
