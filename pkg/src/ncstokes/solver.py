"""Direct and iterative solution of the constrained saddle-point system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    IterationDivergenceError,
    NotPositiveDefiniteError,
    SingularSystemError,
)
from .femspace import FieldCoefficients


class Factorization:
    """Sparse LU with residual-checked solves and iterative refinement.

    ``solve`` guarantees a relative residual of at most ``tol`` (absolute
    when the right-hand side vanishes), refining up to three times before
    giving up. A factorization is read-only and may be shared across workers
    for repeated right-hand sides.
    """

    def __init__(self, matrix, error=SingularSystemError):
        self._matrix = sp.csr_matrix(matrix)
        self._error = error
        try:
            self._lu = spla.splu(sp.csc_matrix(matrix))
        except RuntimeError as exc:
            raise error(f"factorization failed: {exc}") from exc

    def solve(self, rhs, tol=1e-10, max_refinements=3):
        rhs = np.asarray(rhs, dtype=np.float64)
        x = self._lu.solve(rhs)
        scale = np.linalg.norm(rhs)
        for _ in range(max_refinements + 1):
            residual = np.linalg.norm(rhs - self._matrix @ x)
            if residual <= tol * (scale if scale > 0 else 1.0):
                return x
            x = x + self._lu.solve(rhs - self._matrix @ x)
        raise self._error(
            f"residual {residual:.3e} above tolerance after iterative refinement"
        )


def solve_spd(A, b, tol=1e-12):
    """Solve a symmetric positive definite system directly.

    Raises NotPositiveDefiniteError when the factorization breaks down or
    the solution fails the positivity probe b'x = x'Ax > 0.
    """
    fact = Factorization(A, error=NotPositiveDefiniteError)
    x = fact.solve(np.asarray(b, dtype=np.float64), tol=tol)
    if np.linalg.norm(b) > 0 and float(np.dot(b, x)) <= 0.0:
        raise NotPositiveDefiniteError("matrix is not positive definite (x'Ax <= 0)")
    return x


@dataclass
class SolutionField:
    """Velocity and pressure coefficients plus the mean-constraint multiplier."""

    u: FieldCoefficients
    p: FieldCoefficients
    multiplier: float


def _assemble_solution(reduced, x):
    n_i = reduced.n_interior
    n_p = reduced.n_pressure
    u_full = np.zeros(reduced.vel_dofmap.n_dofs)
    u_full[reduced.interior] = x[:n_i]
    u_full[reduced.boundary] = reduced.boundary_values
    u = FieldCoefficients(dofmap=reduced.vel_dofmap, values=u_full)
    p = FieldCoefficients(dofmap=reduced.pres_dofmap, values=x[n_i : n_i + n_p])
    return SolutionField(u=u, p=p, multiplier=float(x[-1]))


def solve_saddle(reduced, method="direct", tol=1e-10):
    """Solve a constrained saddle system and re-inject the boundary values.

    ``method`` selects the sparse direct factorization of the augmented
    matrix (default) or the Schur-complement conjugate-gradient path
    (``"uzawa"``) kept for cross validation.
    """
    if method == "direct":
        x = Factorization(reduced.matrix, error=SingularSystemError).solve(
            reduced.rhs, tol=tol
        )
    elif method == "uzawa":
        x = _solve_uzawa(reduced, tol=tol)
    else:
        raise ValueError(f"unknown solver method '{method}'")
    return _assemble_solution(reduced, x)


def _solve_uzawa(reduced, tol, maxiter=None):
    """Conjugate gradients on the pressure Schur complement.

    The operator B A^-1 B' (+G) has the constant pressure in its kernel, so
    residuals are kept mean free and the final pressure is shifted to the
    weighted zero-mean representative.
    """
    n_i = reduced.n_interior
    n_p = reduced.n_pressure
    lu = spla.splu(sp.csc_matrix(reduced.A_II))
    B_I = reduced.B_I
    F = reduced.rhs[:n_i]
    g_p = reduced.rhs[n_i : n_i + n_p]

    def apply_schur(q):
        y = B_I @ lu.solve(B_I.T @ q)
        if reduced.G is not None:
            y = y + reduced.G @ q
        return y

    rhs = -g_p - B_I @ lu.solve(F)
    rhs = rhs - rhs.mean()
    p = _projected_cg(apply_schur, rhs, tol=min(tol, 1e-11), maxiter=maxiter or 20 * n_p)
    p = p - (reduced.c @ p) / reduced.c.sum()
    u = lu.solve(F + B_I.T @ p)
    x = np.concatenate([u, p, [0.0]])

    residual = np.linalg.norm(reduced.rhs - reduced.matrix @ x)
    scale = np.linalg.norm(reduced.rhs)
    if residual > tol * (scale if scale > 0 else 1.0):
        raise IterationDivergenceError(
            f"Schur iteration residual {residual:.3e} above tolerance"
        )
    return x


def _projected_cg(apply_op, b, tol, maxiter):
    """Plain CG for a positive semidefinite operator with constant kernel."""
    x = np.zeros_like(b)
    r = b - b.mean()
    p = r.copy()
    rr = r @ r
    scale = np.sqrt(rr)
    if scale == 0.0:
        return x
    for _ in range(maxiter):
        Ap = apply_op(p)
        Ap = Ap - Ap.mean()
        alpha = rr / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        r -= r.mean()
        rr_new = r @ r
        if np.sqrt(rr_new) <= tol * scale:
            return x
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise IterationDivergenceError(f"CG did not reach tolerance in {maxiter} iterations")


def divergence_residual(system, solution):
    """Scaled residual of the discrete incompressibility constraint.

    Returns ||B u + G p - multiplier * c|| divided by the energy norm of the
    velocity (stiffness normalized to unit viscosity); the multiplier term
    removes the constant-pressure component absorbed by the mean constraint.
    The G term participates only for genuinely stabilized systems, where the
    method itself couples divergence and pressure; a vanishing kernel
    regularization is excluded so the true incompressibility is reported.
    """
    u = solution.u.values
    r = system.B @ u - solution.multiplier * system.c
    if system.G is not None and system.regularization == 0.0:
        r = r + system.G @ solution.p.values
    energy_sq = float(u @ (system.A @ u)) / system.nu
    energy = np.sqrt(max(energy_sq, 0.0))
    if energy == 0.0:
        return float(np.linalg.norm(r))
    return float(np.linalg.norm(r) / energy)
