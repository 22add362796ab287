"""Dense complex Hermitian linear algebra used by the estimator and analysis code.

Thin, contract-enforcing wrappers around LAPACK (via numpy/scipy):

  * hermitian_eig      eigendecomposition with ascending eigenvalues and a
                       deterministic eigenvector phase convention
  * cholesky_factor    lower-triangular factor with a single jitter retry
  * solve_hermitian    positive definite solve with a condition-number cap
  * projectors         orthogonal projector pair onto range(B) and its complement
  * max_inverse_quadsum
                       the unitary basis maximizing the sum of inverse quadratic
                       forms sum_q 1/(v_q^H A v_q); the optimum is the eigenbasis
                       and the optimal value is trace(A^-1)

All functions are pure and safe to call from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Condition-number cap for solves and projector Grams; beyond this the result
# would be numerically meaningless, so error out instead.
COND_CAP = 1e12

_JITTER_EPS = 1e-12


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition with eigenvalues ascending and matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square_matrix(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a.astype(np.complex128, copy=False)


def _hermitize(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    # Inputs are Hermitian up to rounding; symmetrize so LAPACK sees an exact one.
    norm = np.linalg.norm(a)
    if norm > 0 and np.linalg.norm(a - a.conj().T) > 1e-8 * norm:
        raise ValueError(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    phase = np.where(np.abs(lead) > 0, lead / np.maximum(np.abs(lead), 1e-300), 1.0)
    return vectors * phase.conj()


def hermitian_eig(a: np.ndarray) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = _hermitize(_as_square_matrix(a, "input"), "input")
    w, v = np.linalg.eigh(a)
    return HermitianEig(eigenvalues=w, eigenvectors=_fix_phases(v))


def cholesky_factor(a: np.ndarray) -> np.ndarray:
    """Lower-triangular C with C C^H = A, retrying once with a trace-scaled jitter."""
    a = _hermitize(_as_square_matrix(a, "input"), "input")
    try:
        return scipy.linalg.cholesky(a, lower=True)
    except scipy.linalg.LinAlgError:
        pass
    jitter = _JITTER_EPS * max(np.trace(a).real, 0.0) / a.shape[0]
    try:
        return scipy.linalg.cholesky(a + jitter * np.eye(a.shape[0]), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"matrix is not positive definite even after jitter: {exc}"
        ) from exc


def solve_hermitian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for Hermitian positive definite A."""
    a = _hermitize(_as_square_matrix(a, "lhs"), "lhs")
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs rows {b.shape[0]} do not match lhs dim {a.shape[0]}")
    if np.linalg.cond(a) > COND_CAP:
        raise np.linalg.LinAlgError("matrix condition number exceeds cap")
    c = cholesky_factor(a)
    return scipy.linalg.cho_solve((c, True), b)


def projectors(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projectors (P, P_perp) onto range(B) and its complement.

    P = B (B^H B)^-1 B^H and P_perp = I - P, both Hermitian idempotent. B must
    be a tall full-column-rank matrix.
    """
    b = np.asarray(b, dtype=np.complex128)
    if b.ndim != 2 or b.shape[0] < b.shape[1]:
        raise ValueError(f"expected a tall matrix, got shape {b.shape}")
    gram = b.conj().T @ b
    if np.linalg.cond(gram) > COND_CAP:
        raise np.linalg.LinAlgError("rank-deficient basis: Gram condition exceeds cap")
    p = b @ solve_hermitian(gram, b.conj().T)
    p = 0.5 * (p + p.conj().T)
    return p, np.eye(b.shape[0]) - p


def max_inverse_quadsum(a: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize sum_q 1/(v_q^H A v_q) over unitary bases {v_q} for Hermitian PD A.

    The maximum is attained at the eigenbasis of A and equals trace(A^-1).
    Returns (objective, eigenvector matrix with columns in ascending eigenvalue
    order).
    """
    eig = hermitian_eig(a)
    if eig.eigenvalues[0] <= 0:
        raise np.linalg.LinAlgError(
            f"matrix is not positive definite (min eigenvalue {eig.eigenvalues[0]:g})"
        )
    objective = float(np.sum(1.0 / eig.eigenvalues))
    return objective, eig.eigenvectors
