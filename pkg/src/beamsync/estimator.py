"""Per-user carrier frequency offset estimation with adaptive beamspace filtering.

For one user, the pilot-block receive matrix Y is projected onto the user's
orthonormal beam bank U. Two Gram matrices drive everything:

    Psi      = U^T Y^H Y U*                 total received energy in beamspace
    Xi(phi~) = U^T Y^H E(phi~) P_perp E^H(phi~) Y U*
                                            energy left after derotating by a
                                            trial CFO and projecting out the
                                            pilot subspace

The cost G(phi~) = tr(Xi^-1(phi~) Psi) peaks at the true CFO: a correct
derotation lets the pilot projector annihilate the user's own signal, leaving
only noise and residual interference in Xi. A coarse grid search is refined by
a Newton step built from a second-order expansion of Xi, and the branch
filters come from the eigenvectors of C^-1 Xi C^-H where Psi = C C^H. Branch
weights are scaled by 1/sqrt(eigenvalue) so every branch carries the same
residual noise power into the combiner.

The matched-filter baseline runs the same search on the diagonal surrogate
sum_q Psi_qq / Xi_qq and keeps the raw beams without adaptation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from . import linalg
from .beamspace import BeamBank
from .ofdm import cfo_rotation


class EstimationError(RuntimeError):
    """Estimator failure, tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class EstimatorOptions:
    grid_step: float = 0.01
    newton_iters: int = 5
    newton_tol: float = 1e-7
    # "golden": bounded golden-section search on the cost when the local
    # parabola is not concave; "keep": accept the current point unrefined.
    fallback: str = "golden"


@dataclass(frozen=True)
class CfoProblem:
    """One user's estimation inputs: receive block, pilot matrix, beam bank."""

    y: np.ndarray
    b: np.ndarray
    u: np.ndarray
    p_perp: np.ndarray

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def q(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class CfoSolution:
    """Estimate record: CFO, branch basis, adaptive filters, final beamformers."""

    phi_hat: float
    beta: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    cost_trace: float
    iterations: int = 0
    converged: bool = True
    used_fallback: bool = False


def make_problem(y: np.ndarray, b: np.ndarray, u: np.ndarray | BeamBank) -> CfoProblem:
    u_mat = u.u if isinstance(u, BeamBank) else np.asarray(u, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if y.ndim != 2 or b.ndim != 2 or y.shape[0] != b.shape[0]:
        raise ValueError(
            f"receive block {y.shape} and pilot matrix {b.shape} disagree on N"
        )
    if u_mat.shape[0] != y.shape[1]:
        raise ValueError(
            f"beam bank rows {u_mat.shape[0]} do not match antenna count {y.shape[1]}"
        )
    _, p_perp = linalg.projectors(b)
    return CfoProblem(y=y, b=b, u=u_mat, p_perp=p_perp)


def _beam_projected(problem: CfoProblem) -> np.ndarray:
    """V = Y U*, the receive block folded into the user's beamspace (N x Q)."""
    return problem.y @ problem.u.conj()


def signal_gram(problem: CfoProblem) -> np.ndarray:
    """Psi = U^T Y^H Y U*, Hermitian PSD."""
    v = _beam_projected(problem)
    psi = v.conj().T @ v
    return 0.5 * (psi + psi.conj().T)


def residual_gram(problem: CfoProblem, phi_trial: float) -> np.ndarray:
    """Xi(phi~) = U^T Y^H E(phi~) P_perp E^H(phi~) Y U*, Hermitian PSD."""
    v = _beam_projected(problem)
    w = cfo_rotation(problem.n, phi_trial).conj()[:, None] * v
    xi = w.conj().T @ (problem.p_perp @ w)
    return 0.5 * (xi + xi.conj().T)


def sinr_cost(problem: CfoProblem, phi_trial: float) -> float:
    """G(phi~) = tr(Xi^-1(phi~) Psi)."""
    psi = signal_gram(problem)
    xi = residual_gram(problem, phi_trial)
    try:
        return float(np.trace(linalg.solve_hermitian(xi, psi)).real)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("cost", f"residual matrix is singular ({exc})") from exc


def _cost_on_grid(problem: CfoProblem, grid: np.ndarray) -> np.ndarray:
    """Vectorized G over many trial CFOs at once."""
    v = _beam_projected(problem)
    psi = signal_gram(problem)
    n = problem.n
    phases = np.exp(-2j * np.pi * np.outer(grid, np.arange(n)) / n)
    w = phases[:, :, None] * v[None, :, :]
    pw = np.einsum("nm,gmq->gnq", problem.p_perp, w, optimize=True)
    xi = np.einsum("gnq,gnr->gqr", w.conj(), pw, optimize=True)
    xi = 0.5 * (xi + np.conj(np.swapaxes(xi, 1, 2)))
    try:
        solved = np.linalg.solve(xi, np.broadcast_to(psi, xi.shape))
    except np.linalg.LinAlgError as exc:
        raise EstimationError("coarse", f"singular residual on grid ({exc})") from exc
    return np.trace(solved, axis1=1, axis2=2).real


def coarse_cfo_search(problem: CfoProblem, grid_step: float = 0.01) -> float:
    """Argmax of G over the fractional-CFO grid, ties broken toward smaller phi."""
    if grid_step <= 0:
        raise ValueError("grid step must be positive")
    grid = np.arange(-0.5 + grid_step, 0.5 - grid_step / 2, grid_step)
    costs = _cost_on_grid(problem, grid)
    if not np.all(np.isfinite(costs)):
        raise EstimationError("coarse", "cost evaluation produced non-finite values")
    # argmax returns the first maximum; the grid is ascending.
    return float(grid[int(np.argmax(costs))])


def _taylor_scalars(
    problem: CfoProblem, chol_psi: np.ndarray, phi0: float
) -> tuple[float, float, np.ndarray, np.ndarray, np.ndarray]:
    """Newton ingredients t1, t2 plus the T matrices at phi0.

    T0 is Xi(phi0); T1 and T2 collect the first and second derivatives of the
    derotation ramp against the pilot projector. t_i traces C^H T0^-1 T_i
    T0^-1 C with Psi = C C^H.
    """
    n = problem.n
    v = _beam_projected(problem)
    w = cfo_rotation(n, phi0).conj()[:, None] * v
    d = 2j * np.pi * np.arange(n) / n
    p = problem.p_perp
    dp = d[:, None] * p
    t0 = w.conj().T @ (p @ w)
    t1 = w.conj().T @ ((dp + dp.conj().T) @ w)
    d2p = (d**2)[:, None] * p
    mid = d2p + d2p.conj().T + 2.0 * (d[:, None] * p * d.conj()[None, :])
    t2 = w.conj().T @ (mid @ w)
    t0 = 0.5 * (t0 + t0.conj().T)
    try:
        x = linalg.solve_hermitian(t0, chol_psi)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("newton", f"residual matrix is singular ({exc})") from exc
    s1 = float(np.trace(x.conj().T @ (t1 @ x)).real)
    s2 = float(np.trace(x.conj().T @ (t2 @ x)).real)
    return s1, s2, t0, t1, t2


def _golden_section(cost, lo: float, hi: float) -> float:
    """Deterministic golden-section maximization of a scalar cost on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = cost(c)
    fd = cost(d)
    while b - a > 1e-9:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = cost(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = cost(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class NewtonResult:
    phi_hat: float
    iterations: int
    converged: bool
    used_fallback: bool = False


def newton_refine(
    problem: CfoProblem,
    phi0: float,
    max_iters: int = 5,
    tol: float = 1e-7,
    fallback_window: float = 0.01,
    fallback: str = "golden",
) -> NewtonResult:
    """Refine a coarse CFO by iterated parabolic updates phi <- phi - t1/t2.

    A maximum requires t2 > 0. When the local model is not concave the search
    falls back to a golden-section pass around phi0 (or keeps the point,
    depending on the policy) and flags it.
    """
    if abs(phi0) >= 0.5:
        raise ValueError("refinement start must be a fractional CFO")
    psi = signal_gram(problem)
    try:
        chol = linalg.cholesky_factor(psi)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("newton", f"beamspace energy is degenerate ({exc})") from exc
    phi = phi0
    for it in range(1, max_iters + 1):
        t1, t2, *_ = _taylor_scalars(problem, chol, phi)
        if t2 <= 0:
            if fallback == "golden":
                refined = _golden_section(
                    lambda p: sinr_cost(problem, p),
                    phi0 - fallback_window,
                    phi0 + fallback_window,
                )
                return NewtonResult(refined, it, True, used_fallback=True)
            return NewtonResult(phi, it, False, used_fallback=True)
        delta = -t1 / t2
        phi = phi + delta
        if abs(delta) < tol:
            return NewtonResult(phi, it, True)
    return NewtonResult(phi, max_iters, False)


def branch_solution(problem: CfoProblem, phi_hat: float) -> CfoSolution:
    """Extract the branch basis, adaptive filters and beamformers at phi_hat."""
    psi = signal_gram(problem)
    try:
        chol = linalg.cholesky_factor(psi)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("branch", f"beamspace energy is degenerate ({exc})") from exc
    xi = residual_gram(problem, phi_hat)
    # A = C^-1 Xi C^-H, the whitened residual.
    z = scipy.linalg.solve_triangular(chol, xi, lower=True)
    a = scipy.linalg.solve_triangular(chol, z.conj().T, lower=True).conj().T
    eig = linalg.hermitian_eig(a)
    lam, beta = eig.eigenvalues, eig.eigenvectors
    if lam[0] <= 0:
        raise EstimationError(
            "branch", f"whitened residual is not positive definite (min {lam[0]:g})"
        )
    gamma = scipy.linalg.solve_triangular(chol.conj().T, beta, lower=False)
    alpha = 1.0 / np.sqrt(lam)
    omega = (problem.u.conj() @ gamma) * alpha[None, :]
    return CfoSolution(
        phi_hat=float(phi_hat),
        beta=beta,
        gamma=gamma,
        lam=lam,
        alpha=alpha,
        omega=omega,
        cost_trace=float(np.sum(1.0 / lam)),
    )


def estimate(
    y: np.ndarray,
    b: np.ndarray,
    u: np.ndarray | BeamBank,
    options: EstimatorOptions = EstimatorOptions(),
) -> CfoSolution:
    """Full pipeline for one user: coarse search, Newton refinement, branches."""
    problem = make_problem(y, b, u)
    phi0 = coarse_cfo_search(problem, options.grid_step)
    refined = newton_refine(
        problem,
        phi0,
        max_iters=options.newton_iters,
        tol=options.newton_tol,
        fallback_window=options.grid_step,
        fallback=options.fallback,
    )
    solution = branch_solution(problem, refined.phi_hat)
    return replace(
        solution,
        iterations=refined.iterations,
        converged=refined.converged,
        used_fallback=refined.used_fallback,
    )


# === Matched-filter baseline ===

def _mf_cost_on_grid(problem: CfoProblem, grid: np.ndarray) -> np.ndarray:
    """Diagonal-surrogate cost sum_q Psi_qq / Xi_qq over many trial CFOs."""
    v = _beam_projected(problem)
    psi_diag = np.einsum("nq,nq->q", v.conj(), v).real
    n = problem.n
    phases = np.exp(-2j * np.pi * np.outer(grid, np.arange(n)) / n)
    w = phases[:, :, None] * v[None, :, :]
    pw = np.einsum("nm,gmq->gnq", problem.p_perp, w, optimize=True)
    xi_diag = np.einsum("gnq,gnq->gq", w.conj(), pw).real
    if np.any(xi_diag <= 0):
        raise EstimationError("coarse", "baseline residual power vanished on grid")
    return np.sum(psi_diag[None, :] / xi_diag, axis=1)


def mf_baseline_estimate(
    y: np.ndarray,
    b: np.ndarray,
    u: np.ndarray | BeamBank,
    options: EstimatorOptions = EstimatorOptions(),
) -> CfoSolution:
    """Non-adaptive baseline: fixed matched-filter beams, diagonal cost.

    Searches the same grid and applies the same parabolic refinement, but on
    sum_q Psi_qq / Xi_qq(phi~), and keeps the raw bank columns as beamformers
    with unit weights. Result shape matches the adaptive estimator so sweeps
    and CSV emission treat both identically.
    """
    problem = make_problem(y, b, u)
    if options.grid_step <= 0:
        raise ValueError("grid step must be positive")
    grid = np.arange(-0.5 + options.grid_step, 0.5 - options.grid_step / 2,
                     options.grid_step)
    costs = _mf_cost_on_grid(problem, grid)
    phi = float(grid[int(np.argmax(costs))])
    v = _beam_projected(problem)
    psi_diag = np.einsum("nq,nq->q", v.conj(), v).real
    n = problem.n
    d = 2j * np.pi * np.arange(n) / n
    p = problem.p_perp
    dp = d[:, None] * p
    mid1 = dp + dp.conj().T
    d2p = (d**2)[:, None] * p
    mid2 = d2p + d2p.conj().T + 2.0 * (d[:, None] * p * d.conj()[None, :])
    converged = False
    used_fallback = False
    iterations = 0
    for it in range(1, options.newton_iters + 1):
        iterations = it
        w = cfo_rotation(n, phi).conj()[:, None] * v
        xi0 = np.einsum("nq,nm,mq->q", w.conj(), p, w, optimize=True).real
        xi1 = np.einsum("nq,nm,mq->q", w.conj(), mid1, w, optimize=True).real
        xi2 = np.einsum("nq,nm,mq->q", w.conj(), mid2, w, optimize=True).real
        t1 = float(np.sum(psi_diag * xi1 / xi0**2))
        t2 = float(np.sum(psi_diag * xi2 / xi0**2))
        if t2 <= 0:
            used_fallback = True
            if options.fallback == "golden":
                phi = _golden_section(
                    lambda t: float(_mf_cost_on_grid(problem, np.array([t]))[0]),
                    phi - options.grid_step,
                    phi + options.grid_step,
                )
                converged = True
            break
        delta = -t1 / t2
        phi = phi + delta
        if abs(delta) < options.newton_tol:
            converged = True
            break
    q = problem.q
    w = cfo_rotation(n, phi).conj()[:, None] * v
    lam = np.einsum("nq,nm,mq->q", w.conj(), p, w, optimize=True).real
    return CfoSolution(
        phi_hat=phi,
        beta=np.eye(q, dtype=np.complex128),
        gamma=np.eye(q, dtype=np.complex128),
        lam=lam,
        alpha=np.ones(q),
        omega=problem.u.conj().copy(),
        cost_trace=float(np.sum(psi_diag / lam)),
        iterations=iterations,
        converged=converged,
        used_fallback=used_fallback,
    )
