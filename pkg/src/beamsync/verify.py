"""Self-contained numerical property suites, runnable from the CLI or tests.

Three independent checks of the identities the analysis rests on:

  * the trace-inverse optimum dominates every unitary competitor
  * the ingredient identity g1/(N - L) - sigma^2 g2 = tr(R RU R RU-weighted
    interference), exact for any PSD interference statistics
  * the second moment of paired noise traces matches its closed form
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg


@dataclass(frozen=True)
class SuiteReport:
    name: str
    passed: bool
    detail: str


def _random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _random_psd(dim: int, rng: np.random.Generator, ridge: float = 0.1) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return g @ g.conj().T + ridge * np.eye(dim)


def check_trace_inverse_optimum(
    matrices: int = 100, unitaries: int = 1000, max_dim: int = 8, seed: int = 1801,
) -> SuiteReport:
    """Eigenbasis objective must dominate random unitary bases and equal tr(A^-1)."""
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    worst_eq = 0.0
    for _ in range(matrices):
        dim = int(rng.integers(2, max_dim + 1))
        a = _random_psd(dim, rng)
        objective, vectors = linalg.max_inverse_quadsum(a)
        direct = float(np.trace(linalg.solve_hermitian(a, np.eye(dim))).real)
        worst_eq = max(worst_eq, abs(objective - direct) / direct)
        at_eig = float(np.sum(1.0 / np.einsum(
            "qi,qp,pi->i", vectors.conj(), a, vectors
        ).real))
        worst_eq = max(worst_eq, abs(at_eig - objective) / objective)
        quads = np.empty(unitaries)
        for t in range(unitaries):
            u = _random_unitary(dim, rng)
            quads[t] = np.sum(1.0 / np.einsum(
                "qi,qp,pi->i", u.conj(), a, u
            ).real)
        worst_gap = max(worst_gap, float(np.max(quads) - objective))
    passed = worst_gap <= 1e-9 and worst_eq <= 1e-9
    return SuiteReport(
        name="trace-inverse optimum",
        passed=passed,
        detail=f"max dominance violation {worst_gap:.3e}, "
               f"max identity error {worst_eq:.3e}",
    )


def check_ingredient_identity(
    scenarios: int = 50, seed: int = 1802, rel_tol: float = 1e-8
) -> SuiteReport:
    """tr(RU R RU Pi2) must equal g1/(N - L) - sigma^2 g2 exactly."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(scenarios):
        m = int(rng.integers(6, 24))
        q = int(rng.integers(1, min(m, 8) + 1))
        n = int(rng.integers(32, 128))
        taps = int(rng.integers(2, 12))
        sigma2 = float(rng.uniform(0.01, 1.0))
        u = _random_unitary(m, rng)[:, :q].conj()
        pi2 = _random_psd(m, rng, ridge=0.0)
        r_own = _random_psd(m, rng, ridge=0.0)
        omega1 = (n - taps) * (sigma2 * np.eye(m) + pi2)
        inner = u.T @ omega1 @ u.conj()
        r_script = u.conj() @ linalg.solve_hermitian(
            0.5 * (inner + inner.conj().T), u.T
        )
        g1 = float(np.trace(r_script @ r_own).real)
        g2 = float(np.trace(r_script @ r_script @ r_own).real)
        direct = float(np.trace(r_script @ r_own @ r_script @ pi2).real)
        stated = g1 / (n - taps) - sigma2 * g2
        scale = max(abs(direct), abs(stated), 1e-300)
        worst = max(worst, abs(direct - stated) / scale)
    return SuiteReport(
        name="ingredient identity",
        passed=worst <= rel_tol,
        detail=f"max relative error {worst:.3e}",
    )


def check_noise_trace_moment(
    pairs: int = 10, draws: int = 10_000, seed: int = 1803, rel_tol: float = 0.05
) -> SuiteReport:
    """E{tr(A N C) tr(C^H N^H A^H)} must match sigma^2 tr(A A^H C^H C) within 5%."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        r = int(rng.integers(2, 8))
        n_rows = int(rng.integers(8, 32))
        m_cols = int(rng.integers(8, 32))
        sigma2 = float(rng.uniform(0.1, 2.0))
        a = rng.standard_normal((r, n_rows)) + 1j * rng.standard_normal((r, n_rows))
        c = rng.standard_normal((m_cols, r)) + 1j * rng.standard_normal((m_cols, r))
        g = c @ a
        noise = np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal((draws, n_rows, m_cols))
            + 1j * rng.standard_normal((draws, n_rows, m_cols))
        )
        s = np.einsum("tnm,mn->t", noise, g)
        empirical = float(np.mean(np.abs(s) ** 2))
        target = sigma2 * float(np.trace(a @ a.conj().T @ c.conj().T @ c).real)
        worst = max(worst, abs(empirical - target) / target)
    return SuiteReport(
        name="noise trace moment",
        passed=worst <= rel_tol,
        detail=f"max relative deviation {worst:.3%}",
    )


def run_all() -> list[SuiteReport]:
    return [
        check_trace_inverse_optimum(),
        check_ingredient_identity(),
        check_noise_trace_moment(),
    ]
