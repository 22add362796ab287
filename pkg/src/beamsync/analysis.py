"""Closed-form CFO-estimation MSE and operation-count formulas.

The general high-SNR MSE evaluates four scalar traces of the interference-plus-
noise statistics folded into the user's beam bank, plus the pilot curvature
d_k = ||P_perp D^H B||^2 that measures how much CFO information the pilot
carries. Simplified forms cover non-overlapping users, the overlapping
asymptote and the joint large-array/large-block limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .beamspace import BeamBank


@dataclass(frozen=True)
class MseIngredients:
    """Scalar traces and curvature feeding the analytical MSE."""

    r_script: np.ndarray
    g0: float
    g1: float
    g2: float
    g3: float
    d_k: float
    r_k: float
    sigma_n2: float
    taps: int
    n: int
    m: int
    q: int


def pilot_curvature(b: np.ndarray) -> float:
    """d_k = tr(B^H D P_perp D^H B) = ||P_perp D^H B||^2 for the pilot matrix B."""
    b = np.asarray(b, dtype=np.complex128)
    n = b.shape[0]
    _, p_perp = linalg.projectors(b)
    d = 2j * np.pi * np.arange(n) / n
    pdb = p_perp @ (d.conj()[:, None] * b)
    return float(np.linalg.norm(pdb) ** 2)


def mse_ingredients(
    bank: BeamBank | np.ndarray,
    interferer_stats: np.ndarray,
    own_correlation: np.ndarray,
    b: np.ndarray,
    sigma_n2: float,
    n: int,
    taps: int,
) -> MseIngredients:
    """Assemble the trace ingredients.

    interferer_stats is the summed spatial statistics of all other users,
    either statistical (sum of their angular correlation matrices) or realized
    (sum of H^H H over drawn channels, averaged outside if desired).
    """
    u = bank.u if isinstance(bank, BeamBank) else np.asarray(bank)
    m = u.shape[0]
    if n <= taps:
        raise ValueError("need more subcarriers than channel taps")
    omega1 = (n - taps) * (
        sigma_n2 * np.eye(m, dtype=np.complex128) + interferer_stats
    )
    inner = u.T @ omega1 @ u.conj()
    inner = 0.5 * (inner + inner.conj().T)
    r_script = u.conj() @ linalg.solve_hermitian(inner, u.T)
    rr = r_script @ own_correlation
    g0 = float(np.trace(r_script).real)
    g1 = float(np.trace(rr).real)
    g2 = float(np.trace(r_script @ rr).real)
    g3 = g1 / (n - taps) - sigma_n2 * g2
    r_k = float(np.trace(u.T @ own_correlation @ u.conj()).real)
    return MseIngredients(
        r_script=r_script,
        g0=g0,
        g1=g1,
        g2=g2,
        g3=g3,
        d_k=pilot_curvature(b),
        r_k=r_k,
        sigma_n2=sigma_n2,
        taps=taps,
        n=n,
        m=m,
        q=u.shape[1],
    )


def analytical_mse(ing: MseIngredients) -> float:
    """General high-SNR MSE from the assembled ingredients."""
    lt, s2 = ing.taps, ing.sigma_n2
    g0, g1, g2, g3, dk = ing.g0, ing.g1, ing.g2, ing.g3, ing.d_k
    numerator = (g1**2 * g3 * dk) / lt**3 + (s2 * g1**2 * g2 * dk) / lt**3
    inner = (s2 / lt) * g1 * g2 * dk + (s2 / lt**2) * g0 * g1**2 * dk \
        - (g1**2 * dk) / lt**2
    denominator = 2.0 * inner**2
    if denominator <= 0 or not np.isfinite(denominator):
        raise ValueError("degenerate regime: the MSE denominator vanishes")
    return numerator / denominator


def alpha_no_overlap(n: int, taps: int, q: int) -> float:
    """Coefficient ((N - L) / (N - 2L - Q))^2 of the non-overlapping MSE."""
    if n <= 2 * taps + q:
        raise ValueError("requires N > 2L + Q")
    return ((n - taps) / (n - 2 * taps - q)) ** 2


def alpha_overlap(n: int, taps: int, q: int) -> float:
    """Coefficient ((N - L) / (N - L - Q))^2 Q / (Q - L) of the overlap asymptote."""
    if q <= taps:
        raise ValueError(
            "requires Q > L; fewer beams than taps leaves the branch estimates"
            " underdetermined"
        )
    if n <= taps + q:
        raise ValueError("requires N > L + Q")
    return ((n - taps) / (n - taps - q)) ** 2 * q / (q - taps)


def mse_no_overlap(
    n: int, taps: int, q: int, sigma_n2: float, theta_k: float, theta_as: float,
    d_k: float,
) -> float:
    """Non-overlapping users: alpha1 sigma_n^2 L theta_as sin(theta_k) / (2 Q d_k)."""
    a1 = alpha_no_overlap(n, taps, q)
    return a1 * sigma_n2 * taps * theta_as * np.sin(theta_k) / (2.0 * q * d_k)


def mse_overlap_asymptotic(
    n: int, taps: int, q: int, sigma_n2: float, theta_k: float, theta_as: float,
    d_k: float,
) -> float:
    """Fully overlapping users, high SNR: alpha2 replaces alpha1."""
    a2 = alpha_overlap(n, taps, q)
    return a2 * sigma_n2 * taps * theta_as * np.sin(theta_k) / (2.0 * q * d_k)


def mse_large_limit(
    m: int, n: int, sigma_n2: float, theta_as: float, alpha1: float,
    small_spread: bool = False,
) -> float:
    """Joint large-array/large-block limit of the non-overlapping MSE."""
    base = alpha1 * 3.0 * sigma_n2 / (2.0 * np.pi**2 * m * n)
    if small_spread:
        return base
    return base * theta_as / np.sin(theta_as)


def operation_counts(
    k: int, n: int, m: int, taps: int, q: int, newton_iters: int, n_blocks: int
) -> tuple[float, float]:
    """Complex-multiplication counts for estimation and detection.

    Estimation covers the pilot projector, the per-iteration Gram updates and
    the branch eigenproblem; detection covers the per-block transforms and the
    MRC combining.
    """
    eta = newton_iters
    cfo = k * (
        taps * (n + taps) ** 2
        + eta * n * (m + 3 * n + 3 * q**2)
        + eta * q * (n * m + 3 * n**2)
        + q**2 * (n + 4 * eta * q)
    )
    detect = k * n * q * n_blocks * (np.log2(n) + 1) + k * q * (
        n * taps + n + 2 * q**2
    )
    return float(cfo), float(detect)
