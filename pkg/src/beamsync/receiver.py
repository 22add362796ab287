"""Post-estimation receiver: branch beamforming, channel estimation, MRC, SER.

Each branch beamformer collapses the receive blocks to single streams, the
estimated CFO (both the intra-block ramp and the block-to-block accumulated
phase) is compensated, pilot-aided least squares recovers each branch's
effective channel, and the data blocks are detected per subcarrier by
maximum-ratio combining across branches.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .ofdm import accumulative_phase, cfo_rotation, constellation


@dataclass(frozen=True)
class BranchObservations:
    """Per-branch compensated blocks (n_blocks, N, Q) and channel estimates (L, Q)."""

    blocks: np.ndarray
    channels: np.ndarray | None = None

    @property
    def q(self) -> int:
        return self.blocks.shape[2]


@dataclass(frozen=True)
class DetectionReport:
    """Decided data symbols plus exact error accounting."""

    decisions: np.ndarray
    errors: int
    total: int
    ser: float
    erasures: int = 0


def beamform_compensate(
    received: np.ndarray,
    omega: np.ndarray,
    phi_hat: float,
    n: int,
    n_cp: int,
) -> BranchObservations:
    """z_i^(q) = conj(eta_i(phi^)) E^H(phi^) Y_i w_q for every block and branch."""
    received = np.asarray(received, dtype=np.complex128)
    omega = np.asarray(omega, dtype=np.complex128)
    if received.ndim != 2 and received.ndim != 3:
        raise ValueError("received must be (N, M) or (n_blocks, N, M)")
    blocks = received[None] if received.ndim == 2 else received
    if omega.shape[0] != blocks.shape[2]:
        raise ValueError(
            f"beamformer rows {omega.shape[0]} do not match antennas {blocks.shape[2]}"
        )
    derotate = cfo_rotation(n, phi_hat).conj()
    out = np.empty(blocks.shape[:2] + (omega.shape[1],), dtype=np.complex128)
    for i in range(blocks.shape[0]):
        eta = accumulative_phase(i + 1, n, n_cp, phi_hat)
        out[i] = np.conj(eta) * derotate[:, None] * (blocks[i] @ omega)
    return BranchObservations(blocks=out)


def ls_channel_estimate(z_pilot: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Least squares tap estimate h^ = (B^H B)^-1 B^H z per branch."""
    z = np.asarray(z_pilot, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    gram = b.conj().T @ b
    if np.linalg.cond(gram) > linalg.COND_CAP:
        raise np.linalg.LinAlgError("pilot matrix is rank deficient")
    return linalg.solve_hermitian(gram, b.conj().T @ z)


def estimate_branch_channels(
    branches: BranchObservations, b: np.ndarray
) -> BranchObservations:
    """Fill the per-branch channel estimates from the pilot block (block 1)."""
    return replace(branches, channels=ls_channel_estimate(branches.blocks[0], b))


def _freq_response(channels: np.ndarray, n: int) -> np.ndarray:
    """Per-branch frequency response H(n) = sum_l h_l exp(-j 2 pi n l / N), (N, Q)."""
    taps = channels.shape[0]
    grid = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(taps)) / n)
    return grid @ channels


def mrc_detect(
    branches: BranchObservations,
    constellation_name: str,
    truth: np.ndarray | None = None,
) -> DetectionReport:
    """Maximum-ratio combining over branches, nearest-point decisions per subcarrier.

    Blocks after the first are treated as data. Subcarriers where the combined
    channel gain vanishes are erasures and always count as errors.
    """
    if branches.channels is None:
        raise ValueError("branch channels must be estimated before detection")
    blocks = branches.blocks
    if blocks.shape[0] < 2:
        raise ValueError("no data blocks to detect")
    n = blocks.shape[1]
    points = constellation(constellation_name)
    h_freq = _freq_response(branches.channels, n)
    gain = np.sum(np.abs(h_freq) ** 2, axis=1)
    erasure_mask = gain <= 0
    dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
    data = blocks[1:]
    decisions = np.empty((data.shape[0], n), dtype=np.complex128)
    erasures = 0
    for i in range(data.shape[0]):
        z_freq = dft @ data[i]
        combined = np.sum(h_freq.conj() * z_freq, axis=1)
        safe_gain = np.where(erasure_mask, 1.0, gain)
        x_hat = combined / safe_gain
        idx = np.argmin(np.abs(x_hat[:, None] - points[None, :]), axis=1)
        decided = points[idx]
        # An erased subcarrier has no usable decision; poison it so any truth
        # comparison counts it as wrong.
        decided = np.where(erasure_mask, np.inf + 0j, decided)
        erasures += int(np.sum(erasure_mask))
        decisions[i] = decided
    report = DetectionReport(
        decisions=decisions, errors=0, total=decisions.size, ser=0.0,
        erasures=erasures,
    )
    if truth is not None:
        return score(report, truth)
    return report


def score(report: DetectionReport, truth: np.ndarray) -> DetectionReport:
    """Fill error count and SER by comparing decisions against the truth."""
    truth = np.asarray(truth, dtype=np.complex128)
    if truth.shape != report.decisions.shape:
        raise ValueError(
            f"truth shape {truth.shape} does not match decisions "
            f"{report.decisions.shape}"
        )
    errors = int(np.sum(report.decisions != truth))
    return replace(
        report, errors=errors, total=truth.size, ser=errors / truth.size
    )


def ser(detected: np.ndarray | DetectionReport, truth: np.ndarray) -> float:
    """Fraction of mismatched symbols."""
    if isinstance(detected, DetectionReport):
        return score(detected, truth).ser
    detected = np.asarray(detected)
    truth = np.asarray(truth)
    if detected.shape != truth.shape:
        raise ValueError("sequence lengths differ")
    if detected.size == 0:
        raise ValueError("empty sequences have no error rate")
    return float(np.sum(detected != truth) / truth.size)
