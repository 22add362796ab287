"""OFDM frame construction and multiuser uplink signal synthesis.

Frequency-domain symbol blocks (one QPSK pilot block followed by 16-QAM data
blocks) are turned into time-domain pilot matrices B = sqrt(N) F^H diag(x) F_L,
rotated by each user's carrier frequency offset, passed through the multi-tap
channel and summed across users with additive white Gaussian noise:

    Y_i = sum_k eta_i(phi_k) E(phi_k) B_i^(k) H_k + N_i

E(phi) is the intra-block phase ramp and eta_i(phi) the phase accumulated over
the i-1 previous blocks including cyclic prefixes. DFTs are explicit matrix
products; the block sizes here never justify more.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

QPSK = "qpsk"
QAM16 = "16qam"

_QPSK_POINTS = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
_QAM16_POINTS = np.array(
    [a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]
) / np.sqrt(10.0)


@dataclass(frozen=True)
class FrameConfig:
    """Frame dimensions: N subcarriers, cyclic prefix, block count, channel taps."""

    n: int = 64
    n_cp: int = 16
    n_blocks: int = 2
    taps: int = 10
    pilot_constellation: str = QPSK
    data_constellation: str = QAM16

    def __post_init__(self) -> None:
        if self.n <= 2 * self.taps:
            raise ValueError(
                f"need N > 2L for identifiability, got N={self.n}, L={self.taps}"
            )
        if self.n_cp < self.taps - 1:
            raise ValueError("cyclic prefix shorter than the channel memory")
        if self.n_blocks < 1:
            raise ValueError("a frame needs at least the pilot block")


def constellation(name: str) -> np.ndarray:
    """Unit-average-power constellation points."""
    try:
        return {QPSK: _QPSK_POINTS, QAM16: _QAM16_POINTS}[name]
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}") from None


def draw_symbols(name: str, count: int, rng: np.random.Generator) -> np.ndarray:
    points = constellation(name)
    return points[rng.integers(0, len(points), size=count)]


def cfo_rotation(n: int, phi: float) -> np.ndarray:
    """Diagonal entries of the CFO rotation: exp(j 2 pi m phi / N), m = 0..N-1."""
    return np.exp(2j * np.pi * np.arange(n) * phi / n)


def accumulative_phase(i: int, n: int, n_cp: int, phi: float) -> complex:
    """Phase carried over from the i-1 blocks (plus prefixes) before block i."""
    if i < 1:
        raise ValueError(f"block index starts at 1, got {i}")
    return complex(np.exp(2j * np.pi * (i - 1) * (n + n_cp) * phi / n))


@lru_cache(maxsize=8)
def _dft(n: int) -> np.ndarray:
    """Unitary DFT matrix, entry (m, l) = exp(-j 2 pi m l / N) / sqrt(N)."""
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def build_pilot_matrix(x: np.ndarray, taps: int) -> np.ndarray:
    """Time-domain pilot matrix B = sqrt(N) F^H diag(x) F_L.

    Column l is the transmitted block circularly delayed by l samples, so B h
    is the received block for a channel with tap vector h (noise and CFO
    aside).
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    if not 1 <= taps <= n:
        raise ValueError(f"tap count must be in 1..{n}, got {taps}")
    f = _dft(n)
    return np.sqrt(n) * (f.conj().T @ (x[:, None] * f[:, :taps]))


def synthesize_received(
    frame: FrameConfig,
    symbols: np.ndarray,
    channels: list[np.ndarray],
    cfos: np.ndarray,
    noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received blocks Y_i, shape (n_blocks, N, M).

    symbols has shape (K, n_blocks, N); channels holds each user's L x M tap
    matrix; per-entry noise variance is noise_var (circular complex).
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    cfos = np.atleast_1d(np.asarray(cfos, dtype=float))
    k_users = len(channels)
    if symbols.shape[:2] != (k_users, frame.n_blocks) or symbols.shape[2] != frame.n:
        raise ValueError(
            f"symbols shape {symbols.shape} does not match "
            f"({k_users}, {frame.n_blocks}, {frame.n})"
        )
    if cfos.shape != (k_users,):
        raise ValueError("one CFO per user required")
    if np.any(np.abs(cfos) >= 0.5):
        raise ValueError("only fractional CFOs |phi| < 0.5 are modeled")
    m_ant = channels[0].shape[1]
    out = np.zeros((frame.n_blocks, frame.n, m_ant), dtype=np.complex128)
    for k, h in enumerate(channels):
        if h.shape != (frame.taps, m_ant):
            raise ValueError(
                f"channel {k} has shape {h.shape}, expected ({frame.taps}, {m_ant})"
            )
        ramp = cfo_rotation(frame.n, cfos[k])
        for i in range(frame.n_blocks):
            b = build_pilot_matrix(symbols[k, i], frame.taps)
            eta = accumulative_phase(i + 1, frame.n, frame.n_cp, cfos[k])
            out[i] += eta * ramp[:, None] * (b @ h)
    if noise_var > 0:
        scale = np.sqrt(noise_var / 2.0)
        out += scale * (
            rng.standard_normal(out.shape) + 1j * rng.standard_normal(out.shape)
        )
    return out


@dataclass(frozen=True)
class UplinkFrame:
    """A synthesized frame: per-user symbols, pilot matrices, CFOs, received blocks."""

    symbols: np.ndarray
    pilot_matrices: np.ndarray
    cfos: np.ndarray
    received: np.ndarray


def build_frame(
    frame: FrameConfig,
    channels: list[np.ndarray],
    cfos: np.ndarray,
    noise_var: float,
    symbol_rng: np.random.Generator,
    noise_rng: np.random.Generator,
) -> UplinkFrame:
    """Draw symbols for every user and block, then synthesize the uplink."""
    k_users = len(channels)
    symbols = np.empty((k_users, frame.n_blocks, frame.n), dtype=np.complex128)
    for k in range(k_users):
        symbols[k, 0] = draw_symbols(frame.pilot_constellation, frame.n, symbol_rng)
        for i in range(1, frame.n_blocks):
            symbols[k, i] = draw_symbols(frame.data_constellation, frame.n, symbol_rng)
    pilots = np.stack(
        [build_pilot_matrix(symbols[k, 0], frame.taps) for k in range(k_users)]
    )
    received = synthesize_received(frame, symbols, channels, cfos, noise_var, noise_rng)
    return UplinkFrame(
        symbols=symbols, pilot_matrices=pilots, cfos=np.asarray(cfos, float),
        received=received,
    )
