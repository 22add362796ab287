"""Beamspace reduction: DFT angle grid and per-user matched-filter banks.

The array's DFT beams point at angles arccos(pi (i - M/2) / (chi M)). Steering
vectors on this grid are exactly orthogonal, so the bank of grid beams falling
inside a user's AoA region forms an orthonormal basis for its signal subspace.
Projecting onto that bank is the first interference-suppression stage; the
selected column count Q_k is the number of adaptive branches downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, steering_vector


@dataclass(frozen=True)
class BeamBank:
    """Orthonormal matched-filter bank: columns a(angle)/sqrt(M)."""

    u: np.ndarray
    angles: np.ndarray

    @property
    def q(self) -> int:
        return self.u.shape[1]


def dft_angle_grid(geom: ArrayGeometry) -> np.ndarray:
    """Grid angles ascending. M even; spacing <= half wavelength.

    Valid indices are those with |pi (i - M/2) / (chi M)| <= 1. At half-wavelength
    spacing both endfire indices appear and map to the same steering vector, so
    the one at cos = -1 is dropped, leaving exactly M beams.
    """
    if geom.m % 2 != 0:
        raise ValueError("the beam grid is defined for even antenna counts")
    half_width = geom.d_norm * geom.m
    i_lo = int(np.ceil(geom.m / 2 - half_width))
    i_hi = int(np.floor(geom.m / 2 + half_width))
    idx = np.arange(i_lo, i_hi + 1)
    args = np.pi * (idx - geom.m / 2) / (geom.chi * geom.m)
    keep = args > -1.0 + 1e-12 if args[0] <= -1.0 + 1e-12 else np.ones_like(args, bool)
    angles = np.arccos(args[keep])
    if angles.size == 0:
        raise ValueError("array geometry leaves no valid beam directions")
    return np.sort(angles)


def select_angles(
    grid: np.ndarray, theta_k: float, theta_as: float
) -> tuple[np.ndarray, int]:
    """Grid angles strictly inside (theta_k - theta_as, theta_k + theta_as)."""
    grid = np.asarray(grid, dtype=float)
    chosen = grid[np.abs(grid - theta_k) < theta_as]
    if chosen.size == 0:
        raise ValueError(
            "no beam direction falls inside the AoA region "
            f"({np.degrees(theta_k):.2f} +/- {np.degrees(theta_as):.2f} deg); "
            "widen the angular spread or increase the antenna count"
        )
    return chosen, int(chosen.size)


def build_beam_bank(geom: ArrayGeometry, angles: np.ndarray) -> BeamBank:
    """Assemble the orthonormal bank for the selected grid angles."""
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ValueError("cannot build a bank from an empty angle list")
    if np.unique(angles).size != angles.size:
        raise ValueError("duplicate beam angles")
    cols = [steering_vector(geom, t) / np.sqrt(geom.m) for t in angles]
    return BeamBank(u=np.stack(cols, axis=1), angles=angles)


def user_beam_bank(geom: ArrayGeometry, theta_k: float, theta_as: float) -> BeamBank:
    """Grid construction, selection and assembly in one step."""
    angles, _ = select_angles(dft_angle_grid(geom), theta_k, theta_as)
    return build_beam_bank(geom, angles)


def continuous_qk(m: int, theta_k: float, theta_as: float) -> float:
    """Continuous approximation of the selected-beam count: M sin(theta_k) sin(theta_as)."""
    return m * np.sin(theta_k) * np.sin(theta_as)
