"""One-ring multipath channel model for a uniform linear array.

Each user's scatterers are confined to an angular region (theta_k +/- theta_as),
so its AoAs are drawn uniformly from that region. A channel has L taps; tap l is
the superposition of P subpaths with independent complex Gaussian gains whose
total average power follows the tap's PDP entry. Side clusters (a second,
weaker one-ring cluster at a different mean AoA) add tap-wise.

Also provides the angular correlation matrix of a region, the deterministic
quadrature counterpart of E{a*(theta) a(theta)^T} used by the MSE analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: M antennas spaced d_norm wavelengths apart."""

    m: int
    d_norm: float = 0.5

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"antenna count must be >= 1, got {self.m}")
        if not 0.0 < self.d_norm <= 0.5:
            raise ValueError(f"antenna spacing must be in (0, 0.5], got {self.d_norm}")

    @property
    def chi(self) -> float:
        return np.pi * self.d_norm


@dataclass(frozen=True)
class ClusterSpec:
    """A one-ring scatterer cluster: mean AoA, angular spread, subpaths, power."""

    mean_aoa: float
    angular_spread: float
    subpaths: int = 50
    power: float = 1.0

    def __post_init__(self) -> None:
        if self.angular_spread < 0:
            raise ValueError("angular spread must be >= 0")
        if not (0.0 < self.mean_aoa - self.angular_spread
                and self.mean_aoa + self.angular_spread < np.pi):
            raise ValueError(
                "AoA region (%.4f +/- %.4f) rad must lie inside (0, pi)"
                % (self.mean_aoa, self.angular_spread)
            )
        if self.subpaths < 1:
            raise ValueError("subpath count must be >= 1")
        if self.power < 0:
            raise ValueError("cluster power must be >= 0")


@dataclass(frozen=True)
class ChannelRealization:
    """L x M multi-tap channel plus the subpath gains/angles that built it."""

    h: np.ndarray
    gains: np.ndarray
    angles: np.ndarray
    pdp: np.ndarray = field(repr=False, default=None)


def steering_vector(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Array response a(theta), element m = exp(-j 2 chi m cos theta)."""
    if not 0.0 < theta < np.pi:
        raise ValueError(f"incidence angle must be in (0, pi), got {theta}")
    m = np.arange(geom.m)
    return np.exp(-2j * geom.chi * m * np.cos(theta))


def _steering_batch(geom: ArrayGeometry, thetas: np.ndarray) -> np.ndarray:
    """Stack of steering vectors, shape thetas.shape + (M,)."""
    m = np.arange(geom.m)
    return np.exp(-2j * geom.chi * np.multiply.outer(np.cos(thetas), m))


def draw_channel(
    geom: ArrayGeometry,
    cluster: ClusterSpec,
    taps: int,
    pdp: np.ndarray,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Draw one one-ring channel realization.

    Subpath AoAs are i.i.d. uniform on the cluster region and gains are i.i.d.
    circular complex Gaussian with per-subpath variance pdp[l] / P, so tap l has
    average power pdp[l].
    """
    pdp = np.asarray(pdp, dtype=float)
    if pdp.shape != (taps,) or np.any(pdp < 0):
        raise ValueError(f"pdp must be {taps} nonnegative entries")
    if not np.isclose(pdp.sum(), cluster.power, rtol=0, atol=1e-9):
        raise ValueError(
            f"pdp sums to {pdp.sum():g}, cluster power is {cluster.power:g}"
        )
    p = cluster.subpaths
    angles = rng.uniform(
        cluster.mean_aoa - cluster.angular_spread,
        cluster.mean_aoa + cluster.angular_spread,
        size=(taps, p),
    )
    scale = np.sqrt(pdp[:, None] / (2.0 * p))
    gains = scale * (rng.standard_normal((taps, p)) + 1j * rng.standard_normal((taps, p)))
    h = np.einsum("lp,lpm->lm", gains, _steering_batch(geom, angles))
    return ChannelRealization(h=h, gains=gains, angles=angles, pdp=pdp)


def composite_channel(
    main: ChannelRealization, side: ChannelRealization | None = None
) -> ChannelRealization:
    """Tap-wise sum of a main cluster and an optional side cluster."""
    if side is None:
        return main
    if main.h.shape != side.h.shape:
        raise ValueError(
            f"channel shapes differ: {main.h.shape} vs {side.h.shape}"
        )
    return ChannelRealization(
        h=main.h + side.h,
        gains=np.concatenate([main.gains, side.gains], axis=1),
        angles=np.concatenate([main.angles, side.angles], axis=1),
        pdp=main.pdp + side.pdp,
    )


@lru_cache(maxsize=16)
def _gauss_nodes(count: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(count)


def angular_correlation(
    geom: ArrayGeometry, theta_k: float, theta_as: float
) -> np.ndarray:
    """Region-averaged steering correlation (1/2 theta_as) int a*(t) a(t)^T dt.

    Gauss-Legendre quadrature; the integrand's fastest phase rate over the
    region is below 2 chi M theta_as, so that many nodes plus margin gives
    spectral accuracy. Hermitian PSD with trace exactly M up to rounding.
    """
    lo, hi = theta_k - theta_as, theta_k + theta_as
    if not (0.0 < lo and hi < np.pi):
        raise ValueError("AoA region must lie inside (0, pi)")
    nodes = max(64, int(np.ceil(2.0 * geom.chi * geom.m * theta_as)) + 32)
    x, w = _gauss_nodes(nodes)
    thetas = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    # The interval half-width cancels against the 1/(2 theta_as) prefactor.
    weights = 0.5 * w
    a = _steering_batch(geom, thetas)
    r = (a.conj() * weights[:, None]).T @ a
    return 0.5 * (r + r.conj().T)
