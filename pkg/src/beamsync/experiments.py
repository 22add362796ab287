"""Monte Carlo sweep driver: scenario configs, trial execution, CSV emission.

A sweep walks an SNR grid. Every (snr, trial) pair owns an independent RNG
tree derived from (seed, snr index, trial index), split into named streams
(cfo, channel, noise, symbols, aoa bias), so results do not depend on
execution order and a fixed seed reproduces the output byte for byte. Trials
may run in a process pool; aggregation always happens in trial order.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis
from .beamspace import user_beam_bank
from .channel import ArrayGeometry, ClusterSpec, angular_correlation, \
    composite_channel, draw_channel
from .estimator import EstimationError, EstimatorOptions, estimate, \
    mf_baseline_estimate
from .ofdm import FrameConfig, build_frame, build_pilot_matrix, draw_symbols
from .receiver import beamform_compensate, estimate_branch_channels, mrc_detect

ANALYSIS_COLUMNS = ("eq24", "eq28", "eq38", "eq39")

CSV_COLUMNS = (
    "scenario_id", "estimator", "snr_db", "user_index", "mse_numerical",
    "mse_eq24", "mse_eq28", "mse_eq38", "mse_eq39", "ser", "trials",
    "failures", "seed",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class UserSpec:
    """Mean AoA of a user's main cluster, plus an optional side-cluster AoA."""

    aoa_deg: float
    side_aoa_deg: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    users: tuple[UserSpec, ...]
    antennas: int = 64
    d_norm: float = 0.5
    n: int = 64
    n_cp: int = 16
    n_blocks: int = 2
    taps: int = 10
    theta_as_deg: float = 10.0
    side_theta_as_deg: float = 2.0
    smpr_db: float | None = None
    subpaths: int = 50
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    cfo_bound: float = 0.2
    trials: int = 500
    seed: int = 20240
    aoa_bias_deg: float = 0.0
    estimator: str = "adaf"
    analysis_modes: tuple[str, ...] = ANALYSIS_COLUMNS
    grid_step: float = 0.01
    newton_iters: int = 5
    workers: int = 1
    scenario_id: str = "custom"

    def __post_init__(self) -> None:
        if not self.users:
            raise ConfigError("at least one user is required")
        if not self.snr_db:
            raise ConfigError("the SNR grid must be nonempty")
        if self.trials < 1:
            raise ConfigError("at least one trial is required")
        if not 0 < self.cfo_bound <= 0.5:
            raise ConfigError("the CFO bound must be in (0, 0.5]")
        if self.estimator not in ("adaf", "mf"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        unknown = set(self.analysis_modes) - set(ANALYSIS_COLUMNS)
        if unknown:
            raise ConfigError(f"unknown analysis modes {sorted(unknown)}")

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(m=self.antennas, d_norm=self.d_norm)

    def frame(self, n_blocks: int | None = None) -> FrameConfig:
        return FrameConfig(
            n=self.n, n_cp=self.n_cp,
            n_blocks=self.n_blocks if n_blocks is None else n_blocks,
            taps=self.taps,
        )

    @property
    def theta_as(self) -> float:
        return np.radians(self.theta_as_deg)

    def estimator_options(self) -> EstimatorOptions:
        return EstimatorOptions(
            grid_step=self.grid_step, newton_iters=self.newton_iters
        )


@dataclass(frozen=True)
class SweepResult:
    scenario_id: str
    estimator: str
    snr_db: tuple[float, ...]
    mse_numerical: np.ndarray
    analysis_curves: dict[str, np.ndarray]
    ser: np.ndarray | None
    trials: int
    failures: np.ndarray
    seed: int
    # Standard errors of the Monte Carlo means: per (snr, user), and for the
    # user-averaged MSE per snr (correlations across users kept intact).
    mse_stderr: np.ndarray | None = None
    mse_avg_stderr: np.ndarray | None = None
    wall_time: float = field(compare=False, default=0.0)


# === Per-trial execution ===

def _trial_streams(seed: int, snr_idx: int, trial_idx: int) -> dict[str, np.random.Generator]:
    root = np.random.SeedSequence(entropy=(seed, snr_idx, trial_idx))
    names = ("cfo", "channel", "noise", "symbols", "aoa_bias")
    return dict(zip(names, map(np.random.default_rng, root.spawn(len(names)))))


def _smpr_linear(config: ExperimentConfig) -> float:
    return 0.0 if config.smpr_db is None else 10.0 ** (config.smpr_db / 10.0)


def _run_trial(
    config: ExperimentConfig,
    mode: str,
    compute_ser: bool,
    snr_idx: int,
    trial_idx: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One Monte Carlo trial at one SNR point.

    Returns per-user arrays: squared CFO error, pilot curvature, symbol errors,
    symbol count, failure flag.
    """
    k_users = len(config.users)
    geom = config.geometry
    frame = config.frame(n_blocks=None if compute_ser else 1)
    streams = _trial_streams(config.seed, snr_idx, trial_idx)
    noise_var = 10.0 ** (-config.snr_db[snr_idx] / 10.0)
    theta_as = config.theta_as
    pdp = np.full(config.taps, 1.0 / config.taps)

    cfos = streams["cfo"].uniform(-config.cfo_bound, config.cfo_bound, k_users)
    side_power = _smpr_linear(config)
    channels = []
    for user in config.users:
        main = draw_channel(
            geom,
            ClusterSpec(np.radians(user.aoa_deg), theta_as, config.subpaths),
            config.taps, pdp, streams["channel"],
        )
        side = None
        if mode == "side_cluster" and user.side_aoa_deg is not None and side_power > 0:
            side = draw_channel(
                geom,
                ClusterSpec(
                    np.radians(user.side_aoa_deg),
                    np.radians(config.side_theta_as_deg),
                    config.subpaths, power=side_power,
                ),
                config.taps, pdp * side_power, streams["channel"],
            )
        channels.append(composite_channel(main, side))

    frame_data = build_frame(
        frame, [c.h for c in channels], cfos, noise_var,
        streams["symbols"], streams["noise"],
    )

    bias = np.zeros(k_users)
    if mode == "aoa_bias" and config.aoa_bias_deg > 0:
        bound = np.radians(config.aoa_bias_deg)
        bias = streams["aoa_bias"].uniform(-bound, bound, k_users)

    sq_err = np.zeros(k_users)
    d_k = np.zeros(k_users)
    ser_errors = np.zeros(k_users)
    ser_total = np.zeros(k_users)
    failures = np.zeros(k_users)
    options = config.estimator_options()
    run = estimate if config.estimator == "adaf" else mf_baseline_estimate
    pilot_block = frame_data.received[0]
    for k, user in enumerate(config.users):
        b_k = frame_data.pilot_matrices[k]
        d_k[k] = analysis.pilot_curvature(b_k)
        theta_hat = np.radians(user.aoa_deg) + bias[k]
        try:
            bank = user_beam_bank(geom, theta_hat, theta_as)
            solution = run(pilot_block, b_k, bank, options)
        except (EstimationError, ValueError, np.linalg.LinAlgError):
            failures[k] = 1
            solution = None
        if solution is None and run is not mf_baseline_estimate:
            # Failed trials stay in the statistics: fall back to the grid
            # search on the non-adaptive cost.
            try:
                bank = user_beam_bank(geom, theta_hat, theta_as)
                solution = mf_baseline_estimate(pilot_block, b_k, bank, options)
            except (EstimationError, ValueError, np.linalg.LinAlgError):
                solution = None
        if solution is None:
            sq_err[k] = cfos[k] ** 2
            if compute_ser:
                total = (frame.n_blocks - 1) * frame.n
                ser_errors[k] = total
                ser_total[k] = total
            continue
        sq_err[k] = (solution.phi_hat - cfos[k]) ** 2
        if compute_ser:
            branches = beamform_compensate(
                frame_data.received, solution.omega, solution.phi_hat,
                frame.n, frame.n_cp,
            )
            branches = estimate_branch_channels(branches, b_k)
            truth = frame_data.symbols[k, 1:]
            report = mrc_detect(branches, frame.data_constellation, truth)
            ser_errors[k] = report.errors
            ser_total[k] = report.total
    return sq_err, d_k, ser_errors, ser_total, failures


def _trial_star(args):
    return _run_trial(*args)


# === Sweep drivers ===

def _analysis_curves(
    config: ExperimentConfig, mean_d_k: np.ndarray
) -> dict[str, np.ndarray]:
    """Closed-form curves per (snr, user) for the requested modes.

    mean_d_k holds the realized pilot curvature averaged over trials, one entry
    per user; interference statistics use the statistical mode (summed angular
    correlations of the other users' main clusters).
    """
    geom = config.geometry
    theta_as = config.theta_as
    k_users = len(config.users)
    s_points = len(config.snr_db)
    thetas = [np.radians(u.aoa_deg) for u in config.users]
    corr = [angular_correlation(geom, t, theta_as) for t in thetas]
    banks = [user_beam_bank(geom, t, theta_as) for t in thetas]
    curves = {
        mode: np.full((s_points, k_users), np.nan)
        for mode in config.analysis_modes
    }
    for s, snr in enumerate(config.snr_db):
        sigma_n2 = 10.0 ** (-snr / 10.0)
        for k in range(k_users):
            # E{H'^H H'} = R_k' since the power delay profile sums to one.
            pi2 = sum(
                (corr[j] for j in range(k_users) if j != k),
                start=np.zeros((config.antennas, config.antennas), complex),
            )
            q = banks[k].q
            if "eq24" in curves:
                try:
                    ing = analysis.mse_ingredients(
                        banks[k], pi2, corr[k], np.eye(config.n, config.taps),
                        sigma_n2, config.n, config.taps,
                    )
                    ing = replace(ing, d_k=float(mean_d_k[k]))
                    curves["eq24"][s, k] = analysis.analytical_mse(ing)
                except (ValueError, np.linalg.LinAlgError):
                    pass
            if "eq28" in curves:
                try:
                    curves["eq28"][s, k] = analysis.mse_no_overlap(
                        config.n, config.taps, q, sigma_n2, thetas[k],
                        theta_as, float(mean_d_k[k]),
                    )
                except ValueError:
                    pass
            if "eq38" in curves:
                try:
                    curves["eq38"][s, k] = analysis.mse_overlap_asymptotic(
                        config.n, config.taps, q, sigma_n2, thetas[k],
                        theta_as, float(mean_d_k[k]),
                    )
                except ValueError:
                    pass
            if "eq39" in curves:
                try:
                    a1 = analysis.alpha_no_overlap(config.n, config.taps, q)
                    curves["eq39"][s, k] = analysis.mse_large_limit(
                        config.antennas, config.n, sigma_n2, theta_as, a1
                    )
                except ValueError:
                    pass
    return curves


def _run_sweep(
    config: ExperimentConfig, mode: str, compute_ser: bool
) -> SweepResult:
    start = time.perf_counter()
    k_users = len(config.users)
    s_points = len(config.snr_db)
    trials = config.trials
    sq = np.zeros((s_points, trials, k_users))
    d_k = np.zeros((s_points, trials, k_users))
    ser_err = np.zeros((s_points, trials, k_users))
    ser_tot = np.zeros((s_points, trials, k_users))
    fails = np.zeros((s_points, trials, k_users))
    tasks = [
        (config, mode, compute_ser, s, t)
        for s in range(s_points) for t in range(trials)
    ]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_trial_star, tasks, chunksize=8))
    else:
        outputs = [_trial_star(task) for task in tasks]
    for (_, _, _, s, t), out in zip(tasks, outputs):
        sq[s, t], d_k[s, t], ser_err[s, t], ser_tot[s, t], fails[s, t] = out
    mse = sq.mean(axis=1)
    mse_stderr = sq.std(axis=1, ddof=1 if trials > 1 else 0) / np.sqrt(trials)
    mse_avg_stderr = sq.mean(axis=2).std(axis=1, ddof=1 if trials > 1 else 0) \
        / np.sqrt(trials)
    curves = _analysis_curves(config, d_k.mean(axis=(0, 1)))
    ser = None
    if compute_ser:
        totals = ser_tot.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ser = np.where(totals > 0, ser_err.sum(axis=1) / totals, np.nan)
    return SweepResult(
        scenario_id=config.scenario_id,
        estimator=config.estimator,
        snr_db=tuple(config.snr_db),
        mse_numerical=mse,
        analysis_curves=curves,
        ser=ser,
        trials=trials,
        failures=fails.sum(axis=1).astype(int),
        seed=config.seed,
        mse_stderr=mse_stderr,
        mse_avg_stderr=mse_avg_stderr,
        wall_time=time.perf_counter() - start,
    )


def run_mse_sweep(config: ExperimentConfig) -> SweepResult:
    """CFO-error sweep: pilot block only, no detection."""
    return _run_sweep(config, mode="plain", compute_ser=False)


def run_ser_sweep(config: ExperimentConfig) -> SweepResult:
    """Full receive pipeline sweep with symbol error accounting."""
    if config.n_blocks < 2:
        raise ConfigError("SER needs at least one data block (n_blocks >= 2)")
    return _run_sweep(config, mode="plain", compute_ser=True)


def run_robustness_sweep(config: ExperimentConfig, mode: str) -> SweepResult:
    """MSE sweep under AoA bias or side-cluster impairments."""
    if mode not in ("aoa_bias", "side_cluster"):
        raise ConfigError(f"unknown robustness mode {mode!r}")
    if mode == "side_cluster":
        if config.smpr_db is None:
            raise ConfigError("side_cluster mode needs smpr_db")
        if all(u.side_aoa_deg is None for u in config.users):
            raise ConfigError("side_cluster mode needs per-user side AoAs")
    return _run_sweep(config, mode=mode, compute_ser=False)


def sampled_pilot_curvature(config: ExperimentConfig, draws: int = 32) -> float:
    """Mean pilot curvature over seeded pilot draws, for trial-free analysis."""
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 977)))
    samples = [
        analysis.pilot_curvature(
            build_pilot_matrix(draw_symbols("qpsk", config.n, rng), config.taps)
        )
        for _ in range(draws)
    ]
    return float(np.mean(samples))


def run_analysis_only(config: ExperimentConfig) -> SweepResult:
    """Closed-form curves without Monte Carlo trials."""
    start = time.perf_counter()
    s_points = len(config.snr_db)
    k_users = len(config.users)
    mean_dk = np.full(k_users, sampled_pilot_curvature(config))
    curves = _analysis_curves(config, mean_dk)
    return SweepResult(
        scenario_id=config.scenario_id,
        estimator=config.estimator,
        snr_db=tuple(config.snr_db),
        mse_numerical=np.full((s_points, k_users), np.nan),
        analysis_curves=curves,
        ser=None,
        trials=0,
        failures=np.zeros((s_points, k_users), dtype=int),
        seed=config.seed,
        wall_time=time.perf_counter() - start,
    )


# === CSV emission ===

def _fmt(value: float) -> str:
    return f"{value:.17g}"


def write_csv(result: SweepResult, handle) -> None:
    """One row per (snr, user), SNR ascending then user index ascending."""
    order = np.argsort(np.asarray(result.snr_db), kind="stable")
    k_users = result.mse_numerical.shape[1]
    writer = csv.writer(handle)
    writer.writerow(CSV_COLUMNS)
    for s in order:
        for k in range(k_users):
            curves = result.analysis_curves
            ser_val = np.nan if result.ser is None else result.ser[s, k]
            writer.writerow([
                result.scenario_id,
                result.estimator,
                _fmt(result.snr_db[s]),
                str(k),
                _fmt(result.mse_numerical[s, k]),
                _fmt(curves.get("eq24", _NAN)[s, k]),
                _fmt(curves.get("eq28", _NAN)[s, k]),
                _fmt(curves.get("eq38", _NAN)[s, k]),
                _fmt(curves.get("eq39", _NAN)[s, k]),
                _fmt(ser_val),
                str(result.trials),
                str(int(result.failures[s, k])),
                str(result.seed),
            ])


def emit_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        write_csv(result, handle)


class _NanTable:
    def __getitem__(self, key):
        return np.nan


_NAN = _NanTable()


def emit_gnuplot(result: SweepResult, prefix: str) -> list[str]:
    """Two-column (snr, value) files per user and metric; returns written paths."""
    order = np.argsort(np.asarray(result.snr_db), kind="stable")
    k_users = result.mse_numerical.shape[1]
    written = []
    metrics: dict[str, np.ndarray] = {"mse": result.mse_numerical}
    for mode, curve in result.analysis_curves.items():
        metrics[f"mse_{mode}"] = curve
    if result.ser is not None:
        metrics["ser"] = result.ser
    for name, table in metrics.items():
        for k in range(k_users):
            path = f"{prefix}_{name}_user{k}.dat"
            with open(path, "w", encoding="utf-8") as handle:
                for s in order:
                    handle.write(
                        f"{_fmt(result.snr_db[s])} {_fmt(table[s, k])}\n"
                    )
            written.append(path)
    return written
