"""Angle-domain receive processing for uplink OFDM over large arrays.

Per-user carrier frequency offset estimation behind a two-stage spatial
filter (a DFT-grid beam bank followed by adaptive branch combining), plus the
surrounding pieces: channel synthesis, frame generation, grid+Newton CFO
search, maximum ratio combining detection, closed-form MSE predictions, and a
seeded Monte Carlo harness with a CSV-emitting command line.
"""

from .beamspace import BeamBank, build_beam_bank, continuous_qk, \
    dft_angle_grid, select_angles, user_beam_bank
from .channel import ArrayGeometry, ChannelRealization, ClusterSpec, \
    angular_correlation, composite_channel, draw_channel, steering_vector
from .estimator import CfoProblem, CfoSolution, EstimationError, \
    EstimatorOptions, coarse_cfo_search, estimate, make_problem, \
    mf_baseline_estimate, newton_refine, residual_gram, signal_gram, sinr_cost
from .experiments import ExperimentConfig, SweepResult, UserSpec, emit_csv, \
    emit_gnuplot, run_analysis_only, run_mse_sweep, run_robustness_sweep, \
    run_ser_sweep
from .ofdm import FrameConfig, UplinkFrame, build_frame, build_pilot_matrix, \
    cfo_rotation, constellation, draw_symbols, synthesize_received
from .presets import preset_config
from .receiver import BranchObservations, DetectionReport, beamform_compensate, \
    estimate_branch_channels, ls_channel_estimate, mrc_detect, ser
from .analysis import MseIngredients, alpha_no_overlap, alpha_overlap, \
    analytical_mse, mse_ingredients, mse_large_limit, mse_no_overlap, \
    mse_overlap_asymptotic, operation_counts, pilot_curvature

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "BeamBank", "BranchObservations", "CfoProblem",
    "CfoSolution", "ChannelRealization", "ClusterSpec", "DetectionReport",
    "EstimationError", "EstimatorOptions", "ExperimentConfig", "FrameConfig",
    "MseIngredients", "SweepResult", "UplinkFrame", "UserSpec",
    "alpha_no_overlap", "alpha_overlap", "analytical_mse",
    "angular_correlation", "beamform_compensate", "build_beam_bank",
    "build_frame", "build_pilot_matrix", "cfo_rotation", "coarse_cfo_search",
    "composite_channel", "constellation", "continuous_qk", "dft_angle_grid",
    "draw_channel", "draw_symbols", "emit_csv", "emit_gnuplot", "estimate",
    "estimate_branch_channels", "ls_channel_estimate", "make_problem",
    "mf_baseline_estimate", "mrc_detect", "mse_ingredients", "mse_large_limit",
    "mse_no_overlap", "mse_overlap_asymptotic", "newton_refine",
    "operation_counts", "pilot_curvature", "preset_config", "residual_gram",
    "run_analysis_only", "run_mse_sweep", "run_robustness_sweep",
    "run_ser_sweep", "select_angles", "ser", "signal_gram", "sinr_cost",
    "steering_vector", "synthesize_received", "user_beam_bank",
]
