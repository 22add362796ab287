"""Command line front end.

Subcommands:
  mse-sweep    CFO mean squared error vs SNR
  ser-sweep    symbol error rate vs SNR (full receive pipeline)
  robustness   MSE sweep under AoA error or side clusters
  analyze      closed-form curves only, no Monte Carlo
  check        internal property suites (beamformer optimality, trace
               identities, noise moments)

Scenarios come from a named preset (--preset), a flat key=value config file
(--config), or both; individual flags override either. Exit codes: 0 success,
1 configuration error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import verify
from .estimator import EstimationError
from .experiments import ConfigError, ExperimentConfig, SweepResult, UserSpec, \
    emit_csv, emit_gnuplot, run_analysis_only, run_mse_sweep, \
    run_robustness_sweep, run_ser_sweep, write_csv
from .presets import PRESET_NAMES, preset_config


class _Parser(argparse.ArgumentParser):
    """argparse reserves exit code 2 for usage errors; remap them to 1."""

    def error(self, message):
        raise ConfigError(message)


def parse_snr_spec(text: str) -> tuple[float, ...]:
    """SNR grid from 'a:b:step' (inclusive), 'v1,v2,...', or a single value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError("expected a:b:step")
            a, b, step = parts
            if step <= 0 or b < a:
                raise ValueError("need b >= a and step > 0")
            return tuple(np.arange(a, b + step / 2.0, step))
        if "," in text:
            return tuple(float(p) for p in text.split(",") if p.strip())
        return (float(text),)
    except ValueError as exc:
        raise ConfigError(f"bad SNR spec {text!r}: {exc}") from None


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


_CONFIG_PARSERS = {
    "users": _parse_float_list,
    "side_aoas": _parse_float_list,
    "snr_db": parse_snr_spec,
    "antennas": int,
    "n": int,
    "n_cp": int,
    "n_blocks": int,
    "taps": int,
    "subpaths": int,
    "trials": int,
    "seed": int,
    "newton_iters": int,
    "workers": int,
    "d_norm": float,
    "theta_as_deg": float,
    "side_theta_as_deg": float,
    "smpr_db": float,
    "cfo_bound": float,
    "aoa_bias_deg": float,
    "grid_step": float,
    "estimator": str,
    "scenario_id": str,
}


def load_config_file(path: str) -> dict:
    """Flat key = value file; '#' starts a comment, blank lines ignored."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in _CONFIG_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](value)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def _build_users(values: dict) -> dict:
    """Fold 'users' and 'side_aoas' float lists into UserSpec tuples."""
    if "users" not in values:
        return values
    aoas = values.pop("users")
    sides = values.pop("side_aoas", None)
    if sides is not None and len(sides) != len(aoas):
        raise ConfigError(
            f"{len(sides)} side AoAs for {len(aoas)} users; counts must match"
        )
    if sides is None:
        users = tuple(UserSpec(aoa_deg=a) for a in aoas)
    else:
        users = tuple(
            UserSpec(aoa_deg=a, side_aoa_deg=s) for a, s in zip(aoas, sides)
        )
    values["users"] = users
    return values


def assemble_config(args: argparse.Namespace) -> ExperimentConfig:
    """Preset, then config file, then individual flags; later wins."""
    overrides: dict = {}
    if args.config:
        overrides.update(load_config_file(args.config))
    flag_map = {
        "snr": ("snr_db", lambda v: parse_snr_spec(v)),
        "trials": ("trials", int),
        "seed": ("seed", int),
        "antennas": ("antennas", int),
        "estimator": ("estimator", str),
        "workers": ("workers", int),
        "aoa_bias": ("aoa_bias_deg", float),
        "smpr_db": ("smpr_db", float),
    }
    for attr, (field, conv) in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[field] = conv(value)
    overrides = _build_users(overrides)
    try:
        if args.preset:
            return preset_config(args.preset, **overrides)
        if "users" not in overrides:
            raise ConfigError(
                "no scenario: pass --preset or a --config file with a users= line"
            )
        return ExperimentConfig(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(result: SweepResult, args: argparse.Namespace) -> None:
    if args.out:
        emit_csv(result, args.out)
    else:
        write_csv(result, sys.stdout)
    if getattr(args, "gnuplot", None):
        emit_gnuplot(result, args.gnuplot)


def _add_common(sub: argparse.ArgumentParser, monte_carlo: bool = True) -> None:
    sub.add_argument("--preset", choices=PRESET_NAMES, default=None,
                     help="named scenario")
    sub.add_argument("--config", metavar="PATH", default=None,
                     help="flat key=value scenario file")
    sub.add_argument("--snr", metavar="A:B:STEP", default=None,
                     help="SNR grid in dB, inclusive, or a comma list")
    sub.add_argument("--seed", type=int, default=None, metavar="S")
    sub.add_argument("--antennas", type=int, default=None, metavar="M")
    sub.add_argument("--estimator", choices=("adaf", "mf"), default=None)
    sub.add_argument("--out", metavar="PATH", default=None,
                     help="CSV output path (default: stdout)")
    sub.add_argument("--gnuplot", metavar="PREFIX", default=None,
                     help="also write two-column .dat files per curve")
    if monte_carlo:
        sub.add_argument("--trials", type=int, default=None, metavar="T")
        sub.add_argument("--workers", type=int, default=None, metavar="W")


def build_parser() -> _Parser:
    parser = _Parser(prog="beamsync", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True)

    mse = subs.add_parser("mse-sweep", help="CFO MSE vs SNR")
    _add_common(mse)

    ser = subs.add_parser("ser-sweep", help="symbol error rate vs SNR")
    _add_common(ser)

    rob = subs.add_parser("robustness", help="MSE under AoA error or side clusters")
    rob.add_argument("--mode", choices=("aoa-bias", "side-cluster"), required=True)
    rob.add_argument("--aoa-bias", type=float, default=None, metavar="DEG",
                     help="AoA error bound in degrees (aoa-bias mode)")
    rob.add_argument("--smpr-db", type=float, default=None, metavar="DB",
                     help="side-to-main power ratio in dB (side-cluster mode)")
    _add_common(rob)

    ana = subs.add_parser("analyze", help="closed-form curves only")
    _add_common(ana, monte_carlo=False)

    subs.add_parser("check", help="run the internal property suites")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "check":
        reports = verify.run_all()
        for report in reports:
            mark = "PASS" if report.passed else "FAIL"
            print(f"{mark} {report.name}: {report.detail}")
        return 0 if all(r.passed for r in reports) else 2
    config = assemble_config(args)
    if args.command == "mse-sweep":
        result = run_mse_sweep(config)
    elif args.command == "ser-sweep":
        result = run_ser_sweep(config)
    elif args.command == "robustness":
        result = run_robustness_sweep(config, args.mode.replace("-", "_"))
    elif args.command == "analyze":
        result = run_analysis_only(config)
    else:
        raise ConfigError(f"unknown command {args.command!r}")
    _emit(result, args)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EstimationError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
