"""Shipped scenario presets.

Every preset uses the common frame: 64 subcarriers, 10 channel taps, uniform
power delay profile, QPSK pilots, 16-QAM data, CFOs uniform in +-0.2, and a
10 degree angular spread per user.

fig3   nine users at irregular angles, several pairs closer than the spread,
       so beam regions overlap heavily; stresses the interference floor.
fig4   nine users on a regular 15 degree raster; mild overlap, used for the
       estimator-vs-baseline and SER comparisons.
fig5   fig4 geometry with a +-10 degree uniform error on the AoA knowledge
       fed to the beam selection.
fig7   seven users on an 18 degree raster, each with a narrow side cluster
       centered on the next user's angle (cyclic), side power set by smpr_db.
"""

from __future__ import annotations

from dataclasses import replace

from .experiments import ConfigError, ExperimentConfig, UserSpec

DEFAULT_SNR_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)

_FIG3_AOA_DEG = (38.0, 50.0, 70.0, 75.0, 95.0, 97.0, 117.0, 122.0, 142.0)
_FIG4_AOA_DEG = tuple(float(a) for a in range(30, 151, 15))
_FIG7_AOA_DEG = tuple(float(a) for a in range(36, 145, 18))

PRESET_NAMES = ("fig3", "fig4", "fig5", "fig7")


def _users(aoas: tuple[float, ...]) -> tuple[UserSpec, ...]:
    return tuple(UserSpec(aoa_deg=a) for a in aoas)


def _users_with_sides(aoas: tuple[float, ...]) -> tuple[UserSpec, ...]:
    shifted = aoas[1:] + aoas[:1]
    return tuple(
        UserSpec(aoa_deg=a, side_aoa_deg=s) for a, s in zip(aoas, shifted)
    )


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Build a named preset; keyword overrides are applied on top."""
    base = dict(
        snr_db=DEFAULT_SNR_DB,
        trials=500,
        seed=20240,
        scenario_id=name,
    )
    if name == "fig3":
        base.update(users=_users(_FIG3_AOA_DEG), antennas=64)
    elif name == "fig4":
        base.update(users=_users(_FIG4_AOA_DEG), antennas=64)
    elif name == "fig5":
        base.update(users=_users(_FIG4_AOA_DEG), antennas=64, aoa_bias_deg=10.0)
    elif name == "fig7":
        base.update(
            users=_users_with_sides(_FIG7_AOA_DEG),
            antennas=128,
            side_theta_as_deg=2.0,
            smpr_db=0.0,
        )
    else:
        raise ConfigError(
            f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}"
        )
    base.update(overrides)
    return ExperimentConfig(**base)


def apply_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """dataclasses.replace with ConfigError on unknown fields."""
    try:
        return replace(config, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
