"""Experiment manifest: the human-editable YAML file driving data generation.

The manifest carries the channel parameters, the activity class library, the
windowing parameters, and dataset sizing. Every field has a built-in
default, so a manifest only needs the keys it wants to override.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .channel import (
    ActivitySpec,
    ChannelConfig,
    PathComponent,
    SpeedProfile,
    StaticPath,
    default_activity_specs,
    default_channel_config,
)
from .dataset import WindowingParams
from .errors import ConfigError

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelConfig
    activities: tuple[ActivitySpec, ...]
    windowing: WindowingParams
    per_class: int = 40
    clips_per_stream: int = 1


def default_experiment_config() -> ExperimentConfig:
    return ExperimentConfig(
        channel=default_channel_config(),
        activities=tuple(default_activity_specs()),
        windowing=WindowingParams(),
    )


def _complex_of(value, where):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: attenuation must be a number or [re, im]")


def _profile_of(entry, duration, where) -> SpeedProfile:
    if "speed" in entry:
        return SpeedProfile.constant(float(entry["speed"]), duration)
    if "segments" in entry:
        segs = entry["segments"]
        if not isinstance(segs, list) or not all(len(s) == 2 for s in segs):
            raise ConfigError(f"{where}: segments must be a list of [duration, speed]")
        return SpeedProfile(tuple((float(d), float(v)) for d, v in segs))
    raise ConfigError(f"{where}: path needs either 'speed' or 'segments'")


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if raw.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
        raise ConfigError(f"{path}: unsupported manifest version {raw.get('version')}")

    defaults = default_experiment_config()

    ch_raw = raw.get("channel", {})
    base = defaults.channel
    static = base.static_paths
    if "static_paths" in ch_raw:
        static = tuple(
            StaticPath(
                attenuation=_complex_of(p.get("attenuation", 1.0), "channel.static_paths"),
                delay=float(p.get("delay", 0.0)),
            )
            for p in ch_raw["static_paths"]
        )
    channel = ChannelConfig(
        carrier_frequency=float(ch_raw.get("carrier_frequency", base.carrier_frequency)),
        freq_offset=float(ch_raw.get("freq_offset", base.freq_offset)),
        static_paths=static,
        noise_std=float(ch_raw.get("noise_std", base.noise_std)),
        sample_rate=float(ch_raw.get("sample_rate", base.sample_rate)),
        n_channels=int(ch_raw.get("n_channels", base.n_channels)),
        subcarrier_spacing=float(ch_raw.get("subcarrier_spacing", base.subcarrier_spacing)),
    )

    if "activities" in raw:
        activities = []
        for i, act in enumerate(raw["activities"]):
            where = f"activities[{i}]"
            if "name" not in act or "paths" not in act:
                raise ConfigError(f"{where}: needs 'name' and 'paths'")
            duration = float(act.get("duration", 2.0))
            paths = tuple(
                PathComponent(
                    attenuation=_complex_of(p.get("attenuation", 0.3), where),
                    initial_length=float(p.get("initial_length", 3.0)),
                    speed_profile=_profile_of(p, duration, where),
                )
                for p in act["paths"]
            )
            activities.append(
                ActivitySpec(
                    label=int(act.get("label", i)),
                    name=str(act["name"]),
                    dynamic_paths=paths,
                    duration=duration,
                    jitter=float(act.get("jitter", 0.05)),
                )
            )
        activities = tuple(activities)
    else:
        activities = defaults.activities

    w_raw = raw.get("windowing", {})
    windowing = WindowingParams(
        window_width=int(w_raw.get("window_width", 100)),
        stride=int(w_raw.get("stride", 8)),
        clip_length=int(w_raw.get("clip_length", 16)),
    )

    d_raw = raw.get("dataset", {})
    return ExperimentConfig(
        channel=channel,
        activities=activities,
        windowing=windowing,
        per_class=int(d_raw.get("per_class", defaults.per_class)),
        clips_per_stream=int(d_raw.get("clips_per_stream", defaults.clips_per_stream)),
    )


def experiment_config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved manifest content, for run manifests and re-dumping."""

    def path_dict(p: PathComponent):
        # cast through float(): attenuations built with numpy land here as
        # np.float64, which json accepts but yaml.safe_dump rejects
        return {
            "attenuation": [float(p.attenuation.real), float(p.attenuation.imag)],
            "initial_length": float(p.initial_length),
            "segments": [[float(d), float(v)] for d, v in p.speed_profile.segments],
        }

    return {
        "version": MANIFEST_VERSION,
        "channel": {
            "carrier_frequency": cfg.channel.carrier_frequency,
            "freq_offset": cfg.channel.freq_offset,
            "noise_std": cfg.channel.noise_std,
            "sample_rate": cfg.channel.sample_rate,
            "n_channels": cfg.channel.n_channels,
            "subcarrier_spacing": cfg.channel.subcarrier_spacing,
            "static_paths": [
                {
                    "attenuation": [float(p.attenuation.real), float(p.attenuation.imag)],
                    "delay": float(p.delay),
                }
                for p in cfg.channel.static_paths
            ],
        },
        "activities": [
            {
                "label": a.label,
                "name": a.name,
                "duration": a.duration,
                "jitter": a.jitter,
                "paths": [path_dict(p) for p in a.dynamic_paths],
            }
            for a in cfg.activities
        ],
        "windowing": {
            "window_width": cfg.windowing.window_width,
            "stride": cfg.windowing.stride,
            "clip_length": cfg.windowing.clip_length,
        },
        "dataset": {"per_class": cfg.per_class, "clips_per_stream": cfg.clips_per_stream},
    }
