"""Multipath CSI channel model and synthetic activity stream generation.

The channel frequency response (CFR) is split into a static part (paths not
affected by body motion) and a dynamic part (paths whose length changes over
time). The power of the total CFR is a constant offset plus sinusoids whose
frequencies equal the path-length change speeds divided by the carrier
wavelength; that power signal is what the rest of the pipeline consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-constant speed over time.

    ``segments`` is a sequence of (duration_seconds, speed_m_per_s) pairs.
    Displacement is the exact integral of the step function, so the
    constant-speed case is representable without approximation.
    """

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ConfigError("speed profile needs at least one segment")
        for dur, _ in self.segments:
            if dur <= 0:
                raise ConfigError("segment durations must be positive")

    @classmethod
    def constant(cls, speed: float, duration: float) -> "SpeedProfile":
        return cls(((float(duration), float(speed)),))

    @property
    def duration(self) -> float:
        return float(sum(d for d, _ in self.segments))

    def _tables(self):
        durs = np.array([d for d, _ in self.segments])
        speeds = np.array([v for _, v in self.segments])
        starts = np.concatenate(([0.0], np.cumsum(durs)[:-1]))
        cumdisp = np.concatenate(([0.0], np.cumsum(durs * speeds)[:-1]))
        return starts, speeds, cumdisp

    def speed(self, t):
        t_arr = np.asarray(t, dtype=float)
        self._check_domain(t_arr)
        starts, speeds, _ = self._tables()
        idx = np.clip(np.searchsorted(starts, t_arr, side="right") - 1, 0, len(speeds) - 1)
        out = speeds[idx]
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def displacement(self, t):
        """Integral of speed from 0 to t (meters)."""
        t_arr = np.asarray(t, dtype=float)
        self._check_domain(t_arr)
        starts, speeds, cumdisp = self._tables()
        idx = np.clip(np.searchsorted(starts, t_arr, side="right") - 1, 0, len(speeds) - 1)
        out = cumdisp[idx] + speeds[idx] * (t_arr - starts[idx])
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def _check_domain(self, t_arr):
        if np.any(t_arr < 0) or np.any(t_arr > self.duration + 1e-12):
            raise DomainError(
                f"time outside the profile domain [0, {self.duration}]"
            )


@dataclass(frozen=True)
class StaticPath:
    """A propagation path unaffected by body motion."""

    attenuation: complex
    delay: float  # time of flight, seconds

    def __post_init__(self):
        if abs(self.attenuation) <= 0:
            raise ConfigError("static path attenuation must be nonzero")
        if self.delay < 0:
            raise ConfigError("static path delay must be >= 0")


@dataclass(frozen=True)
class PathComponent:
    """A dynamic path whose length changes with body motion."""

    attenuation: complex
    initial_length: float  # d(0), meters
    speed_profile: SpeedProfile

    def __post_init__(self):
        if self.initial_length < 0:
            raise ConfigError("initial path length must be >= 0")


def path_length(path: PathComponent, t) -> float:
    """Path length d(t) = d(0) + integral of the speed profile."""
    return path.initial_length + path.speed_profile.displacement(t)


@dataclass(frozen=True)
class ChannelConfig:
    carrier_frequency: float = 5.32e9  # Hz
    freq_offset: float = 0.0  # Hz, transmitter/receiver carrier mismatch
    static_paths: tuple[StaticPath, ...] = ()
    noise_std: float = 0.0  # Gaussian noise level, relative to clean power std
    sample_rate: float = 500.0  # packets per second
    n_channels: int = 90  # 3 Tx x 1 Rx x 30 subcarriers
    subcarrier_spacing: float = 312_500.0  # Hz, spreads channels in frequency

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise ConfigError("carrier frequency must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if self.n_channels <= 0:
            raise ConfigError("n_channels must be positive")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def channel_frequency(self, channel: int) -> float:
        """Subcarrier frequency assigned to one of the n_channels streams."""
        sub = channel % 30
        return self.carrier_frequency + (sub - 14.5) * self.subcarrier_spacing


@dataclass(frozen=True)
class ActivitySpec:
    """One synthetic activity class, defined purely by its dynamic paths."""

    label: int
    name: str
    dynamic_paths: tuple[PathComponent, ...]
    duration: float  # seconds
    jitter: float = 0.05  # per-channel relative perturbation of path params

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("activity duration must be positive")
        if not self.dynamic_paths:
            raise ConfigError("activity needs at least one dynamic path")
        for p in self.dynamic_paths:
            if p.speed_profile.duration < self.duration - 1e-12:
                raise ConfigError(
                    f"speed profile of {self.name!r} does not cover the duration"
                )
        if not 0 <= self.jitter < 1:
            raise ConfigError("jitter must be in [0, 1)")


@dataclass(frozen=True)
class CsiStream:
    """CFR power of a whole activity: one row per channel, one column per sample."""

    label: int
    samples: np.ndarray  # (n_channels, N), real, >= 0
    sample_rate: float

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise ConfigError("stream samples must be a 2-D matrix")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("stream samples must be finite")


def static_cfr(config: ChannelConfig, f: float) -> complex:
    """Static CFR H_s(f): sum of attenuations phased by time of flight."""
    h = 0j
    for p in config.static_paths:
        h += p.attenuation * np.exp(-2j * np.pi * f * p.delay)
    return complex(h)


def dynamic_cfr(paths, wavelength: float, t) -> complex:
    """Dynamic CFR H_d(t): sum over motion-affected paths."""
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    h = 0j
    for p in paths:
        d = path_length(p, t)
        h += p.attenuation * np.exp(-2j * np.pi * d / wavelength)
    return complex(h)


def cfr(config: ChannelConfig, paths, f: float, t) -> complex:
    """Total CFR including the carrier-offset phase rotation."""
    hs = static_cfr(config, f)
    hd = dynamic_cfr(paths, config.wavelength, t)
    return complex(np.exp(-2j * np.pi * config.freq_offset * t) * (hs + hd))


def cfr_power(config: ChannelConfig, paths, f: float, t) -> float:
    """|H(f,t)|^2; the carrier-offset prefactor has unit modulus and drops out."""
    return float(np.abs(cfr(config, paths, f, t)) ** 2)


def doppler_frequency(speed: float, wavelength: float) -> float:
    """Frequency of the power sinusoid induced by a path changing at `speed`."""
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    return speed / wavelength


def channel_paths(spec: ActivitySpec, channel: int, seed: int):
    """Per-channel jittered copies of the spec's dynamic paths.

    Deterministic in (spec, channel, seed); used by stream generation and
    reproducible from outside for verification.
    """
    rng = np.random.default_rng([seed, 1, channel])
    paths = []
    for p in spec.dynamic_paths:
        ua, ud = rng.uniform(-1.0, 1.0, size=2)
        paths.append(
            PathComponent(
                attenuation=p.attenuation * (1.0 + ua * spec.jitter),
                initial_length=p.initial_length * (1.0 + ud * spec.jitter),
                speed_profile=p.speed_profile,
            )
        )
    return paths


def generate_activity_stream(
    spec: ActivitySpec, config: ChannelConfig, seed: int
) -> CsiStream:
    """Synthesize the n_channels x N CFR power matrix for one activity run."""
    n = int(round(spec.duration * config.sample_rate))
    if n < 1:
        raise DomainError("duration * sample_rate must be at least 1 sample")
    t = np.arange(n) / config.sample_rate
    lam = config.wavelength
    rows = np.empty((config.n_channels, n))
    for ch in range(config.n_channels):
        f_ch = config.channel_frequency(ch)
        hs = static_cfr(config, f_ch)
        hd = np.zeros(n, dtype=complex)
        for p in channel_paths(spec, ch, seed):
            d = path_length(p, t)
            hd += p.attenuation * np.exp(-2j * np.pi * d / lam)
        h = np.exp(-2j * np.pi * config.freq_offset * t) * (hs + hd)
        rows[ch] = np.abs(h) ** 2
    if config.noise_std > 0:
        noise_rng = np.random.default_rng([seed, 2])
        sigma = config.noise_std * rows.std()
        rows = np.clip(rows + noise_rng.normal(0.0, sigma, rows.shape), 0.0, None)
    return CsiStream(label=spec.label, samples=rows, sample_rate=config.sample_rate)


def default_channel_config(noise_std: float = 0.02) -> ChannelConfig:
    """5.32 GHz carrier, two static paths, 90 channels at 500 samples/s."""
    return ChannelConfig(
        carrier_frequency=5.32e9,
        freq_offset=0.0,
        static_paths=(
            StaticPath(attenuation=1.0 + 0.0j, delay=1.2e-8),
            StaticPath(attenuation=0.35 * np.exp(0.7j), delay=2.6e-8),
        ),
        noise_std=noise_std,
        sample_rate=500.0,
        n_channels=90,
    )


def default_activity_specs(duration: float = 2.0, jitter: float = 0.05):
    """Six classes distinguished only by speed profiles.

    Every class carries the same total dynamic power (sum of |a|^2), so
    time-averaged power is uninformative and mean-feature baselines are
    deliberately weak; only the temporal structure separates the classes.
    """
    amp = 0.35

    def const(v):
        return SpeedProfile.constant(v, duration)

    def one_path(profile, a=amp, d0=3.0):
        return (PathComponent(a + 0j, d0, profile),)

    def cyclic(pattern):
        # repeat the speed pattern at a period shorter than one clip
        # (~0.44 s at the default windowing), so every clip carries the
        # class's full temporal signature rather than a random phase of it
        cycles = max(1, int(round(duration / 0.5)))
        seg = duration / (cycles * len(pattern))
        return SpeedProfile(tuple((seg, v) for _ in range(cycles) for v in pattern))

    specs = [
        ActivitySpec(0, "const_slow", one_path(const(0.25)), duration, jitter),
        ActivitySpec(1, "const_fast", one_path(const(1.2)), duration, jitter),
        ActivitySpec(
            2, "ramp", one_path(cyclic((0.2, 0.45, 0.7, 0.95, 1.2))), duration, jitter
        ),
        ActivitySpec(
            3, "oscillate", one_path(cyclic((0.6, -0.6))), duration, jitter
        ),
        ActivitySpec(
            4,
            "two_path",
            (
                PathComponent(amp / math.sqrt(2) + 0j, 3.0, const(0.45)),
                PathComponent(amp / math.sqrt(2) + 0j, 2.4, const(-0.45)),
            ),
            duration,
            jitter,
        ),
        ActivitySpec(
            5, "burst_idle", one_path(cyclic((0.8, 0.0))), duration, jitter
        ),
    ]
    return specs
