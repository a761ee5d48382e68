"""Windowing of CSI streams into video-volume clips, splits, persistence.

A stream (channels x time) is cut by a sliding window into a sequence of
"CSI images" (channels x window_width); a clip is a run of consecutive
images, giving a volume of shape (clip_length, channels, window_width) that
the 3-D network consumes like a short video.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ActivitySpec, ChannelConfig, CsiStream, generate_activity_stream
from .errors import ConfigError, DomainError, FormatError
from .tensorio import load_tensors, save_tensors

FORMAT_VERSION = 1


@dataclass(frozen=True)
class WindowingParams:
    window_width: int = 100
    stride: int = 8
    clip_length: int = 16

    def __post_init__(self):
        if self.window_width < 1 or self.stride < 1 or self.clip_length < 1:
            raise ConfigError("window_width, stride and clip_length must be >= 1")


@dataclass(frozen=True)
class NormalizationStats:
    mean: float
    std: float


@dataclass(frozen=True)
class CsiClip:
    label: int
    volume: np.ndarray  # (clip_length, n_channels, window_width), float32

    def __post_init__(self):
        if self.volume.ndim != 3:
            raise ConfigError("clip volume must be 3-D")
        if not np.all(np.isfinite(self.volume)):
            raise ConfigError("clip volume must be finite")


@dataclass
class Dataset:
    clips: list[CsiClip]
    class_names: list[str]
    stats: NormalizationStats
    train_flags: np.ndarray  # bool per clip; True = training split
    streams: list[CsiStream] = field(default_factory=list)  # aligned with clips

    def __post_init__(self):
        k = len(self.class_names)
        for c in self.clips:
            if not 0 <= c.label < k:
                raise ConfigError(f"clip label {c.label} outside class table")
        if len(self.train_flags) != len(self.clips):
            raise ConfigError("split flags must cover every clip")

    def indices(self, train: bool) -> np.ndarray:
        return np.flatnonzero(self.train_flags == train)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.stats == other.stats
            and np.array_equal(self.train_flags, other.train_flags)
            and len(self.clips) == len(other.clips)
            and all(
                a.label == b.label and np.array_equal(a.volume, b.volume)
                for a, b in zip(self.clips, other.clips)
            )
            and len(self.streams) == len(other.streams)
            and all(
                a.label == b.label
                and a.sample_rate == b.sample_rate
                and np.array_equal(a.samples, b.samples)
                for a, b in zip(self.streams, other.streams)
            )
        )


def segment_windows(stream: CsiStream, params: WindowingParams) -> np.ndarray:
    """Slice the stream into frames of width window_width every stride columns.

    Returns an array of shape (n_frames, n_channels, window_width) where
    frame i covers columns [i*stride, i*stride + window_width).
    """
    n = stream.samples.shape[1]
    w, s = params.window_width, params.stride
    if n < w:
        raise DomainError(f"stream of length {n} is shorter than the window ({w})")
    n_frames = (n - w) // s + 1
    frames = np.empty((n_frames, stream.samples.shape[0], w), dtype=stream.samples.dtype)
    for i in range(n_frames):
        frames[i] = stream.samples[:, i * s : i * s + w]
    return frames


def sample_clip(frames: np.ndarray, clip_length: int, seed: int) -> np.ndarray:
    """Pick clip_length consecutive frames at a seeded uniform start offset."""
    n = len(frames)
    if n < clip_length:
        raise DomainError(f"{n} frames cannot supply a clip of {clip_length}")
    start = int(np.random.default_rng(seed).integers(0, n - clip_length + 1))
    return frames[start : start + clip_length]


def normalize(volume: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Elementwise (x - mean) / std with a floor on std."""
    return (volume - stats.mean) / max(stats.std, 1e-8)


def compute_stats(volumes) -> NormalizationStats:
    flat = np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v in volumes])
    return NormalizationStats(mean=float(flat.mean()), std=float(flat.std()))


def build_dataset(
    specs: list[ActivitySpec],
    per_class: int,
    params: WindowingParams,
    config: ChannelConfig,
    seed: int,
    clips_per_stream: int = 1,
) -> Dataset:
    """Generate per_class streams per activity, window and clip them, and
    assign a stratified 50/50 train/test split. Deterministic in seed."""
    if per_class < 2:
        raise ConfigError("per_class must be at least 2")
    rng = np.random.default_rng([seed, 0])
    clips: list[CsiClip] = []
    streams: list[CsiStream] = []
    labels_of_class: dict[int, list[int]] = {}
    for spec in specs:
        for _ in range(per_class):
            stream_seed = int(rng.integers(0, 2**63))
            stream = generate_activity_stream(spec, config, stream_seed)
            frames = segment_windows(stream, params)
            stream32 = CsiStream(
                label=stream.label,
                samples=stream.samples.astype(np.float32),
                sample_rate=stream.sample_rate,
            )
            for _ in range(clips_per_stream):
                clip_seed = int(rng.integers(0, 2**63))
                volume = sample_clip(frames, params.clip_length, clip_seed)
                clips.append(CsiClip(spec.label, volume.astype(np.float32)))
                streams.append(stream32)
                labels_of_class.setdefault(spec.label, []).append(len(clips) - 1)

    train_flags = np.zeros(len(clips), dtype=bool)
    for label in sorted(labels_of_class):
        idx = np.array(labels_of_class[label])
        rng.shuffle(idx)
        n_train = (len(idx) + 1) // 2
        train_flags[idx[:n_train]] = True

    stats = compute_stats([clips[i].volume for i in np.flatnonzero(train_flags)])
    class_names = [s.name for s in sorted(specs, key=lambda s: s.label)]
    return Dataset(clips, class_names, stats, train_flags, streams)


def save_dataset(dataset: Dataset, path) -> None:
    """Persist to a directory: tensors.bin (clips + streams) and manifest.json."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tensors: dict[str, np.ndarray] = {}
    for i, clip in enumerate(dataset.clips):
        tensors[f"clip_{i:05d}"] = clip.volume
    seen: dict[int, str] = {}
    stream_ref = []
    for i, stream in enumerate(dataset.streams):
        key = id(stream)
        if key not in seen:
            seen[key] = f"stream_{i:05d}"
            tensors[seen[key]] = stream.samples
        stream_ref.append(seen[key])
    save_tensors(path / "tensors.bin", tensors)
    manifest = {
        "format_version": FORMAT_VERSION,
        "class_names": dataset.class_names,
        "labels": [c.label for c in dataset.clips],
        "train_flags": dataset.train_flags.astype(int).tolist(),
        "stats": {"mean": dataset.stats.mean, "std": dataset.stats.std},
        "sample_rate": dataset.streams[0].sample_rate if dataset.streams else None,
        "stream_ref": stream_ref,
    }
    tmp = path / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.rename(path / "manifest.json")


def load_dataset(path) -> Dataset:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"{path}: missing manifest.json")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{manifest_path}: unsupported format_version")
    tensors = load_tensors(path / "tensors.bin")
    labels = manifest["labels"]
    clips = []
    for i, label in enumerate(labels):
        key = f"clip_{i:05d}"
        if key not in tensors:
            raise FormatError(f"{path}: tensor {key} missing from tensors.bin")
        clips.append(CsiClip(int(label), tensors[key]))
    streams = []
    if manifest.get("stream_ref"):
        sample_rate = float(manifest["sample_rate"])
        cache: dict[str, CsiStream] = {}
        for i, ref in enumerate(manifest["stream_ref"]):
            if ref not in cache:
                if ref not in tensors:
                    raise FormatError(f"{path}: tensor {ref} missing from tensors.bin")
                cache[ref] = CsiStream(int(labels[i]), tensors[ref], sample_rate)
            streams.append(cache[ref])
    stats = NormalizationStats(
        mean=float(manifest["stats"]["mean"]), std=float(manifest["stats"]["std"])
    )
    return Dataset(
        clips,
        list(manifest["class_names"]),
        stats,
        np.array(manifest["train_flags"], dtype=bool),
        streams,
    )
