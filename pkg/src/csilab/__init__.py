"""Desk-scale laboratory for WiFi-CSI human activity recognition.

Synthesizes CSI streams from a multipath Doppler channel model, windows them
into video-volume clips, and classifies them with a from-scratch 3-D
convolutional network (optionally with soft attention), benchmarked against
a temporal-mean PCA + k-NN baseline.
"""

__version__ = "0.1.0"

from .channel import (
    ActivitySpec,
    ChannelConfig,
    CsiStream,
    PathComponent,
    SpeedProfile,
    StaticPath,
    cfr,
    cfr_power,
    default_activity_specs,
    default_channel_config,
    doppler_frequency,
    dynamic_cfr,
    generate_activity_stream,
    path_length,
    static_cfr,
)
from .dataset import (
    CsiClip,
    Dataset,
    WindowingParams,
    build_dataset,
    load_dataset,
    normalize,
    sample_clip,
    save_dataset,
    segment_windows,
)
from .model import C3DConfig, C3DModel, TrainConfig, TrainHistory, build_model, predict, train
from .report import ConfusionMatrix, class_metrics, confusion_matrix, overall_accuracy
