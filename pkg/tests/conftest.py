import numpy as np
import pytest

from csilab.channel import default_activity_specs, default_channel_config
from csilab.dataset import WindowingParams, build_dataset


@pytest.fixture(scope="session")
def tiny_channel_config():
    cfg = default_channel_config(noise_std=0.01)
    return type(cfg)(
        carrier_frequency=cfg.carrier_frequency,
        freq_offset=cfg.freq_offset,
        static_paths=cfg.static_paths,
        noise_std=0.01,
        sample_rate=100.0,
        n_channels=8,
    )


@pytest.fixture(scope="session")
def tiny_specs():
    return default_activity_specs(duration=1.0)[:3]


@pytest.fixture(scope="session")
def tiny_windowing():
    return WindowingParams(window_width=20, stride=4, clip_length=4)


@pytest.fixture(scope="session")
def tiny_dataset(tiny_specs, tiny_windowing, tiny_channel_config):
    return build_dataset(tiny_specs, 6, tiny_windowing, tiny_channel_config, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
