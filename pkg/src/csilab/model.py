"""C3D classifier over CSI clip volumes, with optional soft attention.

The network is a stack of (conv3x3x3 -> relu -> maxpool) blocks followed by
two fully connected layers and a softmax head. Spatial attention reweights
input-frame pixels before the first block; temporal attention collapses the
frame axis before the classifier head instead of a plain flatten. Both
attention maps are rescaled so that zero attention parameters reproduce the
unattended network exactly, which makes ablations clean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .dataset import Dataset, normalize
from .errors import ConfigError, ShapeError, TrainingError
from .tensorio import load_tensors, save_tensors

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class C3DConfig:
    n_classes: int
    conv_blocks: tuple = ((8, (1, 2, 2)), (16, (2, 2, 2)), (32, (2, 2, 2)))
    fc_units: int = 128
    use_spatial_attention: bool = False
    use_temporal_attention: bool = False
    input_shape: tuple = (16, 90, 100)  # (clip_length, channel_rows, window_width)

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")
        if not self.conv_blocks:
            raise ConfigError("need at least one conv block")
        if self.fc_units < 1:
            raise ConfigError("fc_units must be >= 1")

    def feature_dims(self):
        """(channels, L, X, Y) after each block; raises if a dim collapses."""
        dims = (1, *self.input_shape)
        out = []
        for ch, pool in self.conv_blocks:
            spatial = dims[1:]  # conv is 3x3x3, stride 1, padding 1: shape-preserving
            pooled = tuple(d // p for d, p in zip(spatial, pool))
            if any(d < 1 for d in pooled):
                raise ConfigError(
                    f"pool {pool} collapses feature volume {spatial} to {pooled}"
                )
            dims = (ch, *pooled)
            out.append(dims)
        return out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    learning_rate: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    seed: int = 0
    lr_decay_factor: float = 0.1
    decay_epochs: tuple = ()  # empty: decay once at 60% of the run
    clip_norm: float = 5.0  # global gradient-norm ceiling; 0 disables

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must be in [0, 1)")
        if self.clip_norm < 0:
            raise ConfigError("clip_norm must be >= 0")

    def decay_schedule(self):
        if self.decay_epochs:
            return tuple(self.decay_epochs)
        return (int(self.epochs * 0.6),) if self.epochs > 1 else ()


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)


def spatial_attention(frame, weight, bias):
    """Reweight the pixels of one frame by a learned softmax map.

    Scores are an elementwise affine map of the flattened frame; the weights
    softmax to 1 and the output is weight * pixel * pixel_count, so all-equal
    weights (zero parameters) return the frame unchanged.
    """
    p = frame.size
    if weight.shape != (p,) or bias.shape != (p,):
        raise ShapeError("attention params must match the flattened frame")
    x = frame.ravel()
    a = nn.softmax(weight * x + bias)
    return (a * x * p).reshape(frame.shape)


def temporal_attention(frames, weight, bias):
    """Softmax-weighted sum over the frame axis.

    frames is (T, feat); per-frame scalar scores come from an affine map of
    the features. Zero parameters give uniform weights, i.e. the temporal
    mean scaled back by T is not applied here: output is the convex
    combination sum_t a_t * frames[t].
    """
    if frames.ndim != 2 or weight.shape != (frames.shape[1],):
        raise ShapeError("frames must be (T, feat) with a feat-sized weight")
    a = nn.softmax(frames @ weight + bias)
    return a @ frames


class C3DModel:
    """Parameter container plus forward/backward for the clip classifier."""

    def __init__(self, config: C3DConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params

    @property
    def dtype(self):
        return self.params["fc1_w"].dtype

    def astype(self, dtype):
        return C3DModel(self.config, {k: v.astype(dtype) for k, v in self.params.items()})

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    # -- forward ---------------------------------------------------------

    def forward(self, volume, cache=None):
        cfg = self.config
        if volume.shape != cfg.input_shape:
            raise ShapeError(f"clip shape {volume.shape} != {cfg.input_shape}")
        volume = np.asarray(volume, dtype=self.dtype)
        c = {} if cache is None else cache

        if cfg.use_spatial_attention:
            t = volume.shape[0]
            p = volume[0].size
            x_rows = volume.reshape(t, p)
            attn = np.empty_like(x_rows)
            for i in range(t):
                attn[i] = nn.softmax(self.params["sattn_w"] * x_rows[i] + self.params["sattn_b"])
            weighted = attn * x_rows * p
            c["sattn"] = (x_rows, attn)
            x = weighted.reshape(1, *volume.shape)
        else:
            x = volume[None]

        c["blocks"] = []
        for i, (_, pool) in enumerate(cfg.conv_blocks):
            k, b = self.params[f"conv{i}_w"], self.params[f"conv{i}_b"]
            z = nn.conv3d(x, k, b, stride=1, padding=1)
            r = nn.relu(z)
            pooled, arg = nn.maxpool3d(r, pool)
            c["blocks"].append({"x": x, "z": z, "r_shape": r.shape, "arg": arg, "pool": pool})
            x = pooled

        c["feat"] = x
        if cfg.use_temporal_attention:
            ch, lo, xo, yo = x.shape
            frames = x.transpose(1, 0, 2, 3).reshape(lo, ch * xo * yo)
            scores = frames @ self.params["tattn_u"] + self.params["tattn_c"][0]
            a = nn.softmax(scores)
            h = a @ frames
            c["tattn"] = (frames, a)
        else:
            h = x.ravel()
        c["h"] = h
        z1 = nn.linear(h, self.params["fc1_w"], self.params["fc1_b"])
        h1 = nn.relu(z1)
        c["z1"], c["h1"] = z1, h1
        logits = nn.linear(h1, self.params["fc2_w"], self.params["fc2_b"])
        return logits

    # -- backward --------------------------------------------------------

    def loss_and_grads(self, volume, label):
        cfg = self.config
        cache = {}
        logits = self.forward(volume, cache=cache)
        loss, probs = nn.softmax_cross_entropy(logits, label)
        grads = {}
        g = probs.copy()
        g[label] -= 1.0

        gh1, grads["fc2_w"], grads["fc2_b"] = nn.linear_backward(
            g, cache["h1"], self.params["fc2_w"]
        )
        gz1 = nn.relu_backward(gh1, cache["z1"])
        gh, grads["fc1_w"], grads["fc1_b"] = nn.linear_backward(
            gz1, cache["h"], self.params["fc1_w"]
        )

        feat = cache["feat"]
        if cfg.use_temporal_attention:
            frames, a = cache["tattn"]
            u = self.params["tattn_u"]
            m = frames @ gh  # dL/da before softmax jacobian
            ds = a * (m - float(a @ m))
            gframes = a[:, None] * gh[None, :] + ds[:, None] * u[None, :]
            grads["tattn_u"] = frames.T @ ds
            grads["tattn_c"] = np.array([ds.sum()], dtype=self.dtype)
            ch, lo, xo, yo = feat.shape
            gx = gframes.reshape(lo, ch, xo, yo).transpose(1, 0, 2, 3)
        else:
            gx = gh.reshape(feat.shape)

        for i in range(len(cfg.conv_blocks) - 1, -1, -1):
            blk = cache["blocks"][i]
            gr = nn.maxpool3d_backward(gx, blk["arg"], blk["r_shape"], blk["pool"])
            gz = nn.relu_backward(gr, blk["z"])
            gx, grads[f"conv{i}_w"], grads[f"conv{i}_b"] = nn.conv3d_backward(
                gz,
                blk["x"],
                self.params[f"conv{i}_w"],
                stride=1,
                padding=1,
                need_input_grad=(i > 0 or cfg.use_spatial_attention),
            )

        if cfg.use_spatial_attention:
            x_rows, attn = cache["sattn"]
            t, p = x_rows.shape
            w = self.params["sattn_w"]
            grows = gx.reshape(t, p)
            m = grows * x_rows
            s = (m * attn).sum(axis=1, keepdims=True)
            grads["sattn_w"] = (p * x_rows * attn * (m - s)).sum(axis=0)
            grads["sattn_b"] = (p * attn * (m - s)).sum(axis=0)
            # gradient to the input frames is not needed (input layer)
        return loss, probs, grads


def build_model(config: C3DConfig, seed: int, dtype=np.float64) -> C3DModel:
    """Deterministic initialization from the seed.

    Hidden layers draw uniform +-sqrt(6/fan_in); biases start at zero. The
    final classifier layer starts at zero so a fresh model emits uniform
    probabilities (first-batch loss exactly ln(n_classes)) regardless of the
    feature scale. Attention parameters start at zero, which makes attention
    an exact identity map at initialization.
    """
    rng = np.random.default_rng(seed)
    dims = config.feature_dims()
    params: dict[str, np.ndarray] = {}

    if config.use_spatial_attention:
        p = int(np.prod(config.input_shape[1:]))
        params["sattn_w"] = np.zeros(p)
        params["sattn_b"] = np.zeros(p)

    in_ch = 1
    for i, (out_ch, _) in enumerate(config.conv_blocks):
        fan_in = in_ch * 27
        lim = np.sqrt(6.0 / fan_in)
        params[f"conv{i}_w"] = rng.uniform(-lim, lim, size=(out_ch, in_ch, 3, 3, 3))
        params[f"conv{i}_b"] = np.zeros(out_ch)
        in_ch = out_ch

    ch, lo, xo, yo = dims[-1]
    if config.use_temporal_attention:
        feat_dim = ch * xo * yo
        params["tattn_u"] = np.zeros(feat_dim)
        params["tattn_c"] = np.zeros(1)
    else:
        feat_dim = ch * lo * xo * yo
    lim = np.sqrt(6.0 / feat_dim)
    params["fc1_w"] = rng.uniform(-lim, lim, size=(config.fc_units, feat_dim))
    params["fc1_b"] = np.zeros(config.fc_units)
    params["fc2_w"] = np.zeros((config.n_classes, config.fc_units))
    params["fc2_b"] = np.zeros(config.n_classes)

    params = {k: v.astype(dtype) for k, v in params.items()}
    return C3DModel(config, params)


def predict(model: C3DModel, volume):
    """(label, probability vector) for one normalized clip volume."""
    logits = model.forward(volume)
    probs = nn.softmax(logits)
    return int(np.argmax(probs)), probs


def train(model: C3DModel, dataset: Dataset, cfg: TrainConfig) -> TrainHistory:
    """Minibatch SGD with momentum on softmax cross-entropy.

    Deterministic in (model init, dataset, cfg.seed): fixed shuffle order and
    ordered in-batch gradient accumulation. Raises TrainingError on
    non-finite loss.
    """
    dtype = model.dtype
    train_idx = dataset.indices(True)
    test_idx = dataset.indices(False)
    if len(train_idx) == 0:
        raise ConfigError("dataset has no training split")
    stats = dataset.stats
    xs = {i: normalize(dataset.clips[i].volume, stats).astype(dtype) for i in range(len(dataset.clips))}
    ys = {i: dataset.clips[i].label for i in range(len(dataset.clips))}

    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.learning_rate
    decay_at = cfg.decay_schedule()
    history = TrainHistory()

    for epoch in range(cfg.epochs):
        if epoch in decay_at:
            lr *= cfg.lr_decay_factor
        order = train_idx[rng.permutation(len(train_idx))]
        epoch_loss = 0.0
        correct = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grads_sum = None
            for i in batch:
                loss, probs, grads = model.loss_and_grads(xs[i], ys[i])
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}", epoch)
                epoch_loss += loss
                correct += int(np.argmax(probs) == ys[i])
                if grads_sum is None:
                    grads_sum = grads
                else:
                    for k in grads_sum:
                        grads_sum[k] += grads[k]
            scale = 1.0 / len(batch)
            if cfg.clip_norm > 0:
                norm = np.sqrt(
                    sum(float((g * g).sum()) for g in grads_sum.values())
                ) * scale
                if norm > cfg.clip_norm:
                    scale *= cfg.clip_norm / norm
            for k, p in model.params.items():
                g = grads_sum[k] * scale + cfg.weight_decay * p
                velocity[k] = cfg.momentum * velocity[k] - lr * g
                p += velocity[k]
        history.train_loss.append(epoch_loss / len(order))
        history.train_accuracy.append(correct / len(order))
        test_correct = sum(
            int(np.argmax(model.forward(xs[i])) == ys[i]) for i in test_idx
        )
        history.test_accuracy.append(test_correct / len(test_idx) if len(test_idx) else 0.0)
    return history


def evaluate(model: C3DModel, dataset: Dataset, train_split: bool = False):
    """(true_labels, predicted_labels) over one split, in dataset order."""
    idx = dataset.indices(train_split)
    truths, preds = [], []
    for i in idx:
        x = normalize(dataset.clips[i].volume, dataset.stats).astype(model.dtype)
        label, _ = predict(model, x)
        truths.append(dataset.clips[i].label)
        preds.append(label)
    return truths, preds


# -- checkpoints ---------------------------------------------------------


def save_checkpoint(model: C3DModel, path, epoch: int | None = None) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    save_tensors(path / "params.bin", model.params)
    manifest = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "epoch": epoch,
        "config": {
            "n_classes": model.config.n_classes,
            "conv_blocks": [[ch, list(pool)] for ch, pool in model.config.conv_blocks],
            "fc_units": model.config.fc_units,
            "use_spatial_attention": model.config.use_spatial_attention,
            "use_temporal_attention": model.config.use_temporal_attention,
            "input_shape": list(model.config.input_shape),
        },
    }
    tmp = path / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.rename(path / "manifest.json")


def load_checkpoint(path) -> C3DModel:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    raw = manifest["config"]
    config = C3DConfig(
        n_classes=raw["n_classes"],
        conv_blocks=tuple((ch, tuple(pool)) for ch, pool in raw["conv_blocks"]),
        fc_units=raw["fc_units"],
        use_spatial_attention=raw["use_spatial_attention"],
        use_temporal_attention=raw["use_temporal_attention"],
        input_shape=tuple(raw["input_shape"]),
    )
    params = {k: v.astype(np.float32) for k, v in load_tensors(path / "params.bin").items()}
    return C3DModel(config, params)
