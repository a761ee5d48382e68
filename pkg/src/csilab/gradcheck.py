"""Finite-difference verification of every hand-written adjoint.

Each check compares an analytic gradient against central differences on a
small double-precision instance and reports the worst relative error. The
suite is the backing for the ``gradcheck`` CLI subcommand and the test
suite; ``corrupt`` lets callers poison one entry's analytic gradient to
prove the checker actually rejects wrong adjoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .model import C3DConfig, build_model

TOLERANCE = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _poison(grads, corrupted: bool):
    if not corrupted:
        return grads
    return [g + 0.05 * (np.abs(g) + 1.0) for g in grads]


def _check_many(f_builders, max_coords=80) -> float:
    """f_builders: list of (point, analytic_grad, scalar_fn_of_point)."""
    worst = 0.0
    for point, grad, fn in f_builders:
        err = nn.grad_check(fn, point, grad, max_coords=max_coords)
        worst = max(worst, err)
    return worst


def _conv_case(stride, padding, rng, corrupted):
    x = rng.standard_normal((2, 4, 5, 5))
    k = rng.standard_normal((3, 2, 3, 3, 3)) * 0.5
    b = rng.standard_normal(3) * 0.1
    r = rng.standard_normal(nn.conv3d(x, k, b, stride, padding).shape)

    def loss(vol, ker, bias):
        return float((nn.conv3d(vol, ker, bias, stride, padding) * r).sum())

    gx, gk, gb = _poison(nn.conv3d_backward(r, x, k, stride, padding), corrupted)
    return [
        (x, gx, lambda v: loss(v, k, b)),
        (k, gk, lambda v: loss(x, v, b)),
        (b, gb, lambda v: loss(x, k, v)),
    ]


def _maxpool_case(size, rng, corrupted):
    x = rng.permutation(2 * 4 * 6 * 6).astype(np.float64).reshape(2, 4, 6, 6)
    x += rng.uniform(0, 0.3, x.shape)  # distinct values, no tie crossings
    out, arg = nn.maxpool3d(x, size)
    r = rng.standard_normal(out.shape)

    def loss(v):
        return float((nn.maxpool3d(v, size)[0] * r).sum())

    (gx,) = _poison([nn.maxpool3d_backward(r, arg, x.shape, size)], corrupted)
    return [(x, gx, loss)]


def _linear_case(rng, corrupted):
    x = rng.standard_normal(7)
    w = rng.standard_normal((5, 7))
    b = rng.standard_normal(5)
    r = rng.standard_normal(5)
    gx, gw, gb = _poison(
        list(nn.linear_backward(r, x, w)), corrupted
    )
    return [
        (x, gx, lambda v: float(nn.linear(v, w, b) @ r)),
        (w, gw, lambda v: float(nn.linear(x, v, b) @ r)),
        (b, gb, lambda v: float(nn.linear(x, w, v) @ r)),
    ]


def _relu_case(rng, corrupted):
    x = rng.standard_normal(40) + 0.05  # keep clear of the kink
    r = rng.standard_normal(40)
    (gx,) = _poison([nn.relu_backward(r, x)], corrupted)
    return [(x, gx, lambda v: float(nn.relu(v) @ r))]


def _softmax_xent_case(rng, corrupted):
    logits = rng.standard_normal(6)
    label = 2
    _, probs = nn.softmax_cross_entropy(logits, label)
    g = probs.copy()
    g[label] -= 1.0
    (g,) = _poison([g], corrupted)
    return [(logits, g, lambda v: nn.softmax_cross_entropy(v, label)[0])]


def _tiny_config(spatial: bool, temporal: bool) -> C3DConfig:
    return C3DConfig(
        n_classes=3,
        conv_blocks=((4, (1, 2, 2)), (8, (2, 2, 2))),
        fc_units=8,
        use_spatial_attention=spatial,
        use_temporal_attention=temporal,
        input_shape=(4, 6, 8),
    )


def _model_cases(spatial, temporal, rng, corrupted, param_filter=None):
    model = build_model(_tiny_config(spatial, temporal), seed=7, dtype=np.float64)
    # nudge zero-initialized params (attention maps, classifier head) off zero;
    # otherwise logits are identically zero and every upstream gradient check
    # passes vacuously with 0 == 0
    for name in ("sattn_w", "sattn_b", "tattn_u", "tattn_c", "fc2_w", "fc2_b"):
        if name in model.params:
            model.params[name] += rng.standard_normal(model.params[name].shape) * 0.2
    volume = rng.standard_normal(model.config.input_shape)
    label = 1
    _, _, grads = model.loss_and_grads(volume, label)
    cases = []
    for name in model.params:
        if param_filter and not param_filter(name):
            continue
        grad = _poison([grads[name]], corrupted)[0]

        def fn(v, _name=name):
            old = model.params[_name]
            model.params[_name] = v.reshape(old.shape)
            try:
                loss, _ = nn.softmax_cross_entropy(model.forward(volume), label)
            finally:
                model.params[_name] = old
            return loss

        cases.append((model.params[name].copy(), grad, fn))
    return cases


def run_suite(scale: str = "default", corrupt: str | None = None) -> list[CheckResult]:
    """Run every adjoint check once; returns one result per layer/stack."""
    rng = np.random.default_rng(1234)
    max_coords = 40 if scale == "tiny" else 80
    entries = [
        ("linear", lambda c: _linear_case(rng, c)),
        ("relu", lambda c: _relu_case(rng, c)),
        ("softmax_cross_entropy", lambda c: _softmax_xent_case(rng, c)),
        ("conv3d", lambda c: _conv_case((1, 1, 1), (1, 1, 1), rng, c)),
        ("conv3d_strided", lambda c: _conv_case((2, 1, 2), (1, 0, 1), rng, c)),
        ("maxpool3d", lambda c: _maxpool_case((2, 2, 2), rng, c)),
        ("maxpool3d_flat", lambda c: _maxpool_case((1, 2, 2), rng, c)),
        (
            "spatial_attention",
            lambda c: _model_cases(True, False, rng, c, lambda n: n.startswith("sattn")),
        ),
        (
            "temporal_attention",
            lambda c: _model_cases(False, True, rng, c, lambda n: n.startswith("tattn")),
        ),
        ("network_plain", lambda c: _model_cases(False, False, rng, c)),
        ("network_attention", lambda c: _model_cases(True, True, rng, c)),
    ]
    results = []
    for name, builder in entries:
        cases = builder(corrupt == name)
        results.append(CheckResult(name, _check_many(cases, max_coords=max_coords)))
    return results
