"""Built-in stride-2 convolutional scorer network.

Architecture (spatially agnostic; weights carry no size dependence):

    input HxWx3, channels scaled to [0,1]
    -> conv 3x3, stride 2, zero-pad 1, 8 filters, ReLU
    -> conv 3x3, stride 2, zero-pad 1, 8 filters, ReLU
    -> global average pool (8 values)
    -> dense(8) + bias -> logistic sigmoid -> score

All convolution and pooling arithmetic is float32 with a fixed
accumulation order (row-major positions, filter-major weights), so
repeated evaluations are bit-identical on one platform; the final
logistic runs in float64.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FormatError, ParameterError
from .image import Image
from .rng import SplitMix64

__all__ = [
    "NetworkWeights",
    "builtin_forward",
    "forward_activations",
    "load_weights",
    "save_weights",
    "spotnet_weights",
    "random_weights",
]

_SHAPES = {
    "conv1_filters": (8, 3, 3, 3),
    "conv1_bias": (8,),
    "conv2_filters": (8, 3, 3, 8),
    "conv2_bias": (8,),
    "dense_weights": (8,),
    "dense_bias": (),
}


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    """Weights for the two-conv-layer scorer; all arrays float32."""

    conv1_filters: np.ndarray
    conv1_bias: np.ndarray
    conv2_filters: np.ndarray
    conv2_bias: np.ndarray
    dense_weights: np.ndarray
    dense_bias: float

    def __post_init__(self):
        for name, shape in _SHAPES.items():
            if name == "dense_bias":
                continue
            arr = np.asarray(getattr(self, name), dtype=np.float32)
            if arr.shape != shape:
                raise ParameterError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} contains non-finite values")
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        bias = float(self.dense_bias)
        if not math.isfinite(bias):
            raise ParameterError("dense_bias must be finite")
        object.__setattr__(self, "dense_bias", bias)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkWeights):
            return NotImplemented
        return (
            np.array_equal(self.conv1_filters, other.conv1_filters)
            and np.array_equal(self.conv1_bias, other.conv1_bias)
            and np.array_equal(self.conv2_filters, other.conv2_filters)
            and np.array_equal(self.conv2_bias, other.conv2_bias)
            and np.array_equal(self.dense_weights, other.dense_weights)
            and self.dense_bias == other.dense_bias
        )


# Patch-gather index cache, keyed by (height, width, channels); conv shapes
# repeat heavily inside batch scoring loops.
_PATCH_INDEX_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _patch_indices(height: int, width: int, channels: int) -> np.ndarray:
    key = (height, width, channels)
    cached = _PATCH_INDEX_CACHE.get(key)
    if cached is not None:
        return cached
    out_h = (height + 1) // 2
    out_w = (width + 1) // 2
    pw = width + 2
    oy = np.arange(out_h) * 2
    ox = np.arange(out_w) * 2
    ky = np.arange(3)
    kx = np.arange(3)
    rows = oy[:, None, None, None] + ky[None, None, :, None]
    cols = ox[None, :, None, None] + kx[None, None, None, :]
    cells = (rows * pw + cols).reshape(out_h * out_w, 9)
    # widen to flat element indices so one 1-D gather yields (P, 9*C) patches
    idx = (cells[:, :, None] * channels + np.arange(channels)).reshape(
        out_h * out_w, 9 * channels
    )
    idx.flags.writeable = False
    _PATCH_INDEX_CACHE[key] = idx
    return idx


def _conv_stride2(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3/stride-2/pad-1 convolution + ReLU on an HxWxC float32 tensor."""
    h, w, c = x.shape
    padded = np.zeros((h + 2, w + 2, c), dtype=np.float32)
    padded[1 : h + 1, 1 : w + 1] = x
    patches = padded.ravel()[_patch_indices(h, w, c)]  # (P, 9*C), (ky, kx, c) order
    kernel = filters.reshape(filters.shape[0], -1)
    out = patches @ kernel.T
    out += bias
    np.maximum(out, 0.0, out=out)
    return out.reshape((h + 1) // 2, (w + 1) // 2, filters.shape[0])


def forward_activations(weights: NetworkWeights, image: Image):
    """Run the full pipeline, returning (conv1, conv2, pooled, score).

    Exposed for inspection and tests; :func:`builtin_forward` returns the
    score alone.
    """
    x = image.pixels.astype(np.float32) / np.float32(255.0)
    a1 = _conv_stride2(x, weights.conv1_filters, weights.conv1_bias)
    a2 = _conv_stride2(a1, weights.conv2_filters, weights.conv2_bias)
    pooled = a2.reshape(-1, a2.shape[2]).mean(axis=0)
    z = float(pooled @ weights.dense_weights + np.float32(weights.dense_bias))
    score = 1.0 / (1.0 + math.exp(-z))
    return a1, a2, pooled, score


def builtin_forward(weights: NetworkWeights, image: Image) -> float:
    """Score one image with the built-in network; result in [0, 1]."""
    return forward_activations(weights, image)[3]


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

# "spotnet" generation constants. The preset is a handcrafted detector for
# a dark blob centered on a light background, calibrated against the
# reference stimulus produced by synthetic.spot_image's defaults:
# spot value 40, background 230, radius 6, even-aligned center.
_SURROUND_CENTER = -2.0  # filter 0: center-surround reference kernel
_SURROUND_RING = 0.25
_DARK_GAIN = 2.0  # filter 1 fires DARK_GAIN * (DARK_PIVOT - luminance)
_DARK_PIVOT = 0.5
_SPOT_LUMINANCE = 40.0 / 255.0  # reference spot darkness
_DARK_SUM_THRESHOLD = 8.25  # of 9 aggregated darkness responses
_AGG_GAIN = 16.0  # conv2 aggregation channel gain
_BACKGROUND_LOGIT = -1.5  # uniform background maps to sigmoid(-1.5)
_SPOT_LOGIT = 2.5  # blob-fill evidence spans BACKGROUND_LOGIT -> SPOT_LOGIT
_EDGE_LOGIT = 0.5  # reference blob's boundary evidence, in logits
_REFERENCE_POOL = 256.0  # pool positions at the 64x64 reference size


def spotnet_weights() -> NetworkWeights:
    """Handcrafted dark-spot detector preset.

    conv1 filter 0 is a center-surround kernel (negative center, positive
    ring, each channel scaled 1/3); filter 1 measures per-pixel darkness
    against a mid-gray pivot. conv2 filter 0 sums a 3x3 block of darkness
    responses and subtracts a threshold just under the all-dark level, so
    it fires only where an extended dark region fills the block; conv2
    filter 1 aggregates the center-surround channel, scoring the blob's
    boundary. The dense layer maps blob-fill evidence onto the main logit
    span and adds the boundary evidence with a small weight (measured on
    the reference stimulus itself, so search landscapes have usable
    texture around a blob). Every constant above feeds this construction;
    none of the resulting values are hand-typed.
    """
    conv1 = np.zeros((8, 3, 3, 3), dtype=np.float32)
    ring = np.full((3, 3), _SURROUND_RING, dtype=np.float32)
    ring[1, 1] = _SURROUND_CENTER
    for c in range(3):
        conv1[0, :, :, c] = ring / 3.0
    for c in range(3):
        conv1[1, 1, 1, c] = -_DARK_GAIN / 3.0
    conv1_bias = np.zeros(8, dtype=np.float32)
    conv1_bias[1] = _DARK_GAIN * _DARK_PIVOT

    spot_response = _DARK_GAIN * (_DARK_PIVOT - _SPOT_LUMINANCE)
    threshold = _DARK_SUM_THRESHOLD * spot_response

    conv2 = np.zeros((8, 3, 3, 8), dtype=np.float32)
    conv2[0, :, :, 1] = _AGG_GAIN
    conv2[1, :, :, 0] = _AGG_GAIN
    conv2_bias = np.zeros(8, dtype=np.float32)
    conv2_bias[0] = -_AGG_GAIN * threshold

    firing_margin = (9.0 - _DARK_SUM_THRESHOLD) * spot_response
    dense = np.zeros(8, dtype=np.float32)
    dense[0] = (
        (_SPOT_LOGIT - _BACKGROUND_LOGIT)
        * _REFERENCE_POOL
        / (_AGG_GAIN * firing_margin)
    )

    # calibrate the boundary weight against the reference stimulus: the
    # blob's pooled edge evidence maps to exactly _EDGE_LOGIT
    from .synthetic import spot_image

    probe = NetworkWeights(
        conv1_filters=conv1,
        conv1_bias=conv1_bias,
        conv2_filters=conv2,
        conv2_bias=conv2_bias,
        dense_weights=np.zeros(8, dtype=np.float32),
        dense_bias=0.0,
    )
    pooled_edge = float(forward_activations(probe, spot_image())[2][1])
    dense[1] = _EDGE_LOGIT / pooled_edge

    return NetworkWeights(
        conv1_filters=conv1,
        conv1_bias=conv1_bias,
        conv2_filters=conv2,
        conv2_bias=conv2_bias,
        dense_weights=dense,
        dense_bias=_BACKGROUND_LOGIT,
    )


def random_weights(seed: int) -> NetworkWeights:
    """Seeded random weights, every value uniform in [-0.1, 0.1).

    One SplitMix64 output per value, consumed in field order:
    conv1_filters (C-order: filter, ky, kx, channel), conv1_bias,
    conv2_filters, conv2_bias, dense_weights, dense_bias.
    """
    rng = SplitMix64(seed)

    def draw(count: int) -> np.ndarray:
        vals = [-0.1 + 0.2 * rng.uniform() for _ in range(count)]
        return np.asarray(vals, dtype=np.float32)

    return NetworkWeights(
        conv1_filters=draw(8 * 3 * 3 * 3).reshape(8, 3, 3, 3),
        conv1_bias=draw(8),
        conv2_filters=draw(8 * 3 * 3 * 8).reshape(8, 3, 3, 8),
        conv2_bias=draw(8),
        dense_weights=draw(8),
        dense_bias=float(draw(1)[0]),
    )


# ---------------------------------------------------------------------------
# Weights file I/O
# ---------------------------------------------------------------------------


def save_weights(weights: NetworkWeights, path) -> None:
    """Write weights as JSON with named arrays; round-trips bit-exactly."""
    doc = {
        "meta": {
            "format": "pixelprobe-weights",
            "version": 1,
            "shapes": {k: list(v) for k, v in _SHAPES.items()},
        },
        "conv1_filters": weights.conv1_filters.tolist(),
        "conv1_bias": weights.conv1_bias.tolist(),
        "conv2_filters": weights.conv2_filters.tolist(),
        "conv2_bias": weights.conv2_bias.tolist(),
        "dense_weights": weights.dense_weights.tolist(),
        "dense_bias": weights.dense_bias,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def _weights_from_doc(doc: dict, origin: str) -> NetworkWeights:
    meta = doc.get("meta", {})
    if meta.get("format") != "pixelprobe-weights":
        raise FormatError(f"{origin}: not a pixelprobe weights file")
    if meta.get("version") != 1:
        raise FormatError(f"{origin}: unsupported weights version {meta.get('version')!r}")
    try:
        return NetworkWeights(
            conv1_filters=np.asarray(doc["conv1_filters"], dtype=np.float32),
            conv1_bias=np.asarray(doc["conv1_bias"], dtype=np.float32),
            conv2_filters=np.asarray(doc["conv2_filters"], dtype=np.float32),
            conv2_bias=np.asarray(doc["conv2_bias"], dtype=np.float32),
            dense_weights=np.asarray(doc["dense_weights"], dtype=np.float32),
            dense_bias=float(doc["dense_bias"]),
        )
    except KeyError as e:
        raise FormatError(f"{origin}: missing weights field {e.args[0]!r}") from e
    except (TypeError, ValueError, ParameterError) as e:
        raise FormatError(f"{origin}: malformed weights: {e}") from e


def load_weights(source: str) -> NetworkWeights:
    """Resolve a preset name ("spotnet", "random:<seed>") or a weights file."""
    if source == "spotnet":
        return spotnet_weights()
    if source.startswith("random:"):
        try:
            seed = int(source.split(":", 1)[1], 0)
        except ValueError as e:
            raise ConfigurationError(f"bad seed in preset {source!r}") from e
        return random_weights(seed)
    if os.path.exists(source):
        try:
            with open(source, "r", encoding="utf-8") as f:
                doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"{source}: not valid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise FormatError(f"{source}: not a pixelprobe weights file")
        return _weights_from_doc(doc, str(source))
    raise ConfigurationError(
        f"{source!r} is neither a known preset (spotnet, random:<seed>) "
        "nor an existing weights file"
    )
