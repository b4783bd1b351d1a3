"""From-scratch inference engine for the U-net regularization network.

Tensors are float32 numpy arrays shaped (channels, height, width). The
network: two encoder levels (16, 32 filters), a 64-filter bottleneck, a
mirrored decoder with skip concatenations, 3x3 "same" convolutions, 2x2
max-pooling, 2x2 stride-2 up-convolutions, ReLU hidden activations and a
linear 1x1 output head mapping back to 2 channels (re, im).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensorio import (MissingTensorError, TensorShapeError, read_tensors,
                       write_tensors)

# layer name -> kernel shape (out_ch, in_ch, kh, kw); bias shape is (out_ch,)
LAYER_SPECS = {
    "enc1.conv1": (16, 2, 3, 3),
    "enc1.conv2": (16, 16, 3, 3),
    "enc2.conv1": (32, 16, 3, 3),
    "enc2.conv2": (32, 32, 3, 3),
    "bott.conv1": (64, 32, 3, 3),
    "bott.conv2": (64, 64, 3, 3),
    "up1.deconv": (32, 64, 2, 2),
    "dec1.conv1": (32, 64, 3, 3),
    "dec1.conv2": (32, 32, 3, 3),
    "up2.deconv": (16, 32, 2, 2),
    "dec2.conv1": (16, 32, 3, 3),
    "dec2.conv2": (16, 16, 3, 3),
    "out.conv": (2, 16, 1, 1),
}


def conv2d(x, kernel, bias):
    """Stride-1 cross-correlation with "same" zero padding.

    x: (in_ch, H, W); kernel: (out_ch, in_ch, kh, kw) with odd kh = kw;
    bias: (out_ch,). Returns (out_ch, H, W).
    """
    kernel = np.asarray(kernel, dtype=np.float32)
    out_ch, in_ch, kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("conv2d kernel size must be odd for same padding")
    if x.shape[0] != in_ch:
        raise ValueError(f"input has {x.shape[0]} channels, kernel expects {in_ch}")
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x.astype(np.float32), ((0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))  # (in_ch, H, W, kh, kw)
    out = np.einsum("ihwkl,oikl->ohw", windows, kernel, optimize=True)
    return out + np.asarray(bias, dtype=np.float32)[:, None, None]


def maxpool2(x):
    """2x2 max-pooling; H and W must be even."""
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError("maxpool2 requires even spatial dimensions")
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def upconv2(x, kernel, bias):
    """2x2 stride-2 transposed convolution doubling H and W.

    Each input pixel deposits kernel * value into its own 2x2 output block.
    x: (in_ch, H, W); kernel: (out_ch, in_ch, 2, 2); bias: (out_ch,).
    """
    kernel = np.asarray(kernel, dtype=np.float32)
    out_ch, in_ch, kh, kw = kernel.shape
    if (kh, kw) != (2, 2):
        raise ValueError("upconv2 expects a 2x2 kernel")
    if x.shape[0] != in_ch:
        raise ValueError(f"input has {x.shape[0]} channels, kernel expects {in_ch}")
    _, h, w = x.shape
    out = np.einsum("ihw,oikl->ohkwl", x.astype(np.float32), kernel, optimize=True)
    out = out.reshape(out_ch, 2 * h, 2 * w)
    return out + np.asarray(bias, dtype=np.float32)[:, None, None]


def _relu(x):
    return np.maximum(x, 0.0)


def validate_weights(weights):
    """Check the full named-tensor contract: presence, shapes, dtype, finiteness."""
    for layer, kshape in LAYER_SPECS.items():
        for suffix, shape in (("kernel", kshape), ("bias", (kshape[0],))):
            name = f"{layer}.{suffix}"
            if name not in weights:
                raise MissingTensorError(f"missing tensor {name!r}")
            arr = weights[name]
            if tuple(arr.shape) != shape:
                raise TensorShapeError(
                    f"tensor {name!r} has shape {tuple(arr.shape)}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name!r} contains non-finite values")
    return weights


def _block(x, weights, layer):
    return _relu(conv2d(x, weights[f"{layer}.kernel"], weights[f"{layer}.bias"]))


def unet_forward(weights, x):
    """Run the U-net on a (2, H, W) input; H and W must be divisible by 4."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3 or x.shape[0] != 2:
        raise ValueError(f"expected input shape (2, H, W), got {x.shape}")
    _, h, w = x.shape
    if h % 4 or w % 4:
        raise ValueError("H and W must be divisible by 4 (two pooling levels)")

    e1 = _block(_block(x, weights, "enc1.conv1"), weights, "enc1.conv2")
    e2 = _block(_block(maxpool2(e1), weights, "enc2.conv1"), weights, "enc2.conv2")
    b = _block(_block(maxpool2(e2), weights, "bott.conv1"), weights, "bott.conv2")

    u1 = _relu(upconv2(b, weights["up1.deconv.kernel"], weights["up1.deconv.bias"]))
    d1 = np.concatenate([e2, u1], axis=0)  # skip channels first
    d1 = _block(_block(d1, weights, "dec1.conv1"), weights, "dec1.conv2")

    u2 = _relu(upconv2(d1, weights["up2.deconv.kernel"], weights["up2.deconv.bias"]))
    d2 = np.concatenate([e1, u2], axis=0)
    d2 = _block(_block(d2, weights, "dec2.conv1"), weights, "dec2.conv2")

    return conv2d(d2, weights["out.conv.kernel"], weights["out.conv.bias"])


def save_weights(weights, directory, meta=None):
    """Write a weight bundle {manifest.json, weights.bin}; round-trips bit-exactly."""
    validate_weights(weights)
    ordered = {}
    for layer in LAYER_SPECS:
        ordered[f"{layer}.kernel"] = weights[f"{layer}.kernel"]
        ordered[f"{layer}.bias"] = weights[f"{layer}.bias"]
    return write_tensors(directory, ordered, payload_name="weights.bin", meta=meta)


def load_weights(directory):
    """Load and validate a weight bundle written by save_weights (or the trainer)."""
    tensors, _manifest = read_tensors(directory)
    return validate_weights(tensors)


def random_weights(seed=0, scale=None):
    """He-style random initialization; handy for tests and parity vectors."""
    rng = np.random.default_rng(seed)
    weights = {}
    for layer, kshape in LAYER_SPECS.items():
        fan_in = kshape[1] * kshape[2] * kshape[3]
        std = scale if scale is not None else np.sqrt(2.0 / fan_in)
        weights[f"{layer}.kernel"] = rng.normal(0.0, std, kshape).astype(np.float32)
        weights[f"{layer}.bias"] = np.zeros(kshape[0], dtype=np.float32)
    return weights
