"""Dense numeric substrate: matmul, valid 2-D convolution, average pooling.

All operations take C-contiguous float64 arrays and are pure functions.
Convolution is cross-correlation (no kernel flip), stride 1, no padding.
Spatial inputs may carry one leading batch axis.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError


def matmul(a, b):
    """Matrix product of two 2-D arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} x {b.shape}")
    return a @ b


def _as_batched(x, op):
    """Normalize (C,H,W) / (N,C,H,W) input to batched form; return (array, had_batch)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x[None], False
    if x.ndim == 4:
        return x, True
    raise DimensionError(f"{op} expects (C,H,W) or (N,C,H,W), got {x.shape}")


def conv2d_valid(image, kernels):
    """Valid cross-correlation of an image stack with a bank of kernels.

    image: (Cin,H,W) or (N,Cin,H,W); kernels: (Cout,Cin,kh,kw).
    Returns (N?,Cout,H-kh+1,W-kw+1).
    """
    x, batched = _as_batched(image, "conv2d_valid")
    k = np.asarray(kernels, dtype=np.float64)
    if k.ndim != 4:
        raise DimensionError(f"kernels must be (Cout,Cin,kh,kw), got {k.shape}")
    _, cin, h, w = x.shape
    _, kcin, kh, kw = k.shape
    if kcin != cin:
        raise DimensionError(f"kernel channels {kcin} != input channels {cin}")
    if kh > h or kw > w:
        raise DimensionError(f"kernel {kh}x{kw} larger than input {h}x{w}")
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))      # (N,Cin,Ho,Wo,kh,kw)
    out = np.tensordot(win, k, axes=([1, 4, 5], [1, 2, 3]))  # (N,Ho,Wo,Cout)
    out = np.ascontiguousarray(np.moveaxis(out, 3, 1))
    return out if batched else out[0]


def avgpool2d(image, size=2):
    """Non-overlapping average pooling; spatial extents must divide by size."""
    x, batched = _as_batched(image, "avgpool2d")
    n, c, h, w = x.shape
    if h % size or w % size:
        raise DimensionError(f"avgpool2d needs extents divisible by {size}, got {h}x{w}")
    out = x.reshape(n, c, h // size, size, w // size, size).mean(axis=(3, 5))
    return out if batched else out[0]


def avgpool2d_grad(upstream, size=2):
    """Spread each upstream value uniformly (divided by size^2) over its window."""
    g, batched = _as_batched(upstream, "avgpool2d_grad")
    out = np.repeat(np.repeat(g, size, axis=2), size, axis=3) / float(size * size)
    return out if batched else out[0]


def conv2d_grads(image, kernels, upstream):
    """Gradients of conv2d_valid given the upstream gradient of its output.

    Returns (grad_image, grad_kernels). grad_image is the full correlation of
    the upstream gradient with spatially flipped kernels; grad_kernels is the
    correlation of the image with the upstream gradient, summed over the batch.
    """
    x, batched = _as_batched(image, "conv2d_grads")
    up, up_batched = _as_batched(upstream, "conv2d_grads")
    if batched != up_batched:
        raise DimensionError("image and upstream must both be batched or both not")
    k = np.asarray(kernels, dtype=np.float64)
    n, cin, h, w = x.shape
    cout, _, kh, kw = k.shape
    ho, wo = h - kh + 1, w - kw + 1
    if up.shape != (n, cout, ho, wo):
        raise DimensionError(f"upstream shape {up.shape} != expected {(n, cout, ho, wo)}")

    winx = sliding_window_view(x, (ho, wo), axis=(2, 3))     # (N,Cin,kh,kw,Ho,Wo)
    gk = np.tensordot(up, winx, axes=([0, 2, 3], [0, 4, 5]))  # (Cout,Cin,kh,kw)

    padded = np.zeros((n, cout, ho + 2 * (kh - 1), wo + 2 * (kw - 1)))
    padded[:, :, kh - 1:kh - 1 + ho, kw - 1:kw - 1 + wo] = up
    winu = sliding_window_view(padded, (kh, kw), axis=(2, 3))  # (N,Cout,H,W,kh,kw)
    flipped = k[:, :, ::-1, ::-1]
    gx = np.tensordot(winu, flipped, axes=([1, 4, 5], [0, 2, 3]))  # (N,H,W,Cin)
    gx = np.ascontiguousarray(np.moveaxis(gx, 3, 1))
    return (gx if batched else gx[0]), gk
