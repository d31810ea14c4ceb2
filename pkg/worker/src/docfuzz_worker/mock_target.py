"""A small image-library lookalike with deliberately planted faults.

Every routine accepts the argument shapes its documentation promises and
returns finite, well-formed outputs, except for six planted bugs used to
exercise end-to-end campaigns. Each fault is reachable only through one
specific generation behaviour:

==================  ===========  ==============================================
routine             bug class    trigger (and the generation path that hits it)
==================  ===========  ==============================================
equalize_hist       crash        any array extent >= 4096 (extreme-size probes)
integral_image      crash        a string where the image belongs (invalid-type
                                 probes)
find_transform      NaN          a point cloud collapsed toward the origin:
                                 >= 6 points, every coordinate in (0, 0.3)
                                 (elementwise division of unit coordinates)
normalize_gamma     NaN          any negative element (additive noise is the
                                 only source of negatives)
estimate_blur       exception    >= 4 float cells sharing one exact integer
                                 value >= 2 (a masked rectangle)
blend_linear        exception    operand dtypes differ; the docs never say the
                                 two images must match, the implementation
                                 insists (a documentation/implementation gap)
==================  ===========  ==============================================

Everything else here is honest, boring numerics.
"""

from __future__ import annotations

import math
import os
import signal

import numpy as np


class error(Exception):
    """Library-style error carrying a status-code message."""


def _require_array(x, name="src"):
    if not isinstance(x, np.ndarray):
        raise TypeError(f"{name} must be an ndarray, got {type(x).__name__}")
    return x


def equalize_hist(image):
    image = _require_array(image, "image")
    if any(d >= 4096 for d in image.shape):
        os.abort()  # planted: native-code abort on oversized buffers
    a = image.astype(np.float64)
    if a.size == 0:
        return a
    lo = float(a.min())
    return (a - lo) / max(float(a.max()) - lo, 1.0)


def integral_image(image, window, norm):
    if isinstance(image, str):
        os.kill(os.getpid(), signal.SIGSEGV)  # planted: wild pointer on bad input type
    image = _require_array(image, "image")
    w = float(window)
    n = float(norm)
    sums = image.astype(np.float64)
    if sums.ndim >= 1:
        sums = np.cumsum(sums, axis=0)
    if sums.ndim >= 2:
        sums = np.cumsum(sums, axis=1)
    return sums * (n / max(w, 1e-9))


def find_transform(src_pts, dst_pts):
    src = _require_array(src_pts, "src_pts")
    _require_array(dst_pts, "dst_pts")
    if src.ndim != 3 or src.shape[-1] != 2:
        raise error("(-215:Bad argument) point arrays must have shape (N, 1, 2) in function 'findTransform'")
    pts = src.astype(np.float64).reshape(-1, 2)
    n = pts.shape[0]
    if n >= 6 and pts.size:
        top = float(pts.max())
        bottom = float(pts.min())
        if 0.0 < top < 0.3 and bottom > 0.0:
            # planted: the normal-equation solve degenerates once every
            # coordinate collapses into the same corner neighbourhood
            retval = np.array(
                [
                    [np.inf, np.nan, np.inf],
                    [np.inf, np.inf, np.nan],
                    [-np.inf, np.nan, np.nan],
                ]
            )
            return retval, np.ones((n, 1), dtype=np.uint8)
    return np.eye(3, dtype=np.float64), np.ones((n, 1), dtype=np.uint8)


def normalize_gamma(image):
    image = _require_array(image, "image")
    with np.errstate(invalid="ignore"):
        # planted: no domain check, so negative elements surface as NaN
        return np.sqrt(image.astype(np.float64))


def estimate_blur(image):
    image = _require_array(image, "image")
    a = image.astype(np.float64).ravel()
    if image.dtype.kind == "f" and a.size:
        values, counts = np.unique(a, return_counts=True)
        flat = (counts >= 4) & (values >= 2.0) & (values == np.floor(values))
        if flat.any():
            # planted: constant integer-valued blocks trip the variance floor
            v = float(values[flat][0])
            raise error(
                f"(-205:Degenerate input) constant block of value {v:g} is below "
                f"the variance floor in function 'estimateBlur'"
            )
    return float(np.var(a)) if a.size else 0.0


def blend_linear(image1, image2, weight):
    a = _require_array(image1, "image1")
    b = _require_array(image2, "image2")
    if a.dtype != b.dtype:
        # planted documentation gap: the docs never require matching types
        raise error(
            "(-205:Formats of input arguments do not match) the input matrices "
            "must share one data type in function 'blendLinear'"
        )
    w = float(weight)
    return a.astype(np.float64) * (1.0 - w) + b.astype(np.float64) * w


# --- honest routines -----------------------------------------------------------


def rotation_matrix(center, angle, scale):
    c = float(center)
    rad = math.radians(float(angle))
    s = float(scale)
    cos, sin = s * math.cos(rad), s * math.sin(rad)
    return np.array(
        [[cos, sin, (1.0 - cos) * c - sin * c], [-sin, cos, sin * c + (1.0 - cos) * c]]
    )


def draw_markers(image, points, color):
    img = _require_array(image, "image")
    pts = _require_array(points, "points")
    out = img.copy()
    if pts.size and out.size and out.ndim >= 2:
        coords = pts.reshape(-1, pts.shape[-1])[:, :2].astype(np.int64)
        rows = np.clip(coords[:, 0], 0, out.shape[0] - 1)
        cols = np.clip(coords[:, 1], 0, out.shape[1] - 1)
        out[rows, cols] = np.asarray(color)[: out.shape[-1]] if out.ndim == 3 else 0
    return out


def convert_gray(image):
    a = _require_array(image, "image").astype(np.float64)
    if a.ndim >= 3 and a.shape[-1] >= 3:
        gray = 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
    else:
        gray = a.mean(axis=-1) if a.ndim >= 1 and a.size else a
    return gray[..., None]


def threshold_binary(image, thresh, mode):
    a = _require_array(image, "image").astype(np.float64)
    t = float(thresh)
    m = int(mode)
    if m == 0:
        return (a > t) * 255.0
    if m == 1:
        return (a <= t) * 255.0
    return np.minimum(a, t)


def resize_nearest(image, height, width):
    img = _require_array(image, "image")
    h, w = int(height), int(width)
    if h < 1 or w < 1:
        raise error("(-215:Bad argument) output extents must be positive in function 'resizeNearest'")
    if img.ndim < 2 or img.shape[0] == 0 or img.shape[1] == 0:
        raise error("(-215:Bad argument) source image is empty in function 'resizeNearest'")
    rows = (np.arange(h) * img.shape[0]) // h
    cols = (np.arange(w) * img.shape[1]) // w
    return img[rows][:, cols]


def flip_axes(image, mode):
    a = _require_array(image, "image")
    m = int(mode)
    if m == 0:
        return np.flip(a, axis=0)
    if m == 1:
        return np.flip(a, axis=1) if a.ndim >= 2 else np.flip(a, axis=0)
    return np.flip(a)


def accumulate_weighted(image1, image2, weight):
    a = _require_array(image1, "image1").astype(np.float64)
    b = _require_array(image2, "image2").astype(np.float64)
    w = float(weight)
    return a * (1.0 - w) + b * w


def box_blur(image, ksize):
    a = _require_array(image, "image").astype(np.float64)
    return a / max(int(ksize), 1)


def adjust_contrast(image, alpha, beta):
    a = _require_array(image, "image").astype(np.float64)
    return a * float(alpha) + float(beta)


def stack_pair(image1, image2):
    a = _require_array(image1, "image1")
    b = _require_array(image2, "image2")
    return np.stack([a.astype(np.float64), b.astype(np.float64)])


def count_corners(image, points):
    _require_array(image, "image")
    pts = _require_array(points, "points")
    return int(pts.reshape(-1, pts.shape[-1]).shape[0]) if pts.size else 0


def warp_shift(image, offset):
    a = _require_array(image, "image").astype(np.float64)
    return a + float(offset)


def histogram_bins(image, bins):
    a = _require_array(image, "image")
    counts, _ = np.histogram(a.ravel(), bins=max(int(bins), 1))
    return counts.astype(np.int32)


def match_scale(image, scale):
    a = _require_array(image, "image").astype(np.float64)
    return a * float(scale)


def mask_region(image, region_color):
    a = _require_array(image, "image").astype(np.float64).copy()
    fill = float(np.mean(np.asarray(region_color, dtype=np.float64)))
    if a.ndim >= 1 and a.shape[0] >= 1:
        a[0] = fill
    if a.ndim >= 1 and a.shape[0] >= 2:
        a[-1] = fill
    return a


def downsample_pyramid(image, levels):
    a = _require_array(image, "image")
    step = 2 ** int(levels)
    return a[::step, ::step] if a.ndim >= 2 else a[::step]


def grid_points(rows, cols):
    r, c = max(int(rows), 1), max(int(cols), 1)
    ys, xs = np.meshgrid(np.arange(r), np.arange(c), indexing="ij")
    return np.stack([ys.ravel(), xs.ravel()], axis=-1).reshape(-1, 1, 2).astype(np.int32)


def normalize_channels(image):
    a = _require_array(image, "image").astype(np.float64)
    if a.size == 0:
        return a
    return a / max(float(np.abs(a).max()), 1.0)


def sharpen_edges(image, strength):
    a = _require_array(image, "image").astype(np.float64)
    s = float(strength)
    return a + (a - a * 0.5) * s


def remap_colors(image, color):
    a = _require_array(image, "image").astype(np.float64)
    shift = float(np.mean(np.asarray(color, dtype=np.float64)))
    return a * 0.5 + shift * 0.5


def blur_region(image, points, ksize):
    a = _require_array(image, "image").astype(np.float64)
    _require_array(points, "points")
    return a / max(int(ksize), 1)


def scale_intensity(image, scale):
    a = _require_array(image, "image").astype(np.float64)
    return a * float(scale)
