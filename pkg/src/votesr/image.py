"""Pixel buffers and the deterministic geometry/resampling operations.

Images are planar floating-point buffers in [0, 1], stored as (height,
width, channels) float64 arrays with 1 or 3 channels. All operations are
pure functions; arrays are treated as immutable once wrapped in an Image.

The resampler reproduces the classic piecewise-cubic convolution kernel
with a = -0.5 (the convention behind Matlab-style `imresize`), including
the widened, renormalized kernel on antialiased downscaling and
clamp-to-edge handling of out-of-bounds taps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageError

#: Kernel constant of the cubic convolution kernel.
CUBIC_A = -0.5

#: BT.601 luma weights for [0,1] RGB.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Image:
    """A validated (height, width, channels) float64 pixel buffer in [0, 1].

    Samples are row-major and channel-interleaved; ``channels`` is 1 or 3.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ImageError(f"expected 2-D or 3-D pixel array, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ImageError(f"image dimensions must be >= 1, got {w}x{h}")
        if c not in (1, 3):
            raise ImageError(f"channel count must be 1 or 3, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("pixel buffer contains non-finite samples")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ImageError(
                f"samples outside [0, 1]: min={arr.min():.6g} max={arr.max():.6g}"
            )
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        """(height, width, channels)."""
        return self.data.shape

    def same_shape(self, other: "Image") -> bool:
        return self.shape == other.shape


@dataclass(frozen=True)
class ScaleFactor:
    """Positive integer downscaling factor."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise ImageError(f"scale factor must be an integer, got {self.value!r}")
        if self.value < 1:
            raise ImageError(f"scale factor must be >= 1, got {self.value}")


@dataclass(frozen=True)
class ResampleSpec:
    """Target geometry for a resample."""

    target_width: int
    target_height: int
    antialias: bool

    def __post_init__(self):
        if self.target_width < 1 or self.target_height < 1:
            raise ImageError(
                f"resample target must be >= 1x1, got "
                f"{self.target_width}x{self.target_height}"
            )


def cubic_weight(x: np.ndarray) -> np.ndarray:
    """Piecewise-cubic kernel w(x) with a = -0.5, vectorized.

    w(x) = (a+2)|x|^3 - (a+3)|x|^2 + 1          for |x| <= 1
         = a|x|^3 - 5a|x|^2 + 8a|x| - 4a        for 1 < |x| < 2
         = 0                                     otherwise
    """
    a = CUBIC_A
    ax = np.abs(x)
    inner = (a + 2.0) * ax**3 - (a + 3.0) * ax**2 + 1.0
    outer = a * ax**3 - 5.0 * a * ax**2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def _axis_contributions(src_len: int, dst_len: int, antialias: bool):
    """Tap index matrix and normalized weight matrix for one axis.

    Uses the half-pixel-centered mapping src = (dst + 0.5) * scale - 0.5.
    On antialiased shrink the kernel argument is divided by the shrink
    factor (widening its support accordingly). Out-of-bounds taps are
    clamped to the edge; each row of weights is normalized to sum to 1.
    """
    scale = src_len / dst_len
    u = (np.arange(dst_len, dtype=np.float64) + 0.5) * scale - 0.5
    widen = scale if (antialias and scale > 1.0) else 1.0
    support = 2.0 * widen
    ntaps = int(np.ceil(support)) * 2 + 2
    left = np.floor(u - support).astype(np.int64)
    taps = left[:, np.newaxis] + np.arange(ntaps)[np.newaxis, :]
    weights = cubic_weight((u[:, np.newaxis] - taps) / widen)
    weights = weights / weights.sum(axis=1, keepdims=True)
    clamped = np.clip(taps, 0, src_len - 1)
    return clamped, weights


def _resize_axis(arr: np.ndarray, dst_len: int, axis: int, antialias: bool) -> np.ndarray:
    taps, weights = _axis_contributions(arr.shape[axis], dst_len, antialias)
    gathered = np.take(arr, taps, axis=axis)  # taps expand into two axes
    if axis == 0:
        return np.einsum("ot,othc->ohc", weights, gathered)
    return np.einsum("ot,hotc->hoc", weights, gathered)


def bicubic_resize(src: Image, spec: ResampleSpec) -> Image:
    """Resample to spec dimensions with the a = -0.5 cubic kernel.

    Separable: rows then columns. Output samples are clamped to [0, 1].
    """
    arr = src.data
    if spec.target_height != src.height:
        arr = _resize_axis(arr, spec.target_height, 0, spec.antialias)
    if spec.target_width != src.width:
        arr = _resize_axis(arr, spec.target_width, 1, spec.antialias)
    return Image(np.clip(arr, 0.0, 1.0))


def degrade(hr: Image, factor: ScaleFactor) -> Image:
    """Antialiased bicubic downscale by an integer factor.

    Non-divisible dimensions are rejected rather than padded or cropped:
    silent geometry changes would corrupt LR-consistency measurements.
    """
    f = factor.value
    if hr.width % f != 0 or hr.height % f != 0:
        raise ImageError(
            f"dimensions {hr.width}x{hr.height} not divisible by factor {f}"
        )
    spec = ResampleSpec(hr.width // f, hr.height // f, antialias=True)
    return bicubic_resize(hr, spec)


def tile_replicate(src: Image, reps_h: int, reps_v: int) -> Image:
    """Tile the image reps_h times horizontally and reps_v times vertically."""
    if reps_h < 1 or reps_v < 1:
        raise ImageError(f"tile repetitions must be >= 1, got {reps_h}x{reps_v}")
    return Image(np.tile(src.data, (reps_v, reps_h, 1)))


def crop(src: Image, x: int, y: int, w: int, h: int) -> Image:
    """Exact pixel copy of the rectangle (x, y, w, h); must lie inside src."""
    if w < 1 or h < 1:
        raise ImageError(f"crop size must be >= 1x1, got {w}x{h}")
    if x < 0 or y < 0 or x + w > src.width or y + h > src.height:
        raise ImageError(
            f"crop rectangle ({x},{y},{w},{h}) exceeds image "
            f"{src.width}x{src.height}"
        )
    return Image(src.data[y : y + h, x : x + w, :].copy())


def to_luma(src: Image) -> Image:
    """BT.601 luma: Y = 0.299 R + 0.587 G + 0.114 B, clamped to [0, 1]."""
    if src.channels != 3:
        raise ImageError(f"to_luma requires 3 channels, got {src.channels}")
    wr, wg, wb = LUMA_WEIGHTS
    y = wr * src.data[:, :, 0] + wg * src.data[:, :, 1] + wb * src.data[:, :, 2]
    return Image(np.clip(y, 0.0, 1.0)[:, :, np.newaxis])
