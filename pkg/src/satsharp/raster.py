"""Single-band image container and the grid primitives everything else builds on.

All operations are pure: inputs are never mutated and outputs are freshly
allocated, so concurrent use from many workers is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np
from scipy import ndimage

if TYPE_CHECKING:
    from .kernel import Kernel

# Levels smaller than this are useless for estimation and break the solvers.
MIN_LEVEL_DIM = 8


@dataclass(frozen=True)
class Raster:
    """2-D single-band image, row-major float64 samples, nominal range [0, 1].

    The wrapped array is copied and marked read-only; a Raster never aliases
    caller memory.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"raster data must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("raster data contains non-finite samples")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class GradientField:
    """Forward-difference gradient pair of a raster (horizontal gx, vertical gy)."""

    gx: Raster
    gy: Raster

    def __post_init__(self):
        if self.gx.shape != self.gy.shape:
            raise ValueError("gradient components must share dimensions")

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape


@dataclass(frozen=True)
class Periodic:
    """Circular boundary handling: the image tiles the plane."""


@dataclass(frozen=True)
class EdgeReplicatePad:
    """Replicate-pad by ``pad`` pixels before filtering, crop back afterwards.

    For deconvolution-bound uses the pad must be at least half the kernel
    extent so wrap-around never reaches real pixels.
    """

    pad: int

    def __post_init__(self):
        if self.pad < 0:
            raise ValueError("pad must be non-negative")


BoundaryMode = Union[Periodic, EdgeReplicatePad]

PERIODIC = Periodic()


def to_grayscale(image: np.ndarray | Sequence[np.ndarray]) -> Raster:
    """Reduce a multi-band image to a single band by unweighted band averaging.

    Accepts an (H, W) array, an (H, W, C) array, or a sequence of (H, W)
    band arrays. Samples are expected already scaled to [0, 1]; decoding and
    bit-depth scaling is the image reader's job.
    """
    if isinstance(image, Raster):
        return image
    if isinstance(image, np.ndarray):
        if image.ndim == 2:
            return Raster(image)
        if image.ndim == 3:
            bands = [image[:, :, i] for i in range(image.shape[2])]
        else:
            raise ValueError(f"expected 2-D or 3-D image array, got shape {image.shape}")
    else:
        bands = [np.asarray(b, dtype=np.float64) for b in image]
    if not bands:
        raise ValueError("image has no bands")
    shape = bands[0].shape
    for b in bands[1:]:
        if b.shape != shape:
            raise ValueError(f"mismatched band dimensions: {b.shape} vs {shape}")
    return Raster(np.mean(np.stack(bands, axis=0), axis=0))


def gradient(image: Raster) -> GradientField:
    """Forward differences with periodic wrap on the last column/row.

    gx(x, y) = u(x+1, y) - u(x, y) and gy(x, y) = u(x, y+1) - u(x, y).
    """
    if image.width < 2 or image.height < 2:
        raise ValueError("gradient requires at least 2 pixels along each axis")
    u = image.data
    gx = np.roll(u, -1, axis=1) - u
    gy = np.roll(u, -1, axis=0) - u
    return GradientField(Raster(gx), Raster(gy))


def psf_otf(weights: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Embed a centered filter into ``shape`` and return its transfer function.

    The filter center (extent // 2 along each axis) is moved to index (0, 0)
    so that multiplying FFTs realizes centered circular convolution.
    """
    kh, kw = weights.shape
    padded = np.zeros(shape, dtype=np.float64)
    padded[:kh, :kw] = weights
    padded = np.roll(padded, (-(kh // 2), -(kw // 2)), axis=(0, 1))
    return np.fft.fft2(padded)


def _circular_convolve(data: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft2(np.fft.fft2(data) * psf_otf(weights, data.shape)))


def convolve(image: Raster, kernel: "Kernel", mode: BoundaryMode = PERIODIC) -> Raster:
    """Convolve an image with a centered kernel; output keeps the input size.

    Periodic mode wraps circularly; EdgeReplicatePad pads with edge values,
    convolves, and crops, which suppresses wrap-around ringing at borders.
    """
    weights = np.asarray(kernel.weights, dtype=np.float64)
    kh, kw = weights.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel extents must be odd, got {kh}x{kw}")
    if kh > image.height or kw > image.width:
        raise ValueError(f"kernel {kh}x{kw} larger than image {image.height}x{image.width}")
    if isinstance(mode, Periodic):
        return Raster(_circular_convolve(image.data, weights))
    if isinstance(mode, EdgeReplicatePad):
        if mode.pad < max(kh, kw) // 2:
            raise ValueError(f"pad {mode.pad} smaller than half the kernel extent")
        p = mode.pad
        padded = np.pad(image.data, p, mode="edge")
        out = _circular_convolve(padded, weights)
        return Raster(out[p:p + image.height, p:p + image.width])
    raise TypeError(f"unsupported boundary mode: {mode!r}")


def resize_bilinear(data: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Resample a 2-D array to ``shape`` with area-aligned bilinear interpolation."""
    th, tw = shape
    if th < 1 or tw < 1:
        raise ValueError("target shape must be positive")
    h, w = data.shape
    if (th, tw) == (h, w):
        return data.copy()
    ys = (np.arange(th) + 0.5) * (h / th) - 0.5
    xs = (np.arange(tw) + 0.5) * (w / tw) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = data[np.ix_(y0, x0)] * (1.0 - wx) + data[np.ix_(y0, x1)] * wx
    bottom = data[np.ix_(y1, x0)] * (1.0 - wx) + data[np.ix_(y1, x1)] * wx
    return top * (1.0 - wy) + bottom * wy


def build_pyramid(image: Raster, scale: float, levels: int) -> list[Raster]:
    """Geometric image pyramid, coarsest level first, original image last.

    Each level is produced from the original image: a Gaussian anti-alias
    low-pass with sigma = 0.8 * (1/factor - 1) followed by one bilinear
    resample, where factor = scale ** (levels - 1 - i) for level i.
    """
    if not 0.0 < scale < 1.0:
        raise ValueError(f"scale must lie in (0, 1), got {scale}")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    coarsest = scale ** (levels - 1)
    if round(image.height * coarsest) < MIN_LEVEL_DIM or round(image.width * coarsest) < MIN_LEVEL_DIM:
        raise ValueError(
            f"{levels} levels at scale {scale} shrink {image.height}x{image.width} "
            f"below the {MIN_LEVEL_DIM}-pixel minimum"
        )
    out: list[Raster] = []
    for i in range(levels):
        factor = scale ** (levels - 1 - i)
        if factor == 1.0:
            out.append(image)
            continue
        th = int(round(image.height * factor))
        tw = int(round(image.width * factor))
        sigma = 0.8 * (1.0 / factor - 1.0)
        smoothed = ndimage.gaussian_filter(image.data, sigma, mode="nearest")
        out.append(Raster(resize_bilinear(smoothed, (th, tw))))
    return out


def synthesize(
    truth: Raster,
    kernel: "Kernel",
    noise_sigma: float,
    seed: int,
    mode: BoundaryMode | None = None,
) -> Raster:
    """Simulate acquisition: blur the truth, add Gaussian noise, clip to [0, 1].

    Deterministic for a given (truth, kernel, noise_sigma, seed). The default
    boundary is edge replication with pad equal to the kernel extent, which
    keeps synthetic scenes free of wrap-around artifacts.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    if mode is None:
        mode = EdgeReplicatePad(max(kernel.weights.shape))
    blurred = convolve(truth, kernel, mode)
    noise = np.random.default_rng(seed).normal(0.0, noise_sigma, size=blurred.shape)
    return Raster(np.clip(blurred.data + noise, 0.0, 1.0))


def crop(image: Raster, x: int, y: int, w: int, h: int) -> Raster:
    """Extract the axis-aligned window with top-left corner (x, y)."""
    if w < 1 or h < 1:
        raise ValueError("crop window must be positive")
    if x < 0 or y < 0 or x + w > image.width or y + h > image.height:
        raise ValueError(
            f"crop {x},{y},{w},{h} does not fit inside {image.width}x{image.height}"
        )
    return Raster(image.data[y:y + h, x:x + w])
