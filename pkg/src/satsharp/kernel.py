"""Blur-kernel type, the feasibility projection, and kernel serialization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import InvalidKernelError
from .raster import resize_bilinear

# A kernel is accepted as normalized when its l1 mass is this close to 1.
MASS_TOL = 1e-9

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Kernel:
    """Non-negative blur kernel with odd extents and unit l1 mass.

    The weight array is copied and marked read-only. Extents may differ per
    axis (e.g. a 1x3 line) but each must be odd so the kernel has an
    unambiguous center tap.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2:
            raise ValueError(f"kernel weights must be 2-D, got shape {w.shape}")
        kh, kw = w.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValueError(f"kernel extents must be odd, got {kh}x{kw}")
        if not np.all(np.isfinite(w)):
            raise ValueError("kernel weights contain non-finite values")
        if np.any(w < 0):
            raise ValueError("kernel weights must be non-negative")
        mass = float(w.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"kernel l1 mass must be 1, got {mass!r}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def extent(self) -> tuple[int, int]:
        return self.weights.shape


def _centroid(w: np.ndarray) -> tuple[float, float]:
    yy, xx = np.mgrid[0:w.shape[0], 0:w.shape[1]]
    mass = w.sum()
    return float((yy * w).sum() / mass), float((xx * w).sum() / mass)


def _shift_zero_fill(w: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """out[y, x] = w[y + dy, x + dx] where defined, 0 elsewhere."""
    h, wd = w.shape
    out = np.zeros_like(w)
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(wd, wd - dx))
    out[ys, xs] = w[ys.start + dy:ys.stop + dy, xs.start + dx:xs.stop + dx]
    return out


def project_kernel(raw: np.ndarray, prune_fraction: float = 0.05) -> Kernel:
    """Project an unconstrained solve output onto the feasible kernel set.

    Steps, in order: clamp negatives to zero; zero entries below
    prune_fraction times the max; keep only the 8-connected support component
    containing the max entry; renormalize to unit mass; shift by whole pixels
    until the centroid lies within half a pixel of the geometric center
    (renormalizing again if the shift pushes mass off the window).

    Raises InvalidKernelError when no positive mass survives.
    """
    w = np.array(raw, dtype=np.float64, copy=True)
    if w.ndim != 2:
        raise ValueError(f"kernel weights must be 2-D, got shape {w.shape}")
    if w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
        raise ValueError(f"kernel extents must be odd, got {w.shape[0]}x{w.shape[1]}")
    if not 0.0 <= prune_fraction < 1.0:
        raise ValueError(f"prune_fraction must lie in [0, 1), got {prune_fraction}")
    if not np.all(np.isfinite(w)):
        raise InvalidKernelError("invalid kernel: non-finite solve output")

    w = np.maximum(w, 0.0)
    peak = w.max()
    if peak <= 0.0:
        raise InvalidKernelError("invalid kernel: no positive mass after clamping")
    if prune_fraction > 0.0:
        w[w < prune_fraction * peak] = 0.0

    labels, count = ndimage.label(w > 0, structure=_EIGHT_CONNECTED)
    if count > 1:
        peak_label = labels[np.unravel_index(np.argmax(w), w.shape)]
        w[labels != peak_label] = 0.0
    w /= w.sum()

    cy = w.shape[0] // 2
    cx = w.shape[1] // 2
    for _ in range(max(w.shape)):
        my, mx = _centroid(w)
        dy = round(my - cy)
        dx = round(mx - cx)
        if dy == 0 and dx == 0:
            break
        w = _shift_zero_fill(w, dy, dx)
        mass = w.sum()
        if mass <= 0.0:
            raise InvalidKernelError("invalid kernel: recentering shifted all mass off the window")
        w /= mass
    return Kernel(w)


def delta(extent: int | tuple[int, int]) -> Kernel:
    """Identity kernel: all mass on the center tap."""
    kh, kw = (extent, extent) if isinstance(extent, int) else extent
    w = np.zeros((kh, kw))
    w[kh // 2, kw // 2] = 1.0
    return Kernel(w)


def gaussian(sigma: float, extent: int) -> Kernel:
    """Isotropic Gaussian kernel sampled at pixel centers, normalized to unit mass."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    c = extent // 2
    r = np.arange(extent) - c
    g1 = np.exp(-0.5 * (r / sigma) ** 2)
    w = np.outer(g1, g1)
    return Kernel(w / w.sum())


def save_kernel_text(kernel: Kernel, path: str | Path) -> None:
    """Write a kernel as a plain-text grid: extent line, then one row per line.

    Weights are written with repr precision so a load round-trips bit-exactly.
    """
    kh, kw = kernel.extent
    lines = [f"{kh} {kw}"]
    for row in kernel.weights:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_kernel_text(path: str | Path) -> Kernel:
    """Read a kernel written by save_kernel_text."""
    tokens = Path(path).read_text().split("\n")
    header = tokens[0].split()
    if len(header) != 2:
        raise ValueError(f"bad kernel header: {tokens[0]!r}")
    kh, kw = int(header[0]), int(header[1])
    rows = []
    for line in tokens[1:1 + kh]:
        vals = [float(v) for v in line.split()]
        if len(vals) != kw:
            raise ValueError(f"expected {kw} weights per row, got {len(vals)}")
        rows.append(vals)
    if len(rows) != kh:
        raise ValueError(f"expected {kh} rows, got {len(rows)}")
    return Kernel(np.array(rows))


def render_kernel_png(kernel: Kernel, path: str | Path, size: int = 32) -> None:
    """Render a kernel to an 8-bit grayscale PNG, max weight mapped to white."""
    from PIL import Image

    w = kernel.weights / kernel.weights.max()
    img = resize_bilinear(w, (size, size))
    img = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(Path(path), format="PNG")
