"""Shared test helpers: synthetic scenes, reference kernels, and slow oracles.

The oracles here are deliberately naive re-implementations (pixel loops,
dense linear algebra, arbitrary-precision special functions) so they share
no code path with the package internals they check.
"""

from __future__ import annotations

import numpy as np

from satsharp.kernel import Kernel
from satsharp.raster import GradientField, Raster


def cartoon_scene(size: int, seed: int) -> Raster:
    """Piecewise-constant scene: random rectangles and disks on a gray ground."""
    rng = np.random.default_rng(seed)
    img = np.full((size, size), 0.35)
    for _ in range(18):
        x0, y0 = rng.integers(0, size - 20, size=2)
        w, h = rng.integers(12, size // 3, size=2)
        val = rng.uniform(0.05, 0.95)
        img[y0:min(y0 + h, size), x0:min(x0 + w, size)] = val
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(6):
        cx, cy = rng.integers(20, size - 20, size=2)
        r = rng.integers(6, 26)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = rng.uniform(0.05, 0.95)
    return Raster(img)


def motion_diag(length: int, extent: int) -> Kernel:
    """Diagonal motion-blur kernel: a unit-mass line along the main diagonal."""
    w = np.zeros((extent, extent))
    c = extent // 2
    for i in range(-(length // 2), length // 2 + 1):
        w[c + i, c + i] = 1.0 / length
    return Kernel(w)


def _centroid(w: np.ndarray) -> tuple[float, float]:
    yy, xx = np.mgrid[0:w.shape[0], 0:w.shape[1]]
    return (yy * w).sum() / w.sum(), (xx * w).sum() / w.sum()


def ncc_aligned(est: np.ndarray, true: np.ndarray) -> float:
    """Normalized cross-correlation after aligning centroids to whole pixels."""
    ey, ex = _centroid(est)
    ty, tx = _centroid(true)
    dy, dx = round(ty - ey), round(tx - ex)
    shifted = np.zeros_like(est)
    h, w = est.shape
    ys = slice(max(0, dy), min(h, h + dy))
    xs = slice(max(0, dx), min(w, w + dx))
    shifted[ys, xs] = est[ys.start - dy:ys.stop - dy, xs.start - dx:xs.stop - dx]
    a = shifted - shifted.mean()
    b = true - true.mean()
    return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))


def conv_brute(image: np.ndarray, weights: np.ndarray, periodic: bool) -> np.ndarray:
    """Centered convolution by direct spatial summation, one pixel at a time.

    Periodic mode wraps indices; otherwise out-of-range indices clamp to the
    nearest edge pixel (replicate padding of unbounded width).
    """
    h, w = image.shape
    kh, kw = weights.shape
    cy, cx = kh // 2, kw // 2
    out = np.zeros_like(image, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for ky in range(kh):
                for kx in range(kw):
                    sy = y - (ky - cy)
                    sx = x - (kx - cx)
                    if periodic:
                        sy %= h
                        sx %= w
                    else:
                        sy = min(max(sy, 0), h - 1)
                        sx = min(max(sx, 0), w - 1)
                    acc += weights[ky, kx] * image[sy, sx]
            out[y, x] = acc
    return out


def dense_kernel_solve(
    grad_latent: GradientField,
    grad_observed: GradientField,
    ridge: float,
    kernel_size: int,
) -> np.ndarray:
    """Gradient-domain ridge kernel solve via explicit normal equations.

    Builds the full circulant system matrix for each gradient component,
    solves (A^T A + ridge * I) k = A^T b over a whole-image kernel, and crops
    kernel_size around the zero-offset tap the same way the fast solver does.
    """
    h, w = grad_latent.shape
    n = h * w

    def circulant(g: np.ndarray) -> np.ndarray:
        a = np.zeros((n, n))
        for y in range(h):
            for x in range(w):
                row = y * w + x
                for sy in range(h):
                    for sx in range(w):
                        a[row, sy * w + sx] = g[(y - sy) % h, (x - sx) % w]
        return a

    ax = circulant(grad_latent.gx.data)
    ay = circulant(grad_latent.gy.data)
    bx = grad_observed.gx.data.ravel()
    by = grad_observed.gy.data.ravel()
    lhs = ax.T @ ax + ay.T @ ay + ridge * np.eye(n)
    rhs = ax.T @ bx + ay.T @ by
    full = np.linalg.solve(lhs, rhs).reshape(h, w)

    c = kernel_size // 2
    return np.roll(full, (c, c), axis=(0, 1))[:kernel_size, :kernel_size].copy()


def anova_textbook(groups) -> tuple[float, int, int, float]:
    """One-way ANOVA straight from the textbook formulas, scalar loops only.

    The p-value comes from mpmath's regularized incomplete beta function, an
    implementation independent of the scipy special functions used by the
    package.
    """
    import mpmath

    means = [sum(g) / len(g) for g in groups]
    sizes = [len(g) for g in groups]
    total = sum(sizes)
    grand = sum(v for g in groups for v in g) / total
    ssb = sum(n * (m - grand) ** 2 for n, m in zip(sizes, means))
    ssw = sum((v - m) ** 2 for g, m in zip(groups, means) for v in g)
    dfb = len(groups) - 1
    dfw = total - len(groups)
    msb = ssb / dfb
    msw = ssw / dfw
    if msw == 0.0:
        if msb == 0.0:
            return 0.0, dfb, dfw, 1.0
        return float("inf"), dfb, dfw, 0.0
    f = msb / msw
    x = dfw / (dfw + dfb * f)
    p = float(mpmath.betainc(dfw / 2, dfb / 2, 0, x, regularized=True))
    return f, dfb, dfw, p
