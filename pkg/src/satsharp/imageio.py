"""Image file reading and writing: PNG and TIFF via Pillow, PGM natively.

Decoded samples are scaled to [0, 1] by the container bit depth (255 or
65535). Multi-band images are collapsed with an unweighted band mean.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import Raster, to_grayscale

_PIL_EXTS = {".png", ".tif", ".tiff"}


def _read_pgm(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if blob[:2] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file")
    binary = blob[:2] == b"P5"

    # Header tokens (magic, width, height, maxval) with # comments allowed.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3 and pos < len(blob):
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if len(tokens) < 3:
        raise ValueError(f"{path}: truncated PGM header")
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad PGM dimensions or maxval")

    if binary:
        pos += 1  # single whitespace byte separates header from samples
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = width * height * dtype.itemsize
        raster = blob[pos:pos + expected]
        if len(raster) != expected:
            raise ValueError(f"{path}: truncated PGM pixel data")
        samples = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        values = blob[pos:].split()
        if len(values) != width * height:
            raise ValueError(f"{path}: expected {width * height} samples, got {len(values)}")
        samples = np.array([int(v) for v in values], dtype=np.float64)
    return samples.reshape(height, width) / maxval


def _write_pgm(path: Path, samples: np.ndarray, maxval: int) -> None:
    header = f"P5\n{samples.shape[1]} {samples.shape[0]}\n{maxval}\n".encode("ascii")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    path.write_bytes(header + samples.astype(dtype).tobytes())


def _from_pil(img: Image.Image) -> np.ndarray:
    if img.mode == "P":
        img = img.convert("RGB")
    elif img.mode == "LA":
        img = img.convert("L")
    elif img.mode == "RGBA":
        img = img.convert("RGB")
    arr = np.asarray(img)
    if img.mode in ("L", "RGB"):
        return arr.astype(np.float64) / 255.0
    if img.mode in ("I;16", "I;16B", "I;16L", "I"):
        return arr.astype(np.float64) / 65535.0
    raise ValueError(f"unsupported image mode {img.mode!r}")


def decode(path: str | Path) -> np.ndarray:
    """Decode an image file to a float64 array in [0, 1], (H, W) or (H, W, C)."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image: {p}")
    if p.suffix.lower() == ".pgm":
        return _read_pgm(p)
    if p.suffix.lower() in _PIL_EXTS:
        with Image.open(p) as img:
            return _from_pil(img)
    raise ValueError(f"unsupported image format: {p.suffix!r} (expected .png, .tif, .tiff, .pgm)")


def read_raster(path: str | Path) -> Raster:
    """Decode an image and collapse it to a single-band raster."""
    return to_grayscale(decode(path))


def write_raster(path: str | Path, image: Raster, bit_depth: int = 16) -> None:
    """Write a raster as grayscale PNG, TIFF, or PGM at the given bit depth."""
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    p = Path(path)
    maxval = 255 if bit_depth == 8 else 65535
    samples = np.round(np.clip(image.data, 0.0, 1.0) * maxval)
    if p.suffix.lower() == ".pgm":
        _write_pgm(p, samples, maxval)
        return
    if p.suffix.lower() in _PIL_EXTS:
        fmt = "PNG" if p.suffix.lower() == ".png" else "TIFF"
        if bit_depth == 8:
            Image.fromarray(samples.astype(np.uint8), mode="L").save(p, format=fmt)
        else:
            Image.fromarray(samples.astype(np.uint16)).save(p, format=fmt)
        return
    raise ValueError(f"unsupported image format: {p.suffix!r} (expected .png, .tif, .tiff, .pgm)")
