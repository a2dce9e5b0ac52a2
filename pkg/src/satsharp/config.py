"""Run-level configuration and the key = value config file format.

One flat namespace covers the estimator, the deconvolver, the
classification thresholds, and batch execution knobs. Lines are
"key = value"; blank lines and # comments are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .blind import EstimationConfig
from .score import Thresholds
from .tv import DeconvConfig


@dataclass(frozen=True)
class RunConfig:
    estimation: EstimationConfig = EstimationConfig()
    deconv: DeconvConfig = DeconvConfig()
    thresholds: Thresholds = Thresholds()
    parallelism: int = 1
    crop: tuple[int, int, int, int] | None = None
    min_samples: int = 50

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.min_samples < 1:
            raise ValueError("min_samples must be at least 1")
        if self.crop is not None:
            x, y, w, h = self.crop
            if x < 0 or y < 0 or w < 1 or h < 1:
                raise ValueError(f"bad crop window {self.crop}")


_ESTIMATION_KEYS = {
    "kernel_size": int,
    "l0_weight": float,
    "kernel_ridge": float,
    "outer_iters": int,
    "beta_init": float,
    "beta_max": float,
    "beta_rate": float,
    "pyramid_scale": float,
    "prune_fraction": float,
}

_DECONV_KEYS = {
    "tv_weight": float,
    "tv_beta_init": float,
    "tv_beta_max": float,
    "tv_beta_rate": float,
    "tv_inner_iters": int,
}

_THRESHOLD_KEYS = {
    "ortho_sharp": float,
    "ortho_discard": float,
    "basic_sharp": float,
    "basic_discard": float,
}

_RUN_KEYS = {
    "parallelism": int,
    "min_samples": int,
}


def parse_crop(text: str) -> tuple[int, int, int, int]:
    """Parse an "x,y,w,h" crop window."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"crop must be x,y,w,h, got {text!r}")
    try:
        x, y, w, h = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"crop values must be integers, got {text!r}") from None
    return (x, y, w, h)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from config file text, overriding ``base`` defaults."""
    cfg = base if base is not None else RunConfig()
    est: dict = {}
    dec: dict = {}
    thr: dict = {}
    run: dict = {}
    crop = cfg.crop
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key in _ESTIMATION_KEYS:
                est[key] = _ESTIMATION_KEYS[key](value)
            elif key in _DECONV_KEYS:
                dec[key.removeprefix("tv_") if key != "tv_weight" else key] = _DECONV_KEYS[key](value)
            elif key in _THRESHOLD_KEYS:
                thr[key] = _THRESHOLD_KEYS[key](value)
            elif key in _RUN_KEYS:
                run[key] = _RUN_KEYS[key](value)
            elif key == "crop":
                crop = parse_crop(value)
            else:
                raise ValueError(f"unknown config key {key!r}")
        except ValueError as e:
            raise ValueError(f"config line {lineno}: {e}") from None
    return RunConfig(
        estimation=replace(cfg.estimation, **est) if est else cfg.estimation,
        deconv=replace(cfg.deconv, **dec) if dec else cfg.deconv,
        thresholds=replace(cfg.thresholds, **thr) if thr else cfg.thresholds,
        parallelism=run.get("parallelism", cfg.parallelism),
        crop=crop,
        min_samples=run.get("min_samples", cfg.min_samples),
    )


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ValueError(f"cannot read config file {p}: {e}") from e
    try:
        return parse_config(text, base)
    except ValueError as e:
        raise ValueError(f"{p}: {e}") from None
