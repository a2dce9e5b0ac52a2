"""Absolute sharpness score of a blur kernel and quality classification.

A unit-mass kernel concentrated on one tap has l2 norm 1 (perfectly sharp);
spreading mass over n taps drops the norm toward 1/sqrt(n). The l2 norm of
the estimated kernel therefore orders images from blurry to sharp on an
absolute scale, independent of scene content.
"""

from __future__ import annotations

import datetime as _dt
import enum
import math
from dataclasses import dataclass

import numpy as np

from .kernel import Kernel

SCORE_MASS_TOL = 1e-6


class ProductType(enum.Enum):
    """Processing level of the input image."""

    BASIC = "basic"
    ORTHO = "ortho"

    @classmethod
    def parse(cls, text: str) -> "ProductType":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown product type {text!r} (expected 'basic' or 'ortho')") from None


class QualityClass(enum.IntEnum):
    """Quality verdict, ordered from worst to best."""

    DISCARD = 0
    DEBLURRABLE = 1
    SHARP = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "QualityClass":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown quality class {text!r}") from None


@dataclass(frozen=True)
class Thresholds:
    """Score cut points per product type.

    Ortho values: sharp above 0.030, discard below 0.023. Basic imagery
    scores higher for the same optical quality, so its discard cut is 0.028;
    its sharp cut extrapolates the roughly 0.005 between-product offset on
    top of the ortho sharp cut. All four are configurable.
    """

    ortho_sharp: float = 0.030
    ortho_discard: float = 0.023
    basic_sharp: float = 0.035
    basic_discard: float = 0.028

    def __post_init__(self):
        for name, sharp, discard in (
            ("ortho", self.ortho_sharp, self.ortho_discard),
            ("basic", self.basic_sharp, self.basic_discard),
        ):
            if not 0.0 < discard < sharp:
                raise ValueError(f"{name} thresholds must satisfy 0 < discard < sharp")

    def for_product(self, product: ProductType) -> tuple[float, float]:
        """(sharp, discard) cut points for the given product type."""
        if product is ProductType.ORTHO:
            return self.ortho_sharp, self.ortho_discard
        return self.basic_sharp, self.basic_discard


DEFAULT_THRESHOLDS = Thresholds()


def sharpness(kernel: Kernel) -> float:
    """l2 norm of a unit-mass kernel: 1 for a delta, 1/n for uniform n x n."""
    w = np.asarray(kernel.weights, dtype=np.float64)
    if abs(float(w.sum()) - 1.0) > SCORE_MASS_TOL:
        raise ValueError(f"kernel l1 mass must be 1, got {float(w.sum())!r}")
    return float(math.sqrt(float((w * w).sum())))


def classify(
    score: float,
    product: ProductType,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> QualityClass:
    """Map a score to a verdict using the product's cut points.

    Boundary semantics: scores strictly above the sharp cut are SHARP,
    strictly below the discard cut are DISCARD, and everything in the closed
    band [discard, sharp] is DEBLURRABLE.
    """
    if not math.isfinite(score) or not 0.0 < score <= 1.0:
        raise ValueError(f"score must lie in (0, 1], got {score!r}")
    sharp, discard = thresholds.for_product(product)
    if score < discard:
        return QualityClass.DISCARD
    if score > sharp:
        return QualityClass.SHARP
    return QualityClass.DEBLURRABLE


@dataclass(frozen=True)
class SharpnessReport:
    """Scoring outcome for one image."""

    image_id: str
    satellite_id: str
    product: ProductType
    score: float
    quality: QualityClass
    acquired: _dt.date
    kernel: Kernel
    used_fallback: bool = False

    def __post_init__(self):
        if abs(self.score - sharpness(self.kernel)) > 1e-12:
            raise ValueError("score does not match the kernel's l2 norm")

    def to_dict(self) -> dict:
        """JSON-ready mapping (kernel weights included as nested lists)."""
        return {
            "image_id": self.image_id,
            "satellite_id": self.satellite_id,
            "product": self.product.value,
            "score": self.score,
            "class": self.quality.label,
            "acquired": self.acquired.isoformat(),
            "used_fallback": self.used_fallback,
            "kernel": [[float(v) for v in row] for row in self.kernel.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SharpnessReport":
        return cls(
            image_id=d["image_id"],
            satellite_id=d["satellite_id"],
            product=ProductType.parse(d["product"]),
            score=float(d["score"]),
            quality=QualityClass.parse(d["class"]),
            acquired=_dt.date.fromisoformat(d["acquired"]),
            kernel=Kernel(np.array(d["kernel"], dtype=np.float64)),
            used_fallback=bool(d.get("used_fallback", False)),
        )
