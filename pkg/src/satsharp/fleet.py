"""Constellation-level statistics over per-image sharpness records.

Per-satellite mean/std with a minimum-sample filter, score histograms, and a
one-way ANOVA F-test of equal per-satellite means, plus the CSV/JSON formats
the CLI exchanges.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from .score import DEFAULT_THRESHOLDS, ProductType, QualityClass, Thresholds

CSV_HEADER = ["image_id", "satellite_id", "product", "score", "class", "acquired"]

DEFAULT_MIN_SAMPLES = 50
DEFAULT_BIN_WIDTH = 0.001
DEFAULT_BOUNDS = (0.0, 0.06)

# Sums of squares at or below (this * data scale)^2 per sample are rounding
# noise from the mean subtraction, not real variance.
_ZERO_DEV_REL = 2.0 ** -40


@dataclass(frozen=True)
class FleetRecord:
    """One scored image."""

    image_id: str
    satellite_id: str
    product: ProductType
    score: float
    quality: QualityClass
    acquired: _dt.date

    def __post_init__(self):
        if not math.isfinite(self.score) or not 0.0 < self.score <= 1.0:
            raise ValueError(f"score must lie in (0, 1], got {self.score!r}")


@dataclass(frozen=True)
class SatelliteStats:
    satellite_id: str
    count: int
    mean: float
    std: float


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


@dataclass(frozen=True)
class FleetSummary:
    """Aggregates over one set of records, satellites sorted by mean score."""

    per_satellite: tuple[SatelliteStats, ...]
    histograms: dict[str, Histogram]
    anova: AnovaResult | None = None


def filter_valid(
    records: Iterable[FleetRecord],
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> list[FleetRecord]:
    """Drop records scoring below the discard cut for their product type.

    Estimation failures collapse onto a low-score mode, so the discard cut
    doubles as the invalid-image filter. The boundary is exclusive: a score
    exactly at the cut is kept.
    """
    out = []
    for r in records:
        _, discard = thresholds.for_product(r.product)
        if r.score >= discard:
            out.append(r)
    return out


def histogram(
    scores: Sequence[float],
    bin_width: float = DEFAULT_BIN_WIDTH,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> Histogram:
    """Fixed-width histogram with left-closed right-open bins.

    Out-of-range scores clamp into the end bins, so counts always sum to the
    input size. Values sitting on an edge within 1e-9 of the bin ratio are
    snapped up so that e.g. 0.030 lands in [0.030, 0.031) despite binary
    rounding of the inputs.
    """
    lo, hi = bounds
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if hi <= lo:
        raise ValueError("bounds must satisfy lo < hi")
    nbins = max(1, int(round((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(nbins + 1)
    if len(scores) == 0:
        return Histogram(tuple(float(e) for e in edges), (0,) * nbins)
    ratio = (np.asarray(scores, dtype=np.float64) - lo) / bin_width
    idx = np.clip(np.floor(ratio + 1e-9).astype(int), 0, nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return Histogram(tuple(float(e) for e in edges), tuple(int(c) for c in counts))


def aggregate(
    records: Sequence[FleetRecord],
    min_samples: int = DEFAULT_MIN_SAMPLES,
    bin_width: float = DEFAULT_BIN_WIDTH,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> FleetSummary:
    """Group records by satellite and summarize the surviving groups.

    Satellites with fewer than min_samples records are dropped entirely.
    Means use the arithmetic mean, stds the sample (n-1) standard deviation
    (0 for a single record). Output is sorted ascending by mean score with
    satellite_id as the tie-break. Histograms cover the retained records,
    one per product type present. The anova field is left None; run anova_f
    on the per-satellite score groups to fill it.
    """
    if min_samples < 1:
        raise ValueError("min_samples must be at least 1")
    groups: dict[str, list[FleetRecord]] = {}
    for r in records:
        groups.setdefault(r.satellite_id, []).append(r)
    kept = {sid: rs for sid, rs in groups.items() if len(rs) >= min_samples}
    if not kept:
        raise ValueError(f"no satellite passing min_samples={min_samples}")

    stats = []
    for sid, rs in kept.items():
        scores = np.array([r.score for r in rs], dtype=np.float64)
        std = float(np.std(scores, ddof=1)) if scores.size > 1 else 0.0
        stats.append(SatelliteStats(sid, int(scores.size), float(scores.mean()), std))
    stats.sort(key=lambda s: (s.mean, s.satellite_id))

    retained = [r for rs in kept.values() for r in rs]
    hists = {}
    for product in ProductType:
        subset = [r.score for r in retained if r.product is product]
        if subset:
            hists[product.value] = histogram(subset, bin_width, bounds)
    return FleetSummary(per_satellite=tuple(stats), histograms=hists, anova=None)


def anova_f(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA F-test of equal group means.

    F = MS_between / MS_within; the p-value is the F(df_between, df_within)
    survival probability, computed through the regularized incomplete beta
    function. Degenerate spreads: zero within-variance with spread means
    reports F = +inf with p = 0; all groups constant and equal reports F = 0
    with p = 1.
    """
    if len(groups) < 2:
        raise ValueError("≥2 groups required")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    for a in arrays:
        if a.ndim != 1 or a.size < 2:
            raise ValueError("each group needs at least 2 samples")
        if not np.all(np.isfinite(a)):
            raise ValueError("groups contain non-finite samples")

    sizes = np.array([a.size for a in arrays], dtype=np.float64)
    total = float(sizes.sum())
    means = np.array([float(a.mean()) for a in arrays])
    grand = float((sizes * means).sum() / total)
    ss_between = float((sizes * (means - grand) ** 2).sum())
    ss_within = float(sum(((a - m) ** 2).sum() for a, m in zip(arrays, means)))

    # Snap rounding noise to an exact zero so constant inputs hit the
    # documented F=0 / F=inf branches instead of dividing fp residue.
    scale = max(float(np.abs(a).max()) for a in arrays)
    noise_floor = total * (_ZERO_DEV_REL * scale) ** 2
    if ss_between <= noise_floor:
        ss_between = 0.0
    if ss_within <= noise_floor:
        ss_within = 0.0

    df_between = len(arrays) - 1
    df_within = int(total) - len(arrays)
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        if ms_between == 0.0:
            return AnovaResult(0.0, df_between, df_within, 1.0)
        return AnovaResult(math.inf, df_between, df_within, 0.0)
    f_stat = ms_between / ms_within
    x = df_within / (df_within + df_between * f_stat)
    p = float(special.betainc(df_within / 2.0, df_between / 2.0, x))
    return AnovaResult(float(f_stat), df_between, df_within, p)


def read_records_csv(path: str | Path) -> list[FleetRecord]:
    """Load scored-image records; rows marked class=error are skipped."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ValueError(f"cannot read records CSV {p}: {e}") from e
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"malformed records CSV {p}: empty file") from None
    if header != CSV_HEADER:
        raise ValueError(f"malformed records CSV {p}: header {header!r}, expected {CSV_HEADER!r}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"malformed records CSV {p}: line {lineno} has {len(row)} fields")
        image_id, satellite_id, product, score, quality, acquired = row
        if quality == "error":
            continue
        try:
            out.append(FleetRecord(
                image_id=image_id,
                satellite_id=satellite_id,
                product=ProductType.parse(product),
                score=float(score),
                quality=QualityClass.parse(quality),
                acquired=_dt.date.fromisoformat(acquired),
            ))
        except ValueError as e:
            raise ValueError(f"malformed records CSV {p}: line {lineno}: {e}") from e
    return out


def record_to_row(record: FleetRecord) -> list[str]:
    """CSV row for a record; the score uses repr for lossless round-trips."""
    return [
        record.image_id,
        record.satellite_id,
        record.product.value,
        repr(float(record.score)),
        record.quality.label,
        record.acquired.isoformat(),
    ]


def anova_to_dict(a: AnovaResult | None) -> dict | None:
    if a is None:
        return None
    return {
        "f_stat": "inf" if math.isinf(a.f_stat) else a.f_stat,
        "df_between": a.df_between,
        "df_within": a.df_within,
        "p_value": a.p_value,
    }


def anova_from_dict(d: dict | None) -> AnovaResult | None:
    if d is None:
        return None
    return AnovaResult(
        f_stat=float(d["f_stat"]),
        df_between=int(d["df_between"]),
        df_within=int(d["df_within"]),
        p_value=float(d["p_value"]),
    )


def summary_to_dict(summary: FleetSummary) -> dict:
    """JSON-ready mapping for one FleetSummary."""
    return {
        "per_satellite": [
            {"satellite_id": s.satellite_id, "count": s.count, "mean": s.mean, "std": s.std}
            for s in summary.per_satellite
        ],
        "histograms": {
            product: {"edges": list(h.edges), "counts": list(h.counts)}
            for product, h in summary.histograms.items()
        },
        "anova": anova_to_dict(summary.anova),
    }


def summary_from_dict(d: dict) -> FleetSummary:
    return FleetSummary(
        per_satellite=tuple(
            SatelliteStats(s["satellite_id"], int(s["count"]), float(s["mean"]), float(s["std"]))
            for s in d["per_satellite"]
        ),
        histograms={
            product: Histogram(tuple(float(e) for e in h["edges"]),
                               tuple(int(c) for c in h["counts"]))
            for product, h in d["histograms"].items()
        },
        anova=anova_from_dict(d.get("anova")),
    )
