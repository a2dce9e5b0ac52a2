"""Blind sharpness assessment for satellite imagery.

Estimate an image's blur kernel with no reference data, score its sharpness
by the kernel's l2 norm, classify or deblur it, and aggregate scores into
per-satellite fleet statistics.
"""

from .blind import (
    EstimationConfig,
    EstimationResult,
    estimate_kernel,
    kernel_update,
    l0_latent_update,
    solve_kernel,
)
from .config import RunConfig, load_config, parse_config
from .errors import (
    DivergenceError,
    InsufficientStructureError,
    InvalidKernelError,
    SatsharpError,
)
from .fleet import (
    AnovaResult,
    FleetRecord,
    FleetSummary,
    Histogram,
    SatelliteStats,
    aggregate,
    anova_f,
    filter_valid,
    histogram,
    read_records_csv,
    summary_from_dict,
    summary_to_dict,
)
from .imageio import decode, read_raster, write_raster
from .kernel import (
    Kernel,
    delta,
    gaussian,
    load_kernel_text,
    project_kernel,
    render_kernel_png,
    save_kernel_text,
)
from .raster import (
    BoundaryMode,
    EdgeReplicatePad,
    GradientField,
    Periodic,
    Raster,
    build_pyramid,
    convolve,
    crop,
    gradient,
    resize_bilinear,
    synthesize,
    to_grayscale,
)
from .score import (
    ProductType,
    QualityClass,
    SharpnessReport,
    Thresholds,
    classify,
    sharpness,
)
from .tv import DeconvConfig, deblur, shrink

__version__ = "0.1.0"

__all__ = [
    "AnovaResult",
    "BoundaryMode",
    "DeconvConfig",
    "DivergenceError",
    "EdgeReplicatePad",
    "EstimationConfig",
    "EstimationResult",
    "FleetRecord",
    "FleetSummary",
    "GradientField",
    "Histogram",
    "InsufficientStructureError",
    "InvalidKernelError",
    "Kernel",
    "Periodic",
    "ProductType",
    "QualityClass",
    "Raster",
    "RunConfig",
    "SatelliteStats",
    "SatsharpError",
    "SharpnessReport",
    "Thresholds",
    "aggregate",
    "anova_f",
    "build_pyramid",
    "classify",
    "convolve",
    "crop",
    "deblur",
    "decode",
    "delta",
    "estimate_kernel",
    "filter_valid",
    "gaussian",
    "gradient",
    "histogram",
    "kernel_update",
    "l0_latent_update",
    "load_config",
    "load_kernel_text",
    "parse_config",
    "project_kernel",
    "read_raster",
    "read_records_csv",
    "render_kernel_png",
    "resize_bilinear",
    "save_kernel_text",
    "sharpness",
    "shrink",
    "solve_kernel",
    "summary_from_dict",
    "summary_to_dict",
    "synthesize",
    "to_grayscale",
    "write_raster",
]
