"""Certified knot-elimination compression for Kolmogorov-Arnold networks."""

from .approx import FitMethod, MergeCertificate, certified_sup_error, fit_poly, spline_gap, try_merge
from .compressor import (
    CompressionConfig,
    CompressionReport,
    allocate_budgets,
    compress_network,
    compress_spline,
    verify_equivalence,
)
from .network import (
    KanLayer,
    KanNetwork,
    SyntheticSpec,
    exact_first_layer_partition,
    forward,
    generate_synthetic,
    load_model,
    region_bound,
    save_model,
)
from .poly import Interval, Polynomial
from .spline import BsplineDescriptor, PiecewiseSpline, from_bspline

__version__ = "0.1.0"

__all__ = [
    "BsplineDescriptor",
    "CompressionConfig",
    "CompressionReport",
    "FitMethod",
    "Interval",
    "KanLayer",
    "KanNetwork",
    "MergeCertificate",
    "PiecewiseSpline",
    "Polynomial",
    "SyntheticSpec",
    "allocate_budgets",
    "certified_sup_error",
    "compress_network",
    "compress_spline",
    "exact_first_layer_partition",
    "fit_poly",
    "forward",
    "from_bspline",
    "generate_synthetic",
    "load_model",
    "region_bound",
    "save_model",
    "spline_gap",
    "try_merge",
    "verify_equivalence",
]
