"""Striation signal extraction and comparison for wire-cut surface scans."""

from .surface import (PairCategory, PipelineParams, ScanLabel, SurfaceMatrix,
                      all_labels, pair_category, parse_label, render_label)
from .x3p import (X3pMeta, read_matrix_text, read_x3p, write_matrix_text,
                  write_x3p)
from .boundary import (BoundaryPolygon, concave_hull, erode_to_interior,
                       trace_boundary)
from .despike import drop_spikes, local_sd, missing_neighbor_counts
from .detrend import TrendFit, detrend, fit_trend, remove_trend
from .impute import impute_surface
from .orient import (AngleDensity, GradientMask, difference_masks,
                     hough_angle_density, rotate_surface)
from .dewarp import ShiftProfile, apply_shifts, compute_shifts
from .signals import (ComparisonResult, RocSummary, Signal, batch_compare,
                      ccf_curve, ccf_max, extract_signal, read_results_csv,
                      read_signal_csv, roc, write_results_csv, write_roc_csv,
                      write_signal_csv)
from .synth import GroundTruth, SynthSpec, generate, make_pair
from .pipeline import run_pipeline

__version__ = "0.1.0"

__all__ = [
    "SurfaceMatrix", "ScanLabel", "PairCategory", "PipelineParams",
    "parse_label", "render_label", "pair_category", "all_labels",
    "X3pMeta", "read_x3p", "write_x3p", "read_matrix_text", "write_matrix_text",
    "BoundaryPolygon", "trace_boundary", "concave_hull", "erode_to_interior",
    "missing_neighbor_counts", "local_sd", "drop_spikes",
    "TrendFit", "fit_trend", "remove_trend", "detrend",
    "impute_surface",
    "GradientMask", "AngleDensity", "difference_masks", "hough_angle_density",
    "rotate_surface",
    "ShiftProfile", "compute_shifts", "apply_shifts",
    "Signal", "ComparisonResult", "RocSummary", "extract_signal", "ccf_max",
    "ccf_curve", "batch_compare", "roc",
    "read_signal_csv", "write_signal_csv", "read_results_csv",
    "write_results_csv", "write_roc_csv",
    "SynthSpec", "GroundTruth", "generate", "make_pair",
    "run_pipeline",
]
