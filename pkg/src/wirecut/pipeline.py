"""The seven-stage processing pipeline from raw scan to representative signal.

Stage order: boundary erosion, despiking, trend removal, imputation,
rotation, dewarping, signal extraction. Each stage is pure; the runner
threads the surface through and collects per-stage statistics in a report
dict. With ``dump_dir`` set, every intermediate surface is written as a
text matrix along with plot-ready CSVs (polygon, angle density, shift
profile) and PGM masks.
"""
from __future__ import annotations

import csv
import os

import numpy as np

from .boundary import (concave_hull, erode_to_interior, interior_mask,
                       trace_boundary)
from .despike import drop_spikes
from .detrend import detrend as _fit_and_remove_trend
from .dewarp import apply_shifts, compute_shifts
from .impute import impute_surface
from .orient import (difference_masks, hough_angle_density, mask_points,
                     rotate_surface)
from .signals import extract_signal, write_signal_csv
from .x3p import write_matrix_text
from .errors import WirecutError
from .surface import PipelineParams

STAGES = ("boundary", "despike", "detrend", "impute",
          "orient", "dewarp", "signal")


class StageFailure(WirecutError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def write_pgm(grid, path, maxval=255):
    """Write a boolean or [0, 1] float grid as a binary PGM image."""
    arr = np.asarray(grid, dtype=np.float64)
    arr = np.nan_to_num(arr, nan=0.0)
    if arr.max() > 1.0:
        arr = arr / arr.max()
    data = (arr * maxval).round().astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n{maxval}\n".encode())
        fh.write(data.tobytes())


def _dump_surface(surface, dump_dir, name):
    if dump_dir is not None:
        write_matrix_text(surface, os.path.join(dump_dir, name))


def run_pipeline(surface, params=None, dump_dir=None, source=None):
    """Run all stages; returns ``(signal, report)``.

    Raises StageFailure on any stage error so callers can report which
    stage broke.
    """
    p = params or PipelineParams()
    if dump_dir is not None:
        os.makedirs(dump_dir, exist_ok=True)
    report = {"params": p.to_dict(), "stages": {}}

    # 1. boundary: outer rim -> fold/hull/unfold polygon -> erosion
    try:
        pts = trace_boundary(surface, fill_holes=True)
        if len(pts) > 4000:    # hull cost is superlinear; the rim is dense
            pts = pts[:: int(np.ceil(len(pts) / 4000))]
        poly = concave_hull(
            pts, concavity=p.concavity,
            fold_radius_scale=p.fold_radius_scale,
            length_threshold=p.length_threshold)
        s1 = erode_to_interior(surface, poly, margin_px=p.margin_px)
        masked = s1.n_missing - surface.n_missing
        report["stages"]["boundary"] = {
            "boundary_points": int(len(pts)),
            "polygon_vertices": int(len(poly.vertices)),
            "cells_masked": int(masked),
            "all_masked_warning": bool(s1.n_observed == 0),
        }
    except WirecutError as e:
        raise StageFailure("boundary", e) from e
    _dump_surface(s1, dump_dir, "stage1_boundary.txt")
    if dump_dir is not None:
        with open(os.path.join(dump_dir, "boundary_polygon.csv"), "w",
                  newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y"])
            for x, y in poly.vertices:
                wr.writerow([f"{x:.17g}", f"{y:.17g}"])

    # 2. despike
    try:
        s2, despike_report = drop_spikes(s1)
        report["stages"]["despike"] = {
            "cells_dropped": despike_report.cells_dropped,
            "fraction": despike_report.fraction,
            "sd_by_count": despike_report.sd_by_count,
        }
    except WirecutError as e:
        raise StageFailure("despike", e) from e
    _dump_surface(s2, dump_dir, "stage2_despike.txt")

    # 3. detrend
    try:
        s3, fit = _fit_and_remove_trend(s2)
        report["stages"]["detrend"] = fit.to_dict()
    except WirecutError as e:
        raise StageFailure("detrend", e) from e
    _dump_surface(s3, dump_dir, "stage3_detrend.txt")

    # 4. impute (inside the boundary polygon only)
    try:
        s4, sweeps = impute_surface(s3, poly, margin_px=p.margin_px)
        report["stages"]["impute"] = {
            "sweeps": sweeps,
            "cells_filled": int(s4.n_observed - _inside_observed(s3, poly)),
        }
    except WirecutError as e:
        raise StageFailure("impute", e) from e
    _dump_surface(s4, dump_dir, "stage4_impute.txt")

    # 5. orient: gradient masks -> Hough -> LOESS MLE -> rotate
    try:
        mask = difference_masks(s4, q=p.diff_quantile)
        # on small scans heavy downsampling can starve the Hough vote;
        # halve it until enough points survive
        downsample = p.downsample
        while downsample > 1 and mask_points(mask, downsample).shape[0] < p.min_mask_points:
            downsample //= 2
        density = hough_angle_density(
            mask, downsample=downsample, n_theta=p.n_theta,
            loess_span=p.loess_span, min_peak_ratio=p.min_peak_ratio)
        s5 = rotate_surface(s4, density.theta_hat)
        report["stages"]["orient"] = {
            "downsample": downsample,
            "theta_hat_deg": float(np.degrees(density.theta_hat)),
            "angle_from_vertical_deg": float(np.degrees(density.angle_from_vertical)),
            "peak_ratio": density.peak_ratio,
            "low_confidence": density.low_confidence,
            "secondary_peaks_deg": [float(np.degrees(t)) for t in density.peaks],
        }
    except WirecutError as e:
        raise StageFailure("orient", e) from e
    _dump_surface(s5, dump_dir, "stage5_rotate.txt")
    if dump_dir is not None:
        write_pgm(mask.decline, os.path.join(dump_dir, "mask_decline.pgm"))
        write_pgm(mask.incline, os.path.join(dump_dir, "mask_incline.pgm"))
        with open(os.path.join(dump_dir, "angle_density.csv"), "w",
                  newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta", "raw_weight", "smoothed_weight"])
            for t, rw, sw in zip(density.thetas, density.raw_weights,
                                 density.weights):
                wr.writerow([f"{t:.17g}", f"{rw:.17g}", f"{sw:.17g}"])

    # 6. dewarp against the column-median base signal
    try:
        s6 = s5
        profile = None
        for _ in range(max(1, p.shift_passes)):
            base = extract_signal(
                s6, min_rows=p.min_rows, stat=p.signal_stat)
            profile = compute_shifts(
                s6, base.values, delta=p.delta,
                keep_curves_for=(s6.h // 2,))
            s6 = apply_shifts(s6, profile)
        shifts = profile.shifts
        report["stages"]["dewarp"] = {
            "passes": max(1, p.shift_passes),
            "rows_shifted": int(np.isfinite(shifts).sum()),
            "rows_unshifted": int(np.isnan(shifts).sum()),
            "mean_abs_shift_px": float(np.nanmean(np.abs(shifts)))
            if np.isfinite(shifts).any() else None,
        }
    except WirecutError as e:
        raise StageFailure("dewarp", e) from e
    _dump_surface(s6, dump_dir, "stage6_dewarp.txt")
    if dump_dir is not None:
        with open(os.path.join(dump_dir, "shift_profile.csv"), "w",
                  newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["row", "shift_px", "n_at_min", "mse_at_min"])
            for i, s in enumerate(profile.shifts):
                wr.writerow([i, "NA" if np.isnan(s) else f"{s:.17g}",
                             int(profile.n_at_min[i]),
                             "NA" if np.isnan(profile.mse_at_min[i])
                             else f"{profile.mse_at_min[i]:.17g}"])
        if profile.mse_curves:
            row, (ks, mses) = next(iter(profile.mse_curves.items()))
            with open(os.path.join(dump_dir, "mse_parabola_samples.csv"), "w",
                      newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["row", "k", "mse"])
                for k, m in zip(ks, mses):
                    wr.writerow([row, int(k),
                                 "NA" if not np.isfinite(m) else f"{m:.17g}"])

    # 7. extract the representative signal
    try:
        sig = extract_signal(
            s6, min_rows=p.min_rows, stat=p.signal_stat, source=source)
        report["stages"]["signal"] = {
            "samples": len(sig),
            "missing": int(np.isnan(sig.values).sum()),
        }
    except WirecutError as e:
        raise StageFailure("signal", e) from e
    if dump_dir is not None:
        write_signal_csv(sig, os.path.join(dump_dir, "stage7_signal.csv"))
    return sig, report


def _inside_observed(surface, poly):
    inside = interior_mask(poly, surface.heights.shape)
    return int((inside & ~surface.missing).sum())
