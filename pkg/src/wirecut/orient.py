"""Striation angle estimation and rotation.

Lag-1 horizontal differences mark the walls of striation valleys; the
extreme-quantile cells form decline/incline masks. A Hough vote over the
pooled masks gives an accumulator A(r, theta); per-theta weights are the
sum over r of A**2 (a plain sum is constant across theta because every
point votes once per column, so only the concentration of votes carries
line information). The weight curve is smoothed by a tricube local-linear
fit (circular in theta) and the argmax is the angle estimate.

Angle conventions: ``thetas`` are line-direction angles in [0, pi), so a
perfectly vertical striation has theta = pi/2 and needs no correction.
``theta - pi/2`` is the tilt from vertical, which is also the rotation
correction applied by :func:`rotate_surface`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AngleOutOfRange, EmptyMask

_QUARTER = np.pi / 2


@dataclass
class GradientMask:
    decline: np.ndarray        # h x (w-1) bool, steepest negative differences
    incline: np.ndarray        # h x (w-1) bool, steepest positive differences
    threshold_lo: float
    threshold_hi: float


def difference_masks(surface, q=0.05):
    """Extreme-quantile masks of the lag-1 horizontal differences.

    Cell (i, j) of a mask refers to the difference F[i, j+1] - F[i, j].
    Quantile ties resolve by strict inequality, so a constant-slope ramp
    produces empty masks.
    """
    if surface.w < 2:
        raise ValueError("need w >= 2 for lag-1 differences")
    if not 0 < q < 0.5:
        raise ValueError("q must lie in (0, 0.5)")
    df = surface.heights[:, 1:] - surface.heights[:, :-1]
    finite = df[np.isfinite(df)]
    if finite.size == 0:
        lo = hi = np.nan
    else:
        lo = float(np.quantile(finite, q))
        hi = float(np.quantile(finite, 1.0 - q))
    with np.errstate(invalid="ignore"):
        decline = df < lo
        incline = df > hi
    return GradientMask(decline=decline, incline=incline,
                        threshold_lo=lo, threshold_hi=hi)


@dataclass
class AngleDensity:
    thetas: np.ndarray         # line-direction angles, [0, pi)
    weights: np.ndarray        # smoothed, normalized to sum 1
    raw_weights: np.ndarray    # unsmoothed, normalized to sum 1
    theta_hat: float
    loess_span: float
    peak_ratio: float
    low_confidence: bool
    peaks: list = field(default_factory=list)   # top-2 local maxima (angles)

    @property
    def angle_from_vertical(self):
        """Tilt of the dominant striation direction, radians."""
        return self.theta_hat - _QUARTER


def hough_accumulator(points, n_theta=720, r_pitch=1.0):
    """Accumulator A(r, theta_normal) from (x, y) points.

    theta_normal spans [-pi/2, pi/2); each point votes exactly once per
    theta column with r = x cos(theta) + y sin(theta), binned at ``r_pitch``.
    Returns (A, r_lo, thetas_normal); bin k of r covers
    r_lo + [k, k+1) * r_pitch.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptyMask("no points to vote")
    thetas = -_QUARTER + np.pi * np.arange(n_theta) / n_theta
    r = pts[:, 0:1] * np.cos(thetas)[None, :] + pts[:, 1:2] * np.sin(thetas)[None, :]
    r_lo = np.floor(r.min() / r_pitch) * r_pitch
    idx = np.floor((r - r_lo) / r_pitch).astype(np.int64)
    n_r = int(idx.max()) + 1
    flat = idx * n_theta + np.arange(n_theta)[None, :]
    acc = np.bincount(flat.ravel(), minlength=n_r * n_theta)
    return acc.reshape(n_r, n_theta).astype(np.float64), float(r_lo), thetas


def _tricube_smooth_circular(y, span):
    """Tricube-weighted smoothing on a uniform circular grid.

    On an evenly spaced circular grid with a symmetric window, the local
    linear LOESS estimate reduces to a weighted moving average (the slope
    term cancels), so this is implemented as a circular convolution.
    """
    n = len(y)
    half = max(1, int(np.ceil(span * n / 2)))
    offsets = np.arange(-half, half + 1)
    u = np.abs(offsets) / (half + 1)
    w = (1 - u ** 3) ** 3
    w /= w.sum()
    padded = np.concatenate([y[-half:], y, y[:half]])
    return np.convolve(padded, w, mode="valid")


def _local_maxima_circular(y):
    prev = np.roll(y, 1)
    nxt = np.roll(y, -1)
    return np.nonzero((y > prev) & (y >= nxt))[0]


def mask_points(mask, downsample=1):
    """(x, y) coordinates of set cells after taking every d-th row/column."""
    sub = (mask.decline | mask.incline)[::downsample, ::downsample]
    rows, cols = np.nonzero(sub)
    return np.column_stack([cols, rows]).astype(float)


def hough_angle_density(mask, downsample=8, n_theta=720, loess_span=0.05,
                        min_peak_ratio=1.5):
    """Angle density from the pooled gradient masks, with LOESS-smoothed MLE."""
    pts = mask_points(mask, downsample)
    if pts.shape[0] == 0:
        raise EmptyMask("gradient masks empty after downsampling")
    acc, _, thetas_normal = hough_accumulator(pts, n_theta=n_theta)
    base = (acc ** 2).sum(axis=0)
    raw = base
    # The squared sum carries a structureless floor of N + N(N-1)/W(theta),
    # where W is the occupied r-width; W varies with theta on a rectangular
    # grid, which would bias the argmax toward the short grid axis, so the
    # floor is subtracted to leave only the excess vote concentration.
    n_pts = float(pts.shape[0])
    occupied = acc > 0
    idx = np.arange(acc.shape[0])[:, None]
    r_hi = np.max(np.where(occupied, idx, -1), axis=0)
    r_lo = np.min(np.where(occupied, idx, acc.shape[0]), axis=0)
    width = np.maximum(r_hi - r_lo + 1.0, 1.0)
    floor = n_pts + n_pts * (n_pts - 1.0) / width
    excess = np.maximum(raw - floor, 0.0)
    # confidence: peak/mean of the concentration curve with the per-theta
    # geometric floor replaced by its mean, so grid-shape variation cannot
    # masquerade as a peak. Isotropic masks show only sampling fluctuation
    # above the floor (ratio near 1); striated masks concentrate votes and
    # push the peak well past the default 1.5 threshold.
    level = floor.mean() + excess
    peak_ratio = float(level.max() / level.mean())
    raw = excess
    if raw.sum() <= 0:
        raw = base.astype(np.float64)
    raw = raw / raw.sum()
    smooth = _tricube_smooth_circular(raw, loess_span)
    smooth = smooth / smooth.sum()

    thetas_line = np.mod(thetas_normal + _QUARTER, np.pi)
    # sort into increasing line-angle order for reporting
    order = np.argsort(thetas_line)
    thetas_line = thetas_line[order]
    raw = raw[order]
    smooth = smooth[order]

    k = int(np.argmax(smooth))
    maxima = _local_maxima_circular(smooth)
    maxima = maxima[np.argsort(smooth[maxima])[::-1]][:2]
    return AngleDensity(thetas=thetas_line, weights=smooth, raw_weights=raw,
                        theta_hat=float(thetas_line[k]), loess_span=loess_span,
                        peak_ratio=peak_ratio,
                        low_confidence=peak_ratio < min_peak_ratio,
                        peaks=[float(thetas_line[m]) for m in maxima])


def _wrap_correction(theta_hat):
    """Tilt from vertical folded into (-pi/2, pi/2]."""
    corr = np.mod(theta_hat - _QUARTER + _QUARTER, np.pi) - _QUARTER
    return float(corr)


def rotate_surface(surface, theta_hat, max_correction=np.pi / 4):
    """Rotate about the grid center so the detected line direction is vertical.

    Bilinear interpolation with missing-poisoning: any sample whose 2x2
    support touches a missing or out-of-grid cell becomes missing. The
    output grid is the axis-aligned bounding box of the rotated extent.
    Corrections of exactly 0 or +-90 degrees are handled cell-exactly;
    otherwise the correction must satisfy |correction| <= max_correction.
    """
    corr = _wrap_correction(theta_hat)
    eps = 1e-12
    if abs(corr) < eps:
        return surface.copy()
    if abs(abs(corr) - _QUARTER) < eps:
        k = 1 if corr > 0 else -1
        return surface.with_heights(np.rot90(surface.heights, k=k).copy())
    if abs(corr) > max_correction:
        raise AngleOutOfRange(
            f"correction {np.degrees(corr):.1f} deg exceeds "
            f"{np.degrees(max_correction):.1f} deg")

    h, w = surface.h, surface.w
    ci = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    c, s = np.cos(corr), np.sin(corr)
    fwd = np.array([[c, s], [-s, c]])      # R(-corr): input -> output
    inv = np.array([[c, -s], [s, c]])      # R(+corr): output -> input

    corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], float)
    rc = (corners - ci) @ fwd.T
    lo = rc.min(axis=0)
    hi = rc.max(axis=0)
    out_w = int(np.ceil(hi[0] - lo[0])) + 1
    out_h = int(np.ceil(hi[1] - lo[1])) + 1

    jj, ii = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    px = jj + lo[0]
    py = ii + lo[1]
    vx = inv[0, 0] * px + inv[0, 1] * py + ci[0]
    vy = inv[1, 0] * px + inv[1, 1] * py + ci[1]

    x0 = np.floor(vx).astype(np.int64)
    y0 = np.floor(vy).astype(np.int64)
    fx = vx - x0
    fy = vy - y0
    valid = (x0 >= 0) & (x0 + 1 <= w - 1) & (y0 >= 0) & (y0 + 1 <= h - 1)
    x0c = np.clip(x0, 0, w - 2)
    y0c = np.clip(y0, 0, h - 2)
    g = surface.heights
    v00 = g[y0c, x0c]
    v01 = g[y0c, x0c + 1]
    v10 = g[y0c + 1, x0c]
    v11 = g[y0c + 1, x0c + 1]
    out = ((1 - fy) * ((1 - fx) * v00 + fx * v01)
           + fy * ((1 - fx) * v10 + fx * v11))
    out[~valid] = np.nan       # NaN corners poison the sum automatically
    return surface.with_heights(out)
