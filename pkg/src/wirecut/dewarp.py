"""Row-wise shift estimation and application for straightening striations.

For every row i and integer lag k in [-delta, delta], MSE_ik is the mean
squared difference between the base signal f0[j] and the row sampled at
j + k, over positions where both are observed. The integer minimizer k* is
refined to sub-pixel precision by fitting a parabola through the MSE at
(k*-1, k*, k*+1); boundary minimizers keep +-delta unrefined. Applying a
shift resamples the row at x + shift by linear interpolation, so a row that
equals the base displaced by d pixels gets shift -d and comes back aligned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BaseLengthMismatch


@dataclass
class ShiftProfile:
    shifts: np.ndarray          # (h,), NaN where the row had no usable overlap
    delta: int
    n_at_min: np.ndarray = None     # overlap count at the chosen integer lag
    mse_at_min: np.ndarray = None
    mse_curves: dict = None         # row -> (ks, mses), only for requested rows


def parabola_vertex(a, b, c):
    """Abscissa of the vertex of the parabola through (-1,a), (0,b), (1,c).

    Returns 0 for a degenerate (flat or concave) triple.
    """
    denom = a - 2.0 * b + c
    if denom <= 0:
        return 0.0
    return (a - c) / (2.0 * denom)


def _base_values(base, w):
    vals = np.asarray(getattr(base, "values", base), dtype=np.float64)
    if vals.ndim != 1 or len(vals) != w:
        raise BaseLengthMismatch(f"base has {vals.size} samples, surface width is {w}")
    return vals


def compute_shifts(surface, base, delta=50, min_overlap=None, keep_curves_for=()):
    """Per-row sub-pixel shifts minimizing the MSE against ``base``.

    ``min_overlap`` defaults to max(30, 0.1 * w); rows where no lag reaches
    it carry a NaN shift.
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    H = surface.heights
    h, w = H.shape
    f0 = _base_values(base, w)
    if min_overlap is None:
        min_overlap = max(30, int(np.ceil(0.1 * w)))

    ks = np.arange(-delta, delta + 1)
    mse = np.full((h, len(ks)), np.inf)
    nik = np.zeros((h, len(ks)), dtype=np.int64)
    for col, k in enumerate(ks):
        j0 = max(0, -k)
        j1 = min(w, w - k)
        if j1 - j0 <= 0:
            continue
        diff = f0[j0:j1][None, :] - H[:, j0 + k:j1 + k]
        sq = diff ** 2
        n = np.sum(~np.isnan(sq), axis=1)
        with np.errstate(invalid="ignore"):
            m = np.nansum(sq, axis=1) / n
        ok = n >= min_overlap
        mse[ok, col] = m[ok]
        nik[:, col] = n

    shifts = np.full(h, np.nan)
    n_at_min = np.zeros(h, dtype=np.int64)
    mse_at_min = np.full(h, np.nan)
    curves = {}
    for i in range(h):
        row = mse[i]
        if not np.isfinite(row).any():
            continue
        c = int(np.argmin(row))
        k_star = int(ks[c])
        if c == 0 or c == len(ks) - 1 or row[c] == 0.0:
            shift = float(k_star)     # boundary lag or exact integer match
        else:
            a, b, cc = row[c - 1], row[c], row[c + 1]
            if not (np.isfinite(a) and np.isfinite(cc)):
                shift = float(k_star)
            else:
                shift = k_star + parabola_vertex(a, b, cc)
        shifts[i] = float(np.clip(shift, -delta, delta))
        n_at_min[i] = nik[i, c]
        mse_at_min[i] = row[c]
        if i in keep_curves_for:
            curves[i] = (ks.copy(), row.copy())
    return ShiftProfile(shifts=shifts, delta=delta, n_at_min=n_at_min,
                        mse_at_min=mse_at_min, mse_curves=curves or None)


def apply_shifts(surface, profile):
    """Resample each row at x + shift; rows with NaN shift pass through.

    Integer shifts reduce to an exact column translation. Samples needing a
    missing or out-of-grid source become missing.
    """
    H = surface.heights
    h, w = H.shape
    if len(profile.shifts) != h:
        raise BaseLengthMismatch(
            f"profile has {len(profile.shifts)} rows, surface has {h}")
    out = np.full_like(H, np.nan)
    x = np.arange(w, dtype=np.float64)
    for i in range(h):
        s = profile.shifts[i]
        if np.isnan(s):
            out[i] = H[i]
            continue
        xi = x + s
        x0 = np.floor(xi).astype(np.int64)
        f = xi - x0
        exact = f < 1e-12
        # exact samples need only one source cell, fractional ones need two
        v = np.full(w, np.nan)
        ok0 = (x0 >= 0) & (x0 <= w - 1)
        idx0 = np.clip(x0, 0, w - 1)
        src0 = H[i, idx0]
        sel = exact & ok0
        v[sel] = src0[sel]
        ok1 = (x0 >= 0) & (x0 + 1 <= w - 1)
        idx1 = np.clip(x0 + 1, 0, w - 1)
        src1 = H[i, idx1]
        sel = ~exact & ok1
        v[sel] = (1 - f[sel]) * src0[sel] + f[sel] * src1[sel]
        out[i] = v
    return surface.with_heights(out)
