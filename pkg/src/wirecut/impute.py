"""Iterative 3x3-mean imputation restricted to the boundary polygon.

Sweeps are Jacobi-style: every fill in a sweep reads only the previous
sweep's state, so the result is deterministic and order-independent. Each
sweep fills the frontier of every hole by one ring: one Chebyshev unit,
since the window is 3x3. A small disk-shaped hole of radius rho closes in
rho sweeps; for large disks the diagonal reach wins and the count drops to
floor(rho / sqrt(2)) + 1. Cells outside the
polygon stay missing because filling them would be extrapolation.
"""
from __future__ import annotations

import numpy as np

from .boundary import _edge_proximity_mask, interior_mask
from .errors import NoSupport

_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)
            if (di, dj) != (0, 0)]


def _neighbor_mean(heights):
    """Mean of the 8 non-missing neighbors; NaN where no neighbor observed."""
    obs = np.pad(~np.isnan(heights), 1, constant_values=False).astype(np.float64)
    vals = np.pad(np.nan_to_num(heights, nan=0.0), 1, constant_values=0.0)
    h, w = heights.shape
    n = np.zeros((h, w))
    s = np.zeros((h, w))
    for di, dj in _OFFSETS:
        n += obs[1 + di:1 + di + h, 1 + dj:1 + dj + w]
        s += vals[1 + di:1 + di + h, 1 + dj:1 + dj + w]
    with np.errstate(invalid="ignore"):
        mean = s / n
    mean[n == 0] = np.nan
    return mean


def impute_surface(surface, poly, margin_px=0):
    """Fill all missing cells inside ``poly``; mask everything outside.

    ``margin_px`` shrinks the fill region by the same edge proximity rule
    the erosion stage uses, so cells masked as untrusted rim are not
    resurrected with extrapolated values.

    Returns ``(filled_surface, n_sweeps)``. Raises NoSupport when some
    region inside the polygon has no observed seed to grow from.
    """
    inside = interior_mask(poly, surface.heights.shape)
    if margin_px > 0:
        inside &= ~_edge_proximity_mask(poly, surface.heights.shape, margin_px)
    heights = surface.heights.copy()
    heights[~inside] = np.nan
    if not np.isfinite(heights).any():
        raise NoSupport("no observed values inside the polygon")

    sweeps = 0
    target = inside & np.isnan(heights)
    while target.any():
        mean = _neighbor_mean(heights)
        fill = target & ~np.isnan(mean)
        if not fill.any():
            raise NoSupport(
                f"{int(target.sum())} cells inside the polygon are unreachable "
                "from any observed value")
        heights[fill] = mean[fill]
        target &= ~fill
        sweeps += 1
    return surface.with_heights(heights), sweeps
