"""Spike removal near dropouts and the sd-vs-missing-neighbors diagnostic.

A cell is dropped when its 3x3 window (including itself; out-of-grid
positions count as missing) contains any missing value. Cells adjacent to
dropouts show strongly inflated local variability, which is what this
filter targets.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .surface import SurfaceMatrix

_OFFSETS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]


def _padded(grid, fill):
    return np.pad(grid, 1, mode="constant", constant_values=fill)


def _window_sum(grid):
    """Sum over each 3x3 window (grid pre-padded by caller semantics)."""
    p = grid
    h, w = p.shape[0] - 2, p.shape[1] - 2
    out = np.zeros((h, w), dtype=p.dtype)
    for di, dj in _OFFSETS:
        out += p[1 + di:1 + di + h, 1 + dj:1 + dj + w]
    return out


def missing_neighbor_counts(surface):
    """Per-cell count of missing values in the 3x3 window, including self.

    Out-of-grid positions count as missing, so the grid border always has a
    positive count.
    """
    miss = _padded(surface.missing.astype(np.int64), 1)
    return _window_sum(miss)


def local_sd(surface):
    """Per-cell sample sd (n-1) of the non-missing 3x3 window values.

    NaN where fewer than 2 values are available.
    """
    h_ = surface.heights
    obs = _padded((~np.isnan(h_)).astype(np.float64), 0.0)
    vals = _padded(np.nan_to_num(h_, nan=0.0), 0.0)
    n = _window_sum(obs)
    s1 = _window_sum(vals)
    s2 = _window_sum(vals ** 2)
    out = np.full(h_.shape, np.nan)
    ok = n >= 2
    var = np.zeros_like(out)
    var[ok] = (s2[ok] - s1[ok] ** 2 / n[ok]) / (n[ok] - 1)
    out[ok] = np.sqrt(np.maximum(var[ok], 0.0))
    return out


@dataclass
class DespikeReport:
    cells_dropped: int
    fraction: float                      # of previously observed cells
    sd_by_count: dict = field(default_factory=dict)  # count -> [min,q25,med,q75,max]

    def to_json(self, **kw):
        return json.dumps({"cells_dropped": self.cells_dropped,
                           "fraction": self.fraction,
                           "sd_by_count": self.sd_by_count}, **kw)


def sd_by_count_summary(surface):
    """Boxplot-ready quartile summary of local sd grouped by missing count."""
    counts = missing_neighbor_counts(surface)
    sd = local_sd(surface)
    valid = ~np.isnan(sd) & ~surface.missing
    summary = {}
    for c in range(10):
        sel = sd[valid & (counts == c)]
        if sel.size:
            qs = np.quantile(sel, [0.0, 0.25, 0.5, 0.75, 1.0])
            summary[c] = [float(q) for q in qs]
    return summary


def drop_spikes(surface, with_diagnostic=True):
    """Mask every cell whose 3x3 window touches a missing value.

    Returns the filtered surface and a report with the number and fraction
    of newly-missing cells (fraction relative to the observed cells).
    """
    counts = missing_neighbor_counts(surface)
    was_observed = ~surface.missing
    drop = was_observed & (counts > 0)
    out = surface.heights.copy()
    out[drop] = np.nan
    n_obs = int(was_observed.sum())
    report = DespikeReport(
        cells_dropped=int(drop.sum()),
        fraction=float(drop.sum() / n_obs) if n_obs else 0.0,
        sd_by_count=sd_by_count_summary(surface) if with_diagnostic else {})
    return surface.with_heights(out), report
