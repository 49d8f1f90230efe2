"""Quadratic-with-interaction trend removal.

The dome/positioning trend is fit by least squares over all observed cells
with the basis (1, x, x^2, y, y^2, xy); the residual surface replaces the
heights. Coordinates are centered and scaled to [-1, 1] before fitting so
the design stays well conditioned on large grids; the reported coefficients
live in that normalized basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient


@dataclass
class TrendFit:
    beta: np.ndarray      # (6,) coefficients for 1, x, x^2, y, y^2, xy
    rss: float
    n: int
    # normalization used internally: xn = (x - center) / scale
    x_center: float = 0.0
    x_scale: float = 1.0
    y_center: float = 0.0
    y_scale: float = 1.0

    def to_dict(self):
        return {"beta": [float(b) for b in self.beta],
                "rss": float(self.rss), "n": int(self.n)}


def _normalized_coords(surface):
    x = np.arange(surface.w, dtype=np.float64)
    y = np.arange(surface.h, dtype=np.float64)
    xc, yc = x.mean(), y.mean()
    xs = max((x.max() - x.min()) / 2.0, 1.0)
    ys = max((y.max() - y.min()) / 2.0, 1.0)
    return (x - xc) / xs, (y - yc) / ys, (xc, xs, yc, ys)


def _design(xn, yn):
    X, Y = np.meshgrid(xn, yn)
    return np.column_stack([np.ones(X.size), X.ravel(), X.ravel() ** 2,
                            Y.ravel(), Y.ravel() ** 2, (X * Y).ravel()])


def fit_trend(surface):
    """Least-squares quadratic trend fit over the observed cells."""
    obs = ~surface.missing
    if obs.sum() < 6:
        raise RankDeficient("need at least 6 observed cells")
    cols = np.nonzero(obs.any(axis=0))[0]
    rows = np.nonzero(obs.any(axis=1))[0]
    if cols.size < 3 or rows.size < 3:
        raise RankDeficient("observed cells must span >= 3 distinct x and y")

    xn, yn, (xc, xs, yc, ys) = _normalized_coords(surface)
    A = _design(xn, yn)[obs.ravel()]
    z = surface.heights[obs]
    beta, _, rank, _ = np.linalg.lstsq(A, z, rcond=None)
    if rank < 6:
        raise RankDeficient(f"design rank {rank} < 6")
    resid = z - A @ beta
    return TrendFit(beta=beta, rss=float(resid @ resid), n=int(obs.sum()),
                    x_center=xc, x_scale=xs, y_center=yc, y_scale=ys)


def trend_values(surface, fit):
    """Fitted trend evaluated on the full grid."""
    x = (np.arange(surface.w) - fit.x_center) / fit.x_scale
    y = (np.arange(surface.h) - fit.y_center) / fit.y_scale
    A = _design(x, y)
    return (A @ fit.beta).reshape(surface.h, surface.w)


def remove_trend(surface, fit):
    """Replace observed heights by residuals; missingness is untouched."""
    fitted = trend_values(surface, fit)
    out = surface.heights - fitted    # NaN stays NaN
    return surface.with_heights(out)


def detrend(surface):
    """Convenience: fit and remove in one step."""
    fit = fit_trend(surface)
    return remove_trend(surface, fit), fit
