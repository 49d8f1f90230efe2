"""Representative signal extraction, CCF comparison, batch scoring and ROC.

The cross-correlation here is the statistical one: at every candidate lag
the overlapping, pairwise-observed samples are re-centered and re-scaled,
so the score is a per-lag Pearson correlation, invariant to constant
offsets and positive rescaling of either signal.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateClasses, EmptySurface, InsufficientOverlap,
                     ZeroVariance)
from .surface import PairCategory, ScanLabel, pair_category


@dataclass
class Signal:
    """1D profile of (x position um, optional height um) pairs."""

    x: np.ndarray
    values: np.ndarray          # NaN = missing
    source: object = None       # ScanLabel or free text

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.x.shape != self.values.shape or self.x.ndim != 1:
            raise ValueError("x and values must be 1D arrays of equal length")
        if len(self.x) >= 2:
            d = np.diff(self.x)
            if d.min() <= 0 or not np.allclose(d, d[0], rtol=1e-6, atol=0):
                raise ValueError("x must be strictly increasing with constant pitch")

    @property
    def pitch(self):
        return float(self.x[1] - self.x[0]) if len(self.x) >= 2 else 1.0

    @property
    def name(self):
        if self.source is None:
            return ""
        return str(self.source)

    def __len__(self):
        return len(self.x)


def extract_signal(surface, min_rows=10, stat="median", source=None):
    """Column-wise median (or mean) signal of a processed surface.

    Columns with fewer than ``min_rows`` observed cells become missing.
    """
    counts = (~surface.missing).sum(axis=0)
    if not (counts >= min_rows).any():
        raise EmptySurface(
            f"no column has >= {min_rows} observed values")
    reducer = np.nanmedian if stat == "median" else np.nanmean
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        vals = reducer(surface.heights, axis=0)
    vals = np.where(counts >= min_rows, vals, np.nan)
    return Signal(x=surface.x_coords(), values=vals, source=source)


@dataclass
class ComparisonResult:
    ccf_max: float
    lag_um: float
    overlap: int
    pair: tuple = ("", "")
    category: PairCategory = PairCategory.UNKNOWN

    def to_dict(self):
        return {"a": str(self.pair[0]), "b": str(self.pair[1]),
                "category": self.category.value,
                "ccf_max": self.ccf_max, "lag_um": self.lag_um,
                "overlap": self.overlap}


def _resample_to_pitch(sig, pitch):
    """Linear resampling onto a grid with the given pitch (NaN-aware)."""
    n = int(np.floor((sig.x[-1] - sig.x[0]) / pitch)) + 1
    x_new = sig.x[0] + pitch * np.arange(n)
    obs = ~np.isnan(sig.values)
    if obs.sum() < 2:
        return Signal(x=x_new, values=np.full(n, np.nan), source=sig.source)
    vals = np.interp(x_new, sig.x[obs], sig.values[obs],
                     left=np.nan, right=np.nan)
    # poison samples whose bracketing original samples were not both observed
    idx = np.clip(np.searchsorted(sig.x, x_new, side="right") - 1, 0, len(sig.x) - 2)
    bad = ~obs[idx] | ~obs[np.minimum(idx + 1, len(sig.x) - 1)]
    vals[bad] = np.nan
    return Signal(x=x_new, values=vals, source=sig.source)


def ccf_curve(a, b, min_overlap_frac=0.1):
    """Per-lag Pearson correlation curve between two equal-pitch signals.

    Returns ``(lags, r, n)`` where lags are integer sample offsets of b
    relative to a, r is the correlation (NaN at lags that were skipped for
    lack of overlap or zero variance) and n the pairwise-observed count.
    """
    va, vb = a.values, b.values
    la, lb = len(va), len(vb)
    min_olap = max(2, int(np.ceil(min_overlap_frac * min(la, lb))))
    lags = np.arange(-(lb - 1), la)
    rs = np.full(len(lags), np.nan)
    ns = np.zeros(len(lags), dtype=np.int64)
    for idx, k in enumerate(lags):
        j0 = max(0, -k)
        j1 = min(la, lb - k)
        if j1 - j0 < min_olap:
            continue
        xa = va[j0:j1]
        xb = vb[j0 + k:j1 + k]
        ok = ~np.isnan(xa) & ~np.isnan(xb)
        n = int(ok.sum())
        ns[idx] = n
        if n < min_olap:
            continue
        u = xa[ok] - xa[ok].mean()
        v = xb[ok] - xb[ok].mean()
        su = float(u @ u)
        sv = float(v @ v)
        if su <= 0 or sv <= 0:
            continue
        rs[idx] = float(u @ v) / np.sqrt(su * sv)
    return lags, rs, ns


def ccf_max(a, b, min_overlap_frac=0.1):
    """Maximized per-lag Pearson correlation between two signals.

    Lags run over all integer sample offsets where the pairwise-observed
    overlap reaches ``min_overlap_frac * min(len a, len b)`` samples. The
    reported lag is in physical units and includes any difference of the
    two x origins. Constant overlap windows are skipped; if every lag is
    skipped for that reason the comparison raises ZeroVariance, and if no
    lag ever reaches the minimum overlap it raises InsufficientOverlap.
    """
    if abs(b.pitch - a.pitch) > 1e-9 * max(abs(a.pitch), 1e-30):
        b = _resample_to_pitch(b, a.pitch)
    min_olap = max(2, int(np.ceil(min_overlap_frac * min(len(a), len(b)))))
    lags, rs, ns = ccf_curve(a, b, min_overlap_frac=min_overlap_frac)
    if np.isnan(rs).all():
        if (ns >= min_olap).any():
            raise ZeroVariance("every candidate overlap window is constant")
        raise InsufficientOverlap(
            f"no lag reaches the minimum overlap of {min_olap} samples")
    idx = int(np.nanargmax(rs))
    r, k, n = float(rs[idx]), int(lags[idx]), int(ns[idx])
    lag = k * a.pitch + (b.x[0] - a.x[0])
    return ComparisonResult(ccf_max=r, lag_um=float(lag), overlap=n,
                            pair=(a.name, b.name))


def batch_compare(signals, min_overlap_frac=0.1):
    """Score every unordered pair of signals.

    The CCF is symmetric, so the n(n-1)/2 unordered pairs carry the same
    information as the full ordered enumeration. Returns
    ``(results, failures)`` where failures is a list of
    ``((name_a, name_b), error_message)`` for pairs that could not be
    scored; failures never abort the batch.
    """
    if len(signals) < 2:
        raise ValueError("need at least 2 signals")
    results = []
    failures = []
    for i in range(len(signals)):
        for j in range(i + 1, len(signals)):
            a, b = signals[i], signals[j]
            try:
                res = ccf_max(a, b, min_overlap_frac=min_overlap_frac)
                res.pair = (a.name, b.name)
                res.category = _category_of(a.source, b.source)
                results.append(res)
            except Exception as e:
                failures.append(((a.name, b.name), f"{type(e).__name__}: {e}"))
    return results, failures


def _category_of(sa, sb):
    if isinstance(sa, ScanLabel) and isinstance(sb, ScanLabel) and sa != sb:
        return pair_category(sa, sb)
    return PairCategory.UNKNOWN


@dataclass
class RocSummary:
    thresholds: np.ndarray     # decreasing
    fpr: np.ndarray
    fnr: np.ndarray
    tpr: np.ndarray
    auc: float

    def to_dict(self):
        return {"thresholds": self.thresholds.tolist(),
                "fpr": self.fpr.tolist(), "fnr": self.fnr.tolist(),
                "tpr": self.tpr.tolist(), "auc": self.auc}


_NEGATIVE = {PairCategory.DIFFERENT_TOOL, PairCategory.SAME_TOOL_DIFFERENT_SITE}


def roc(results, include_same_tool_different_site=True):
    """ROC over pairwise scores: positive class is SameSource.

    The negative class is DifferentTool plus (by default) the ambiguous
    SameToolDifferentSite category. A pair scores positive when
    ccf_max >= threshold; thresholds sweep every distinct score.
    """
    negatives = {PairCategory.DIFFERENT_TOOL}
    if include_same_tool_different_site:
        negatives.add(PairCategory.SAME_TOOL_DIFFERENT_SITE)
    pos = np.array([r.ccf_max for r in results
                    if r.category is PairCategory.SAME_SOURCE])
    neg = np.array([r.ccf_max for r in results if r.category in negatives])
    if pos.size == 0 or neg.size == 0:
        raise DegenerateClasses(
            f"need both classes, got {pos.size} positives / {neg.size} negatives")

    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    tpr = np.array([(pos >= t).mean() for t in thresholds])
    fpr = np.array([(neg >= t).mean() for t in thresholds])
    fnr = 1.0 - tpr
    # trapezoid AUC through (0,0) and (1,1)
    fx = np.concatenate([[0.0], fpr, [1.0]])
    fy = np.concatenate([[0.0], tpr, [1.0]])
    trapezoid = getattr(np, "trapezoid", np.trapz)
    auc = float(trapezoid(fy, fx))
    return RocSummary(thresholds=thresholds, fpr=fpr, fnr=fnr, tpr=tpr, auc=auc)


# --- CSV / JSON serialization ------------------------------------------------

def write_signal_csv(sig, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x_um", "value_um"])
        for x, v in zip(sig.x, sig.values):
            wr.writerow([f"{x:.17g}", "NA" if np.isnan(v) else f"{v:.17g}"])


def read_signal_csv(path, source=None):
    xs, vs = [], []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or [c.strip() for c in header[:2]] != ["x_um", "value_um"]:
            raise ValueError(f"{path}: expected header 'x_um,value_um'")
        for row in rd:
            if not row:
                continue
            xs.append(float(row[0]))
            vs.append(np.nan if row[1].strip() == "NA" else float(row[1]))
    return Signal(x=np.array(xs), values=np.array(vs), source=source)


def write_results_csv(results, path):
    results = sorted(results, key=lambda r: (str(r.pair[0]), str(r.pair[1])))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["a", "b", "category", "ccf_max", "lag_um", "overlap"])
        for r in results:
            wr.writerow([r.pair[0], r.pair[1], r.category.value,
                         f"{r.ccf_max:.17g}", f"{r.lag_um:.17g}", r.overlap])


def read_results_csv(path):
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            out.append(ComparisonResult(
                ccf_max=float(row["ccf_max"]), lag_um=float(row["lag_um"]),
                overlap=int(row["overlap"]), pair=(row["a"], row["b"]),
                category=PairCategory(row["category"])))
    return out


def write_roc_csv(summary, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["threshold", "fpr", "fnr", "tpr"])
        for t, fp, fn, tp in zip(summary.thresholds, summary.fpr,
                                 summary.fnr, summary.tpr):
            wr.writerow([f"{t:.17g}", f"{fp:.17g}", f"{fn:.17g}", f"{tp:.17g}"])


def results_to_json(results, path=None):
    data = [r.to_dict() for r in sorted(
        results, key=lambda r: (str(r.pair[0]), str(r.pair[1])))]
    text = json.dumps(data, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
